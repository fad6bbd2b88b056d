"""Conditional-expectation operators on reproducing kernel Hilbert spaces.

Two estimators are provided.  The full-rank operator inverts the regularized
kernel matrix ``(K_X + n*lam*I)`` and serves as a dense oracle at moderate
sample sizes.  The low-rank operator factorizes ``K_X`` and ``K_Y`` by
pivoted Cholesky, rotates into the double-orthogonal bases, and solves the
reduced least-squares problem in closed form:

    coeff = (L_Y V_Y).T (L_X V_X) (Lambda_X + n*lam*I)^{-1}

Predictions contract a vector of function values at the training outputs
against the operator and the feature vector of the query point; thanks to
the row sparsity of the biorthogonal bases this touches only the pivot
training states.
"""

import json
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import DegenerateSample, DimensionMismatch, InvalidInput, SingularSystem
from .kernels import KernelSpec, SampleMatrix, kernel_cross, kernel_diag, kernel_matrix_source
from .lowrank import pivoted_cholesky, spectral_rotation

__all__ = [
    "FullCmeOperator",
    "CmeOperator",
    "LowRankErrorBound",
    "fit_full_cme",
    "fit_lowrank_cme",
    "apply_cme",
    "project_full_to_lowrank",
    "hnorm_sq_difference",
    "lowrank_error_bound",
]

# The dense operator is a test/oracle tool; production sizes go low-rank.
FULL_RANK_CAP = 5000

# Queries are evaluated in blocks to bound transient memory; no semantic
# effect.
QUERY_BLOCK = 4096


@dataclass(frozen=True)
class FullCmeOperator:
    """Dense conditional-expectation operator ``F = (K_X + n lam I)^{-1}``."""

    inverse: np.ndarray
    x_train: SampleMatrix
    y_train: SampleMatrix
    kernel_x: KernelSpec
    lam: float

    @property
    def n_train(self) -> int:
        return self.inverse.shape[0]

    def predict(self, f_values, queries, block=QUERY_BLOCK):
        """Conditional-mean predictions ``f -> E[f(Y) | X = query]``."""
        f_values = np.asarray(f_values, dtype=float)
        if f_values.shape != (self.n_train,):
            raise DimensionMismatch(f"expected {self.n_train} function values, got {f_values.shape}")
        queries = np.atleast_2d(np.asarray(queries, dtype=float))
        if queries.shape[1] != self.x_train.dim:
            raise DimensionMismatch(f"query dimension {queries.shape[1]} != training dimension {self.x_train.dim}")
        weights = f_values @ self.inverse
        out = np.empty(queries.shape[0])
        for start in range(0, queries.shape[0], block):
            chunk = queries[start : start + block]
            out[start : start + block] = kernel_cross(self.kernel_x, chunk, self.x_train.points) @ weights
        return out


@dataclass(frozen=True)
class CmeOperator:
    """Trained low-rank conditional-expectation operator.

    ``q_block_x`` / ``q_block_y`` are the nonzero rows of the basis matrices
    ``Q_X`` / ``Q_Y`` (rows at the pivot indices).  Evaluation needs kernel
    values only against ``pivot_states_x`` and function values only at
    ``pivot_indices_y``.
    """

    q_block_x: np.ndarray        # (m_x, m_x)
    q_block_y: np.ndarray        # (m_y, m_y)
    coeff: np.ndarray            # (m_y, m_x)
    eigenvalues_x: np.ndarray    # (m_x,)
    pivot_states_x: np.ndarray   # (m_x, d)
    pivot_indices_y: np.ndarray  # (m_y,)
    kernel_x: KernelSpec
    lam: float
    epsilon: float
    n_train: int
    trace_kx: float
    trace_ky: float
    kappa_x: float               # max over training inputs of sqrt(k_x(x, x))

    @property
    def rank_x(self) -> int:
        return self.q_block_x.shape[0]

    @property
    def rank_y(self) -> int:
        return self.q_block_y.shape[0]

    def save(self, path):
        """Serialize to a flat ``.npz`` record (arrays plus a JSON header)."""
        meta = {
            "kernel_x": dict(vars(self.kernel_x)),
            "lam": self.lam,
            "epsilon": self.epsilon,
            "n_train": self.n_train,
            "trace_kx": self.trace_kx,
            "trace_ky": self.trace_ky,
            "kappa_x": self.kappa_x,
        }
        with open(path, "wb") as fh:
            np.savez(
                fh,
                q_block_x=self.q_block_x,
                q_block_y=self.q_block_y,
                coeff=self.coeff,
                eigenvalues_x=self.eigenvalues_x,
                pivot_states_x=self.pivot_states_x,
                pivot_indices_y=self.pivot_indices_y,
                meta=np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8),
            )

    @classmethod
    def load(cls, path):
        with np.load(path) as data:
            meta = json.loads(bytes(data["meta"]).decode())
            return cls(
                q_block_x=data["q_block_x"],
                q_block_y=data["q_block_y"],
                coeff=data["coeff"],
                eigenvalues_x=data["eigenvalues_x"],
                pivot_states_x=data["pivot_states_x"],
                pivot_indices_y=data["pivot_indices_y"],
                kernel_x=KernelSpec(**meta["kernel_x"]),
                lam=meta["lam"],
                epsilon=meta["epsilon"],
                n_train=meta["n_train"],
                trace_kx=meta["trace_kx"],
                trace_ky=meta["trace_ky"],
                kappa_x=meta["kappa_x"],
            )


@dataclass(frozen=True)
class LowRankErrorBound:
    """Explicit bound on the squared H-norm gap between the dense and
    low-rank operators."""

    delta_lr: float
    epsilon: float
    lam: float
    n: int
    trace_kx: float
    trace_ky: float
    frob_f_sq: float


def fit_full_cme(x_train, y_train, kernel_x, lam):
    """Dense operator ``(K_X + n lam I)^{-1}`` via a symmetric solve."""
    if x_train.n != y_train.n:
        raise DimensionMismatch(f"sample counts differ: {x_train.n} vs {y_train.n}")
    if lam <= 0:
        raise InvalidInput("regularization must be positive")
    n = x_train.n
    if n > FULL_RANK_CAP:
        raise InvalidInput(f"full-rank operator capped at n = {FULL_RANK_CAP} (oracle use only)")
    gram = kernel_cross(kernel_x, x_train.points, x_train.points)
    gram[np.diag_indices(n)] += n * lam
    try:
        inverse = cho_solve(cho_factor(gram, lower=True), np.eye(n))
    except np.linalg.LinAlgError as exc:  # cannot happen for lam > 0 and PSD K_X
        raise SingularSystem(str(exc)) from exc
    inverse = 0.5 * (inverse + inverse.T)
    return FullCmeOperator(inverse=inverse, x_train=x_train, y_train=y_train, kernel_x=kernel_x, lam=float(lam))


def fit_lowrank_cme(x_train, y_train, kernel_x, kernel_y, lam, epsilon, max_rank=None):
    """Fit the low-rank operator by factorizing both kernel matrices.

    Runs pivoted Cholesky on ``K_X`` and ``K_Y``, rotates each factor into
    its spectral basis, and assembles the reduced coefficient matrix.
    ``epsilon`` is relative: each matrix is factorized until its remaining
    Schur-complement trace is at most ``epsilon`` times its trace (an
    absolute tolerance is meaningless across kernels whose diagonal scales
    differ by orders of magnitude).  Cost is dominated by
    ``O(n * (m_x^2 + m_y^2))`` factorization work and one ``O(n m_x m_y)``
    product; no n-by-n matrix is formed.
    """
    if x_train.n != y_train.n:
        raise DimensionMismatch(f"sample counts differ: {x_train.n} vs {y_train.n}")
    if lam <= 0 or epsilon < 0:
        raise InvalidInput("need lam > 0 and epsilon >= 0")
    n = x_train.n

    diag_x = kernel_diag(kernel_x, x_train.points)
    trace_x = float(diag_x.sum())
    trace_y = float(kernel_diag(kernel_y, y_train.points).sum())
    factors_x = pivoted_cholesky(kernel_matrix_source(kernel_x, x_train), epsilon * trace_x, max_rank)
    factors_y = pivoted_cholesky(kernel_matrix_source(kernel_y, y_train), epsilon * trace_y, max_rank)
    if factors_x.rank == 0 or factors_y.rank == 0:
        raise DegenerateSample("tolerance swallowed the whole kernel matrix; no basis left")
    basis_x = spectral_rotation(factors_x)
    basis_y = spectral_rotation(factors_y)

    cross = factors_y.cholesky.T @ factors_x.cholesky
    coeff = (basis_y.rotation.T @ cross @ basis_x.rotation) / (basis_x.eigenvalues + n * lam)[None, :]

    return CmeOperator(
        q_block_x=basis_x.q_block,
        q_block_y=basis_y.q_block,
        coeff=coeff,
        eigenvalues_x=basis_x.eigenvalues,
        pivot_states_x=x_train.points[factors_x.pivots].copy(),
        pivot_indices_y=factors_y.pivots.copy(),
        kernel_x=kernel_x,
        lam=float(lam),
        epsilon=float(epsilon),
        n_train=n,
        trace_kx=trace_x,
        trace_ky=trace_y,
        kappa_x=float(np.sqrt(diag_x.max())),
    )


def apply_cme(op, f_values, queries, block=QUERY_BLOCK):
    """Predictions of the low-rank operator at the query states.

    Folds the function values through the output basis once (``O(m_y^2)``),
    then evaluates each query against the pivot states only
    (``O(m_x m_y)`` per query after the fold).
    """
    f_values = np.asarray(f_values, dtype=float)
    if f_values.shape != (op.n_train,):
        raise DimensionMismatch(f"expected {op.n_train} function values, got {f_values.shape}")
    queries = np.atleast_2d(np.asarray(queries, dtype=float))
    if queries.shape[1] != op.pivot_states_x.shape[1]:
        raise DimensionMismatch(
            f"query dimension {queries.shape[1]} != training dimension {op.pivot_states_x.shape[1]}"
        )
    folded = f_values[op.pivot_indices_y] @ op.q_block_y
    weights = op.q_block_x @ (folded @ op.coeff)
    out = np.empty(queries.shape[0])
    for start in range(0, queries.shape[0], block):
        chunk = queries[start : start + block]
        out[start : start + block] = kernel_cross(op.kernel_x, chunk, op.pivot_states_x) @ weights
    return out


def project_full_to_lowrank(full, factors_x, basis_x, factors_y, basis_y):
    """Coefficients of the H-orthogonal projection of the dense operator
    onto the low-rank subspace: ``(L_Y V_Y).T F (L_X V_X)``."""
    if factors_x.n != full.n_train or factors_y.n != full.n_train:
        raise DimensionMismatch("factorizations do not match the operator's training size")
    left = factors_y.cholesky @ basis_y.rotation
    right = factors_x.cholesky @ basis_x.rotation
    return left.T @ full.inverse @ right


def hnorm_sq_difference(a_coeffs, b_coeffs, gram_x, gram_y):
    """Squared H-norm of the difference of two bilinear-form estimators.

    Both operators must be expressed over the canonical feature bases, as
    n-by-n coefficient matrices; the norm is the trace form
    ``trace((A - B).T K_Y (A - B) K_X)``.  Dense test-scale tool.
    """
    a = np.asarray(a_coeffs, dtype=float)
    b = np.asarray(b_coeffs, dtype=float)
    gram_x = np.asarray(gram_x, dtype=float)
    gram_y = np.asarray(gram_y, dtype=float)
    n = gram_x.shape[0]
    if a.shape != (n, n) or b.shape != a.shape or gram_y.shape != (n, n):
        raise DimensionMismatch("all matrices must be n-by-n over the same sample")
    diff = a - b
    value = float(np.sum(diff * (gram_y @ diff @ gram_x)))
    return max(value, 0.0)


def lowrank_error_bound(epsilon, lam, n, trace_kx, trace_ky, frob_f_sq):
    """Compose the explicit low-rank error bound from its ingredients."""
    if min(trace_kx, trace_ky, frob_f_sq, epsilon) < 0:
        raise InvalidInput("traces, epsilon and the squared Frobenius norm must be nonnegative")
    if lam <= 0 or n <= 0:
        raise InvalidInput("need lam > 0 and n > 0")
    delta = epsilon * frob_f_sq * (trace_kx + trace_ky) + epsilon**2 / (n * lam) ** 4 * trace_kx * trace_ky
    return LowRankErrorBound(
        delta_lr=float(delta),
        epsilon=float(epsilon),
        lam=float(lam),
        n=int(n),
        trace_kx=float(trace_kx),
        trace_ky=float(trace_ky),
        frob_f_sq=float(frob_f_sq),
    )
