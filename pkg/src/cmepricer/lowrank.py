"""Adaptive pivoted Cholesky factorization with a biorthogonal basis.

The factorization visits a symmetric positive semidefinite matrix through a
:class:`PsdMatrixSource` (diagonal plus single columns), so the full matrix
is never assembled.  Alongside the Cholesky factor ``L`` it builds the
biorthogonal matrix ``B`` satisfying ``B.T @ L == I`` and ``K @ B == L``;
``B`` has nonzero rows only at the pivot indices and is therefore stored as
a dense block over those rows.  A subsequent spectral rotation of ``L.T @ L``
yields the basis ``Q = B @ V`` that is orthonormal in the RKHS inner product
and diagonalizes the empirical second-moment form.
"""

import abc
from dataclasses import dataclass

import numpy as np

from .errors import InvalidTolerance, NonPsdInput

__all__ = [
    "PsdMatrixSource",
    "DenseMatrixSource",
    "LowRankFactors",
    "SpectralBasis",
    "pivoted_cholesky",
    "spectral_rotation",
]

# Relative band of negative diagonal entries attributed to roundoff; entries
# below -NEG_CLAMP_REL * trace trigger NonPsdInput, entries inside the band
# are clamped to zero and excluded from pivot selection.
NEG_CLAMP_REL = 1e-12


class PsdMatrixSource(abc.ABC):
    """On-demand accessor for a symmetric PSD matrix."""

    @property
    @abc.abstractmethod
    def dim(self) -> int:
        """Matrix dimension n."""

    @abc.abstractmethod
    def diag(self, i: int) -> float:
        """Diagonal entry ``K[i, i]``."""

    @abc.abstractmethod
    def column(self, i: int) -> np.ndarray:
        """Column ``K[:, i]`` as a length-n vector."""

    def diagonal(self) -> np.ndarray:
        """Full diagonal; override when a bulk evaluation is cheaper."""
        return np.array([self.diag(i) for i in range(self.dim)])


class DenseMatrixSource(PsdMatrixSource):
    """Adapter exposing an in-memory symmetric matrix as a source."""

    def __init__(self, matrix):
        matrix = np.asarray(matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise NonPsdInput(f"expected a square matrix, got shape {matrix.shape}")
        self._matrix = matrix

    @property
    def dim(self):
        return self._matrix.shape[0]

    def diag(self, i):
        return float(self._matrix[i, i])

    def column(self, i):
        return self._matrix[:, i].copy()

    def diagonal(self):
        return np.diag(self._matrix).copy()


@dataclass(frozen=True)
class LowRankFactors:
    """Output of :func:`pivoted_cholesky`.

    ``pivot_block`` holds the nonzero rows of the biorthogonal matrix ``B``:
    row ``j`` of the block is row ``pivots[j]`` of ``B``.  All other rows of
    ``B`` are zero.
    """

    cholesky: np.ndarray      # L, shape (n, m)
    pivot_block: np.ndarray   # rows of B at the pivot indices, shape (m, m)
    pivots: np.ndarray        # pivot indices in selection order, shape (m,)
    residual_trace: float     # trace of the final Schur complement
    tolerance: float

    @property
    def n(self) -> int:
        return self.cholesky.shape[0]

    @property
    def rank(self) -> int:
        return self.cholesky.shape[1]

    def dense_b(self) -> np.ndarray:
        """Materialize B as a dense (n, m) matrix (test/diagnostic use)."""
        b = np.zeros_like(self.cholesky)
        b[self.pivots] = self.pivot_block
        return b


@dataclass(frozen=True)
class SpectralBasis:
    """Rotation of a factorization into the double-orthogonal basis Q = B V."""

    rotation: np.ndarray      # V, shape (m, m), orthogonal
    eigenvalues: np.ndarray   # of L.T @ L, descending, shape (m,)
    q_block: np.ndarray       # rows of Q at the pivot indices, shape (m, m)
    pivots: np.ndarray
    n: int

    @property
    def rank(self) -> int:
        return self.rotation.shape[0]

    def dense_q(self) -> np.ndarray:
        q = np.zeros((self.n, self.rank))
        q[self.pivots] = self.q_block
        return q


def pivoted_cholesky(source, tolerance, max_rank=None):
    """Greedy pivoted Cholesky factorization of a PSD matrix source.

    At each step the pivot is the largest entry of the current Schur
    complement diagonal (ties broken by smallest index).  The loop stops
    once the remaining diagonal sums to at most ``tolerance``, when
    ``max_rank`` columns have been selected, or when all remaining pivots
    sit at numerical noise level (in which case ``residual_trace`` reports
    the achieved value, which may exceed an unattainably small tolerance).

    Exactly one column of the source is requested per accepted pivot.
    """
    if tolerance < 0:
        raise InvalidTolerance(f"tolerance must be nonnegative, got {tolerance}")
    n = source.dim
    if max_rank is None:
        max_rank = n
    max_rank = min(int(max_rank), n)
    if max_rank < 1:
        raise InvalidTolerance("max_rank must be at least 1")

    d = np.asarray(source.diagonal(), dtype=float).copy()
    trace0 = float(d.sum())
    neg_floor = -NEG_CLAMP_REL * max(trace0, np.finfo(float).tiny)
    # Pivots at or below this level are indistinguishable from roundoff in
    # the Schur complement update and are never accepted.
    pivot_floor = max(n, 64) * np.finfo(float).eps * float(d.max(initial=0.0))

    if np.any(d < neg_floor):
        raise NonPsdInput("negative diagonal entry exceeds roundoff band")
    d[d < 0] = 0.0

    capacity = min(32, max_rank)
    ell = np.zeros((n, capacity))
    block = np.zeros((capacity, capacity))
    pivot_rows = np.zeros((capacity, capacity))  # rows of L at the pivots
    pivots = []

    m = 0
    err = float(d.sum())
    while err > tolerance and m < max_rank:
        p = int(np.argmax(d))
        dp = float(d[p])
        if dp <= pivot_floor:
            break
        if m == capacity:
            capacity = min(2 * capacity, max_rank)
            ell = np.concatenate([ell, np.zeros((n, capacity - m))], axis=1)
            grown = np.zeros((capacity, capacity))
            grown[:m, :m] = block[:m, :m]
            block = grown
            grown = np.zeros((capacity, capacity))
            grown[:m, :m] = pivot_rows[:m, :m]
            pivot_rows = grown
        root = np.sqrt(dp)
        col = np.asarray(source.column(p), dtype=float)
        if col.shape != (n,):
            raise NonPsdInput(f"source column {p} has shape {col.shape}, expected ({n},)")
        new_ell = (col - ell[:, :m] @ ell[p, :m]) / root
        ell[:, m] = new_ell
        block[:m, m] = -(block[:m, :m] @ ell[p, :m]) / root
        block[m, m] = 1.0 / root
        if m:
            pivot_rows[:m, m] = new_ell[pivots]
        pivot_rows[m, :m] = ell[p, :m]
        pivot_rows[m, m] = new_ell[p]
        if m:
            # one refinement pass per direction keeps B and L biorthogonal
            # despite the 1/sqrt(pivot) amplification of roundoff: first the
            # new basis column against the previous Cholesky columns, then
            # the previous basis columns against the new Cholesky column
            drift = block[: m + 1, m] @ pivot_rows[: m + 1, :m]
            block[: m + 1, m] -= block[: m + 1, :m] @ drift
            drift = pivot_rows[: m + 1, m] @ block[: m + 1, :m]
            block[: m + 1, :m] -= np.outer(block[: m + 1, m], drift)
        pivots.append(p)

        d -= new_ell * new_ell
        d[p] = 0.0
        if np.any(d < neg_floor):
            raise NonPsdInput("Schur complement diagonal went negative beyond roundoff band")
        d[d < 0] = 0.0
        err = float(d.sum())
        m += 1

    if m == 0:
        # Diagonal mass was already at or below tolerance; rank-0 result.
        return LowRankFactors(
            cholesky=np.zeros((n, 0)),
            pivot_block=np.zeros((0, 0)),
            pivots=np.zeros(0, dtype=int),
            residual_trace=err,
            tolerance=float(tolerance),
        )
    return LowRankFactors(
        cholesky=ell[:, :m].copy(),
        pivot_block=block[:m, :m].copy(),
        pivots=np.asarray(pivots, dtype=int),
        residual_trace=err,
        tolerance=float(tolerance),
    )


def spectral_rotation(factors):
    """Eigendecomposition ``V diag(w) V.T = L.T L`` and the basis Q = B V.

    Eigenvalues are sorted descending and each eigenvector is signed so
    that its largest-magnitude component is positive.
    """
    ell = factors.cholesky
    if ell.shape[1] < 1:
        raise InvalidTolerance("cannot rotate an empty factorization")
    gram = ell.T @ ell
    w, v = np.linalg.eigh(gram)
    order = np.argsort(w)[::-1]
    w = np.maximum(w[order], 0.0)
    v = v[:, order]
    flip = v[np.abs(v).argmax(axis=0), np.arange(v.shape[1])] < 0
    v[:, flip] *= -1.0
    return SpectralBasis(
        rotation=v,
        eigenvalues=w,
        q_block=factors.pivot_block @ v,
        pivots=factors.pivots,
        n=factors.n,
    )
