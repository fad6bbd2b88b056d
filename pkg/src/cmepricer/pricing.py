"""American put pricing: low-rank kernel continuation engine, a
Longstaff-Schwartz baseline, Black-Scholes utilities, and verification
oracles.

Both American pricers work on pre-discounted payoffs
``P_k = exp(-r t_k) (K - S_k)^+``, so no discounting happens inside the
backward loops, and both carry realized cash flows backward with the
fitted continuation used only for the exercise decision.

The kernel pricer splits into an offline and an online phase.  Offline, the
low-rank conditional-expectation operator is trained once on the state
pairs at the last two monitoring dates (this is the expensive part: the
adaptive factorization of the transition-variable kernel matrix; the
operator is independent of the strike and is reused across an entire
strike grid).  Online, the backward induction estimates each date's
continuation by ridge regression with the same state kernel, applied to
standardized states and solved through the kernel's feature factorization;
per-date feature blocks are strike-independent and are prepared once.

Timing covers the pricing algorithm only; path simulation and state
extraction are excluded.  ``PricingResult.offline_micros`` reports the
share spent training the operator (zero when a prefit operator is
supplied).
"""

import time
from dataclasses import dataclass
from itertools import combinations_with_replacement
from math import comb, factorial

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.optimize import brentq
from scipy.stats import norm

from .cme import CmeOperator, fit_lowrank_cme, lowrank_error_bound
from .errors import InvalidContract, InvalidInput, PriceOutOfBounds
from .kernels import KernelSpec, SampleMatrix, kernel_diag, kernel_matrix_source, median_heuristic
from .lowrank import pivoted_cholesky
from .market import PathSet

__all__ = [
    "ContractSpec",
    "PricingResult",
    "BackwardBoundReport",
    "fit_pricing_operator",
    "price_american_cme",
    "price_american_ls",
    "price_strike_ladder",
    "price_european_mc",
    "black_scholes_put",
    "implied_vol_put",
    "binomial_american_put",
    "backward_bound_report",
]

IV_BRACKET = (1e-4, 5.0)
IV_TOL = 1e-10

POLY_KERNEL_X = KernelSpec("polynomial", degree=4, offset=1.0)

# Relative factorization tolerance of the per-date continuation ridge; tiny
# so that every numerically meaningful feature direction is retained.
STEP_EPSILON = 1e-10


@dataclass(frozen=True)
class ContractSpec:
    """An American put contract."""

    strike: float
    maturity: float
    kind: str = "put"

    def __post_init__(self):
        if self.strike <= 0:
            raise InvalidContract("strike must be positive")
        if self.maturity <= 0:
            raise InvalidContract("maturity must be positive")
        if self.kind != "put":
            raise InvalidContract(f"only puts are supported, got {self.kind!r}")


@dataclass
class PricingResult:
    price: float
    method: str
    elapsed_micros: int
    n_paths: int
    seed: int
    rank_x: int | None = None
    rank_y: int | None = None
    offline_micros: int = 0
    ridge_fallback: bool = False


@dataclass(frozen=True)
class BackwardBoundReport:
    """Computable part of the backward-recursion error bound.

    The statistical term involves unknown constants and is reported as
    non-computable; ``bound_lr_part`` is ``2 n_T kappa_x sqrt(delta_lr)``,
    with the squared Frobenius norm of the dense coefficient matrix
    replaced by its spectral upper estimate ``n / (n lam)^2``.
    """

    n_steps: int
    delta_lr: float
    kappa_x_empirical: float
    bound_lr_part: float
    frob_f_sq_is_upper_estimate: bool = True
    statistical_part: str = "not computable (unknown constants)"


def _discounted_payoffs(paths: PathSet, contract: ContractSpec, rate: float):
    """Payoff matrix ``exp(-r t_k) (K - S_k)^+``, one column per date."""
    times = paths.dt * np.arange(paths.n_steps + 1)
    return np.exp(-rate * times)[None, :] * np.maximum(contract.strike - paths.prices, 0.0)


def _states(paths: PathSet, k: int):
    return np.stack([paths.log_prices[:, k], paths.variances[:, k]], axis=1)


def fit_pricing_operator(paths, kernel_x=POLY_KERNEL_X, kernel_y=None, lam=None, epsilon=1e-5, bivariate_y=False):
    """Offline phase: train the low-rank operator on the last two dates.

    Training pairs are the full states at date ``n_T - 1`` against the
    transition variable at ``n_T`` (terminal log-price by default;
    ``bivariate_y=True`` keeps the variance coordinate as well).
    ``kernel_y`` defaults to a Matern-3/2 kernel with the median-heuristic
    lengthscale of the terminal log-prices; ``lam`` defaults to
    ``n_paths ** -0.5``.  The factorization tolerance ``epsilon`` is
    relative to each kernel-matrix trace (an absolute reading is
    unreachable in floating point for the unnormalized state kernel, whose
    trace grows far beyond the attainable Schur-complement reduction).
    """
    n, n_t = paths.n_paths, paths.n_steps
    if lam is None:
        lam = n**-0.5
    if kernel_y is None:
        kernel_y = KernelSpec("matern32", lengthscale=median_heuristic(paths.log_prices[:, n_t]))
    x_train = SampleMatrix(_states(paths, n_t - 1))
    if bivariate_y:
        y_train = SampleMatrix(_states(paths, n_t))
    else:
        y_train = SampleMatrix(paths.log_prices[:, n_t : n_t + 1].copy())
    return fit_lowrank_cme(x_train, y_train, kernel_x, kernel_y, lam=lam, epsilon=epsilon)


def _poly_feature_matrix(states, degree, offset):
    """Exact finite feature map of the polynomial kernel.

    ``(offset + x . x')^degree`` factorizes over the monomials of total
    degree at most ``degree``; the returned columns are those monomials
    with the multinomial weights, so plain ridge regression on them equals
    kernel ridge regression with the polynomial kernel.
    """
    n, dim = states.shape
    powers = [
        exps
        for total in range(degree + 1)
        for exps in _monomial_exponents(dim, total)
    ]
    cols = np.empty((n, len(powers)))
    for j, exps in enumerate(powers):
        total = sum(exps)
        weight = factorial(degree) / (factorial(degree - total) * np.prod([factorial(e) for e in exps]))
        weight *= offset ** (degree - total)
        col = np.full(n, np.sqrt(weight))
        for axis, e in enumerate(exps):
            if e:
                col = col * states[:, axis] ** e
        cols[:, j] = col
    return cols


def _monomial_exponents(dim, total):
    """All exponent tuples over ``dim`` variables summing to ``total``."""
    if total == 0:
        return [(0,) * dim]
    out = []
    for combo in combinations_with_replacement(range(dim), total):
        exps = [0] * dim
        for axis in combo:
            exps[axis] += 1
        out.append(tuple(exps))
    return out


class _StepRidge:
    """Per-date continuation regressions with the state kernel.

    States are standardized date by date (the raw coordinates differ by
    orders of magnitude, which pushes the informative directions of the
    unnormalized kernel matrix below floating-point resolution).  For the
    polynomial family the regression runs through the exact feature
    factorization; other families are compressed by pivoted Cholesky.
    The per-date design factorizations depend only on the paths, never on
    the payoff, so one instance serves a whole strike grid.
    """

    def __init__(self, paths, kernel, lam, step_epsilon=STEP_EPSILON, cache_limit_bytes=1 << 28):
        self._paths = paths
        self._kernel = kernel
        self._ridge = paths.n_paths * lam
        self._step_epsilon = step_epsilon
        self._cache = {}
        per_step = paths.n_paths * (comb(kernel.degree + 2, 2) + 2) * 8
        self._max_cached = max(int(cache_limit_bytes // max(per_step, 1)), 1)

    def _design(self, k):
        if k in self._cache:
            return self._cache[k]
        states = _states(self._paths, k)
        scale = states.std(axis=0)
        scale[scale < 1e-12] = 1.0
        normalized = (states - states.mean(axis=0)) / scale
        if self._kernel.family == "polynomial":
            design = _poly_feature_matrix(normalized, self._kernel.degree, self._kernel.offset)
        else:
            source = kernel_matrix_source(self._kernel, SampleMatrix(normalized))
            tolerance = self._step_epsilon * float(kernel_diag(self._kernel, normalized).sum())
            design = pivoted_cholesky(source, tolerance).cholesky
        gram = design.T @ design
        gram[np.diag_indices_from(gram)] += self._ridge
        entry = (design, cho_factor(gram, lower=True))
        if len(self._cache) < self._max_cached:
            self._cache[k] = entry
        return entry

    def continuation(self, k, targets):
        design, factor = self._design(k)
        return design @ cho_solve(factor, design.T @ targets)


def price_american_cme(
    paths,
    contract,
    rate=0.0,
    kernel_x=POLY_KERNEL_X,
    kernel_y=None,
    lam=None,
    epsilon=1e-5,
    operator=None,
    step_ridge=None,
):
    """Price an American put with the offline/online kernel engine.

    When ``operator`` (and optionally ``step_ridge``) are supplied, the
    offline phase is skipped and only the online backward induction runs;
    this is how a strike grid reuses one training pass.  Exercise happens
    where the immediate payoff is positive and at least the estimated
    continuation; cash flows are carried, and the result is
    ``max(P_0, mean carried value)``.
    """
    if abs(paths.maturity - contract.maturity) > 1e-9 * max(1.0, contract.maturity):
        raise InvalidContract("path grid does not cover the contract maturity")
    n, n_t = paths.n_paths, paths.n_steps
    if lam is None:
        lam = n**-0.5

    offline_micros = 0
    if operator is None:
        t0 = time.perf_counter_ns()
        operator = fit_pricing_operator(paths, kernel_x, kernel_y, lam=lam, epsilon=epsilon)
        step_ridge = _StepRidge(paths, kernel_x, lam)
        offline_micros = int((time.perf_counter_ns() - t0) // 1000)
    elif step_ridge is None:
        step_ridge = _StepRidge(paths, kernel_x, lam)

    t0 = time.perf_counter_ns()
    payoffs = _discounted_payoffs(paths, contract, rate)
    cash = payoffs[:, n_t].copy()
    for k in range(n_t - 1, 0, -1):
        immediate = payoffs[:, k]
        continuation = step_ridge.continuation(k, cash)
        exercise = (immediate > 0.0) & (immediate >= continuation)
        cash = np.where(exercise, immediate, cash)
    p0 = max(contract.strike - float(np.exp(paths.log_prices[0, 0])), 0.0)
    price = max(p0, float(cash.mean()))
    elapsed = int((time.perf_counter_ns() - t0) // 1000) + offline_micros
    return PricingResult(
        price=price,
        method="cme_lr",
        elapsed_micros=elapsed,
        n_paths=n,
        seed=paths.seed,
        rank_x=operator.rank_x,
        rank_y=operator.rank_y,
        offline_micros=offline_micros,
    )


def price_strike_ladder(
    paths,
    strikes,
    maturity,
    rate=0.0,
    kernel_x=POLY_KERNEL_X,
    kernel_y=None,
    lam=None,
    epsilon=1e-5,
    operator=None,
    step_ridge=None,
):
    """Price a whole strike ladder through one backward induction.

    The trained operator and the per-date design factorizations are
    payoff-independent, so all strikes share them; each date solves one
    multi-column ridge system.  Results carry the ladder's online time
    split equally across strikes (their work is genuinely joint) and the
    training time under ``offline_micros`` of every result.
    """
    strikes = np.asarray(strikes, dtype=float)
    if strikes.ndim != 1 or strikes.size < 1 or np.any(strikes <= 0):
        raise InvalidContract("strikes must be a nonempty 1-d array of positive values")
    if abs(paths.maturity - maturity) > 1e-9 * max(1.0, maturity):
        raise InvalidContract("path grid does not cover the contract maturity")
    n, n_t = paths.n_paths, paths.n_steps
    if lam is None:
        lam = n**-0.5

    offline_micros = 0
    if operator is None:
        t0 = time.perf_counter_ns()
        operator = fit_pricing_operator(paths, kernel_x, kernel_y, lam=lam, epsilon=epsilon)
        step_ridge = _StepRidge(paths, kernel_x, lam)
        offline_micros = int((time.perf_counter_ns() - t0) // 1000)
    elif step_ridge is None:
        step_ridge = _StepRidge(paths, kernel_x, lam)

    t0 = time.perf_counter_ns()
    discounts = np.exp(-rate * paths.dt * np.arange(n_t + 1))
    cash = discounts[n_t] * np.maximum(strikes[None, :] - paths.prices[:, n_t : n_t + 1], 0.0)
    for k in range(n_t - 1, 0, -1):
        immediate = discounts[k] * np.maximum(strikes[None, :] - paths.prices[:, k : k + 1], 0.0)
        continuation = step_ridge.continuation(k, cash)
        exercise = (immediate > 0.0) & (immediate >= continuation)
        cash = np.where(exercise, immediate, cash)
    s0 = float(np.exp(paths.log_prices[0, 0]))
    prices = np.maximum(np.maximum(strikes - s0, 0.0), cash.mean(axis=0))
    elapsed = int((time.perf_counter_ns() - t0) // 1000)
    share = elapsed // strikes.size
    return [
        PricingResult(
            price=float(price),
            method="cme_lr",
            elapsed_micros=int(share),
            n_paths=n,
            seed=paths.seed,
            rank_x=operator.rank_x,
            rank_y=operator.rank_y,
            offline_micros=offline_micros,
        )
        for price in prices
    ]


def _poly_design(states, degree):
    """Monomial design matrix over (log S, nu), total degree <= degree."""
    cols = [
        states[:, 0] ** a * states[:, 1] ** b
        for a in range(degree + 1)
        for b in range(degree + 1 - a)
    ]
    return np.column_stack(cols)


def price_american_ls(paths, contract, rate=0.0, degree=4):
    """Longstaff-Schwartz baseline with a bivariate polynomial basis.

    At each date the realized discounted cash flows of the in-the-money
    paths are regressed on all monomials of total degree up to ``degree``
    in ``(log S, nu)``; the fit decides exercise, cash flows are carried.
    A rank-deficient regression falls back to a tiny ridge and is flagged.
    """
    if degree < 1:
        raise InvalidInput("degree must be at least 1")
    n, n_t = paths.n_paths, paths.n_steps

    t0 = time.perf_counter_ns()
    payoffs = _discounted_payoffs(paths, contract, rate)
    cashflow = payoffs[:, n_t].copy()
    ridge_fallback = False
    for k in range(n_t - 1, 0, -1):
        immediate = payoffs[:, k]
        itm = immediate > 0.0
        if not itm.any():
            continue
        design = _poly_design(_states(paths, k)[itm], degree)
        beta, _, rank, _ = np.linalg.lstsq(design, cashflow[itm], rcond=None)
        if rank < design.shape[1]:
            ridge_fallback = True
            gram = design.T @ design
            gram[np.diag_indices_from(gram)] += 1e-10
            beta = np.linalg.solve(gram, design.T @ cashflow[itm])
        continuation = design @ beta
        exercise = immediate[itm] >= continuation
        itm_idx = np.flatnonzero(itm)[exercise]
        cashflow[itm_idx] = immediate[itm_idx]
    p0 = max(contract.strike - float(np.exp(paths.log_prices[0, 0])), 0.0)
    price = max(p0, float(cashflow.mean()))
    elapsed = int((time.perf_counter_ns() - t0) // 1000)
    return PricingResult(
        price=price,
        method="ls",
        elapsed_micros=elapsed,
        n_paths=n,
        seed=paths.seed,
        ridge_fallback=ridge_fallback,
    )


def price_european_mc(terminal_log_prices, contract, rate=0.0):
    """Plain Monte Carlo European put price and its standard error."""
    payoff = np.exp(-rate * contract.maturity) * np.maximum(
        contract.strike - np.exp(np.asarray(terminal_log_prices)), 0.0
    )
    n = payoff.size
    return float(payoff.mean()), float(payoff.std(ddof=1) / np.sqrt(n))


def black_scholes_put(s, k, r, sigma, maturity):
    """Closed-form European put; zero vol or zero maturity returns the
    discounted intrinsic value."""
    if s <= 0 or k <= 0:
        raise InvalidInput("spot and strike must be positive")
    if sigma < 0 or maturity < 0:
        raise InvalidInput("sigma and maturity must be nonnegative")
    if sigma == 0.0 or maturity == 0.0:
        return max(k * np.exp(-r * maturity) - s, 0.0)
    total_vol = sigma * np.sqrt(maturity)
    d1 = (np.log(s / k) + (r + 0.5 * sigma**2) * maturity) / total_vol
    d2 = d1 - total_vol
    return float(k * np.exp(-r * maturity) * norm.cdf(-d2) - s * norm.cdf(-d1))


def implied_vol_put(price, s, k, r, maturity):
    """Invert the Black-Scholes put formula by bracketing root-finding.

    The price must lie strictly inside the no-arbitrage band
    ``(max(k e^{-rT} - s, 0), k e^{-rT})`` and be attainable for a vol in
    the search bracket; otherwise :class:`PriceOutOfBounds` is raised.
    """
    lower = max(k * np.exp(-r * maturity) - s, 0.0)
    upper = k * np.exp(-r * maturity)
    if not lower < price < upper:
        raise PriceOutOfBounds(f"price {price} outside no-arbitrage band ({lower}, {upper})")
    lo, hi = IV_BRACKET
    f_lo = black_scholes_put(s, k, r, lo, maturity) - price
    f_hi = black_scholes_put(s, k, r, hi, maturity) - price
    if f_lo > 0 or f_hi < 0:
        raise PriceOutOfBounds(f"price {price} not attainable for vol in [{lo}, {hi}]")
    return float(brentq(lambda sig: black_scholes_put(s, k, r, sig, maturity) - price, lo, hi, xtol=IV_TOL))


def binomial_american_put(s, k, r, sigma, maturity, steps):
    """Cox-Ross-Rubinstein tree for the American put (verification oracle)."""
    if steps < 1:
        raise InvalidInput("steps must be at least 1")
    if sigma <= 0 or s <= 0 or k <= 0 or maturity <= 0:
        raise InvalidInput("need positive spot, strike, vol and maturity")
    dt = maturity / steps
    up = np.exp(sigma * np.sqrt(dt))
    down = 1.0 / up
    growth = np.exp(r * dt)
    prob = (growth - down) / (up - down)
    if not 0.0 < prob < 1.0:
        raise InvalidInput("tree is not arbitrage-free for these parameters (refine steps)")
    disc = np.exp(-r * dt)

    prices = s * up ** np.arange(steps + 1) * down ** np.arange(steps, -1, -1)
    values = np.maximum(k - prices, 0.0)
    for level in range(steps - 1, -1, -1):
        prices = prices[1 : level + 2] * down
        values = disc * (prob * values[1 : level + 2] + (1.0 - prob) * values[: level + 1])
        values = np.maximum(values, k - prices)
    return float(values[0])


def backward_bound_report(op: CmeOperator, n_steps):
    """Bound report for a fitted operator over ``n_steps`` exercise dates.

    The factorization tolerance is trace-relative, so the bound uses the
    larger of the two absolute tolerances actually requested.
    """
    frob_upper = op.n_train / (op.n_train * op.lam) ** 2
    eps_abs = op.epsilon * max(op.trace_kx, op.trace_ky)
    bound = lowrank_error_bound(eps_abs, op.lam, op.n_train, op.trace_kx, op.trace_ky, frob_upper)
    part = 2.0 * n_steps * op.kappa_x * np.sqrt(bound.delta_lr)
    return BackwardBoundReport(
        n_steps=int(n_steps),
        delta_lr=bound.delta_lr,
        kappa_x_empirical=op.kappa_x,
        bound_lr_part=float(part),
    )
