"""Heston state-path simulation with deterministic, seedable streams.

Discretization is the full-truncation Euler-Maruyama scheme on
``(log S, nu)``: the positive part of the variance enters both drift and
diffusion, and the stored variance is floored at ``VARIANCE_FLOOR`` after
every step.  Path ``i`` consumes the Philox stream keyed by ``(seed, i)``
(see :mod:`cmepricer.rng`), so results are bit-reproducible and unchanged
for the leading paths when the path count grows.
"""

import struct
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import IndexOutOfRange, InvalidInput, InvalidMaturity, InvalidParams
from .rng import standard_normals

__all__ = [
    "HestonParams",
    "PathSet",
    "monitoring_steps",
    "simulate_heston",
    "simulate_terminal_logprice",
    "experiment_seed",
    "save_paths",
    "load_paths",
]

VARIANCE_FLOOR = 1e-8

_HEADER = struct.Struct("<4sIII")
_MAGIC = b"HPTH"
_VERSION = 1

# Chunk of paths advanced at a time; bounds transient memory only.
_SIM_CHUNK = 1 << 17


@dataclass(frozen=True)
class HestonParams:
    """Model parameters; defaults are the benchmark configuration."""

    s0: float = 100.0
    v0: float = 0.04
    r: float = 0.0
    kappa: float = 2.0
    theta: float = 0.04
    xi: float = 0.3
    rho: float = -0.7

    def __post_init__(self):
        if self.s0 <= 0:
            raise InvalidParams("s0 must be positive")
        if self.v0 < 0 or self.kappa < 0 or self.theta < 0 or self.xi < 0:
            raise InvalidParams("v0, kappa, theta and xi must be nonnegative")
        if not -1.0 <= self.rho <= 1.0:
            raise InvalidParams("rho must lie in [-1, 1]")


@dataclass(frozen=True)
class PathSet:
    """Simulated log-price and variance paths on a uniform time grid."""

    log_prices: np.ndarray  # (n_paths, n_steps + 1)
    variances: np.ndarray   # (n_paths, n_steps + 1), floored
    dt: float
    seed: int

    @property
    def n_paths(self) -> int:
        return self.log_prices.shape[0]

    @property
    def n_steps(self) -> int:
        return self.log_prices.shape[1] - 1

    @property
    def maturity(self) -> float:
        return self.dt * self.n_steps

    @cached_property
    def prices(self) -> np.ndarray:
        """Price paths ``exp(log_prices)``, materialized on first use."""
        return np.exp(self.log_prices)


def monitoring_steps(maturity):
    """Number of monitoring dates: ``max(20, floor(52 T))`` (roughly weekly)."""
    if maturity <= 0:
        raise InvalidMaturity(f"maturity must be positive, got {maturity}")
    return max(20, int(np.floor(52.0 * maturity)))


def _advance(params, log_s, v, z, dt):
    """One full-truncation Euler step applied in place; z is (n, 2)."""
    z_v = z[:, 0]
    z_s = params.rho * z_v + np.sqrt(1.0 - params.rho**2) * z[:, 1]
    v_plus = np.maximum(v, 0.0)
    root_vdt = np.sqrt(v_plus * dt)
    log_s += (params.r - 0.5 * v_plus) * dt + root_vdt * z_s
    v_next = v + params.kappa * (params.theta - v_plus) * dt + params.xi * root_vdt * z_v
    np.maximum(v_next, VARIANCE_FLOOR, out=v_next)
    return log_s, v_next


def simulate_heston(params, n_paths, maturity, seed, n_steps=None):
    """Simulate a :class:`PathSet` of ``n_paths`` paths up to ``maturity``.

    ``n_steps`` defaults to :func:`monitoring_steps`.  Identical arguments
    produce bit-identical output.
    """
    if n_paths < 1:
        raise InvalidInput("n_paths must be at least 1")
    if n_steps is None:
        n_steps = monitoring_steps(maturity)
    elif n_steps < 1:
        raise InvalidInput("n_steps must be at least 1")
    elif maturity <= 0:
        raise InvalidMaturity(f"maturity must be positive, got {maturity}")
    dt = maturity / n_steps

    log_prices = np.empty((n_paths, n_steps + 1))
    variances = np.empty((n_paths, n_steps + 1))
    log_prices[:, 0] = np.log(params.s0)
    variances[:, 0] = max(params.v0, VARIANCE_FLOOR)

    for start in range(0, n_paths, _SIM_CHUNK):
        stop = min(start + _SIM_CHUNK, n_paths)
        z = standard_normals(seed, stop - start, 2 * n_steps, start)
        z = z.reshape(stop - start, n_steps, 2)
        log_s = log_prices[start:stop, 0].copy()
        v = variances[start:stop, 0].copy()
        for k in range(n_steps):
            log_s, v = _advance(params, log_s, v, z[:, k, :], dt)
            log_prices[start:stop, k + 1] = log_s
            variances[start:stop, k + 1] = v
    return PathSet(log_prices=log_prices, variances=variances, dt=dt, seed=int(seed))


def simulate_terminal_logprice(params, n_paths, maturity, seed, n_steps=None):
    """Terminal log-prices only, streamed in chunks (for large references).

    Path ``i`` is identical to path ``i`` of :func:`simulate_heston` called
    with the same arguments.
    """
    if n_paths < 1:
        raise InvalidInput("n_paths must be at least 1")
    if n_steps is None:
        n_steps = monitoring_steps(maturity)
    dt = maturity / n_steps
    out = np.empty(n_paths)
    for start in range(0, n_paths, _SIM_CHUNK):
        stop = min(start + _SIM_CHUNK, n_paths)
        z = standard_normals(seed, stop - start, 2 * n_steps, start)
        z = z.reshape(stop - start, n_steps, 2)
        log_s = np.full(stop - start, np.log(params.s0))
        v = np.full(stop - start, max(params.v0, VARIANCE_FLOOR))
        for k in range(n_steps):
            log_s, v = _advance(params, log_s, v, z[:, k, :], dt)
        out[start:stop] = log_s
    return out


def experiment_seed(rep, n_index, t_index):
    """Seed lane for replication ``rep`` at grid cell ``(n_index, t_index)``."""
    if rep < 0 or n_index < 0 or t_index < 0:
        raise IndexOutOfRange("indices must be nonnegative")
    if n_index >= 4 or t_index >= 4:
        raise IndexOutOfRange("n_index and t_index must be below 4")
    return rep * 16 + n_index * 4 + t_index


def save_paths(paths, file):
    """Dump a :class:`PathSet` to a flat columnar binary file.

    Layout: 16-byte header ``(magic 'HPTH', version u32, n_paths u32,
    n_steps u32)``, then ``dt`` as float64 and ``seed`` as uint64, then the
    log-price matrix and the variance matrix, each row-major float64.
    """
    header = _HEADER.pack(_MAGIC, _VERSION, paths.n_paths, paths.n_steps)
    with open(file, "wb") as fh:
        fh.write(header)
        fh.write(struct.pack("<dQ", paths.dt, paths.seed))
        fh.write(np.ascontiguousarray(paths.log_prices).tobytes())
        fh.write(np.ascontiguousarray(paths.variances).tobytes())


def load_paths(file):
    """Read a :class:`PathSet` written by :func:`save_paths`."""
    with open(file, "rb") as fh:
        magic, version, n_paths, n_steps = _HEADER.unpack(fh.read(_HEADER.size))
        if magic != _MAGIC:
            raise InvalidInput(f"not a path file (magic {magic!r})")
        if version != _VERSION:
            raise InvalidInput(f"unsupported path file version {version}")
        dt, seed = struct.unpack("<dQ", fh.read(16))
        count = n_paths * (n_steps + 1)
        log_prices = np.frombuffer(fh.read(8 * count), dtype=np.float64).reshape(n_paths, n_steps + 1)
        variances = np.frombuffer(fh.read(8 * count), dtype=np.float64).reshape(n_paths, n_steps + 1)
    return PathSet(log_prices=log_prices.copy(), variances=variances.copy(), dt=dt, seed=int(seed))
