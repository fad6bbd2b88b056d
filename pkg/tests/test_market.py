"""Heston path simulation: scheme, seeding, invariants, and persistence."""

import numpy as np
import pytest

from cmepricer.errors import IndexOutOfRange, InvalidMaturity, InvalidParams
from cmepricer.market import (
    VARIANCE_FLOOR,
    HestonParams,
    experiment_seed,
    load_paths,
    monitoring_steps,
    save_paths,
    simulate_heston,
    simulate_terminal_logprice,
)


@pytest.fixture(scope="module")
def big_paths():
    return simulate_heston(HestonParams(), 100_000, 1.0, seed=7)


def test_monitoring_steps():
    assert monitoring_steps(1.0 / 12.0) == 20
    assert monitoring_steps(1.0) == 52
    assert monitoring_steps(2.0) == 104
    with pytest.raises(InvalidMaturity):
        monitoring_steps(0.0)


def test_experiment_seed():
    assert experiment_seed(0, 0, 0) == 0
    assert experiment_seed(1, 2, 3) == 27
    assert experiment_seed(99, 3, 3) == 1599
    with pytest.raises(IndexOutOfRange):
        experiment_seed(0, 4, 0)
    with pytest.raises(IndexOutOfRange):
        experiment_seed(0, 0, 4)
    with pytest.raises(IndexOutOfRange):
        experiment_seed(-1, 0, 0)


def test_param_validation():
    with pytest.raises(InvalidParams):
        HestonParams(s0=-1.0)
    with pytest.raises(InvalidParams):
        HestonParams(rho=-1.5)
    with pytest.raises(InvalidParams):
        HestonParams(v0=-0.1)


def test_initial_columns_and_floor(big_paths):
    params = HestonParams()
    assert np.all(big_paths.log_prices[:, 0] == np.log(params.s0))
    assert np.all(big_paths.variances[:, 0] == params.v0)
    assert big_paths.variances.min() >= VARIANCE_FLOOR
    assert big_paths.n_steps == 52
    assert np.isclose(big_paths.maturity, 1.0)


def test_zero_vol_of_vol_keeps_variance_constant():
    params = HestonParams(xi=0.0, v0=0.04, theta=0.04)
    paths = simulate_heston(params, 50, 0.5, seed=1)
    assert np.all(paths.variances == 0.04)


def test_martingale_at_zero_rate(big_paths):
    terminal = np.exp(big_paths.log_prices[:, -1])
    stderr = terminal.std(ddof=1) / np.sqrt(terminal.size)
    assert abs(terminal.mean() - 100.0) < 4 * stderr


def test_discounted_martingale_at_positive_rate():
    params = HestonParams(r=0.04)
    paths = simulate_heston(params, 100_000, 1.0, seed=21)
    discounted = np.exp(-0.04 * 1.0) * np.exp(paths.log_prices[:, -1])
    stderr = discounted.std(ddof=1) / np.sqrt(discounted.size)
    assert abs(discounted.mean() - 100.0) < 4 * stderr


def test_increment_correlation(big_paths):
    params = HestonParams()
    d_log = np.diff(big_paths.log_prices, axis=1) - (params.r - 0.5 * big_paths.variances[:, :-1]) * big_paths.dt
    d_var = np.diff(big_paths.variances, axis=1) - params.kappa * (params.theta - big_paths.variances[:, :-1]) * big_paths.dt
    corr = np.corrcoef(d_log.ravel(), d_var.ravel())[0, 1]
    assert abs(corr - params.rho) < 0.02


def test_bit_identical_reruns():
    params = HestonParams()
    a = simulate_heston(params, 500, 0.5, seed=9)
    b = simulate_heston(params, 500, 0.5, seed=9)
    assert np.array_equal(a.log_prices, b.log_prices)
    assert np.array_equal(a.variances, b.variances)


def test_path_count_extension_preserves_prefix():
    params = HestonParams()
    small = simulate_heston(params, 100, 0.5, seed=11)
    large = simulate_heston(params, 400, 0.5, seed=11)
    assert np.array_equal(small.log_prices, large.log_prices[:100])
    assert np.array_equal(small.variances, large.variances[:100])


def test_terminal_simulation_matches_full(big_paths):
    terminal = simulate_terminal_logprice(HestonParams(), 1000, 1.0, seed=7)
    assert np.array_equal(terminal, big_paths.log_prices[:1000, -1])


def test_invalid_arguments():
    with pytest.raises(InvalidMaturity):
        simulate_heston(HestonParams(), 10, -1.0, seed=0)
    with pytest.raises(Exception):
        simulate_heston(HestonParams(), 0, 1.0, seed=0)


def test_save_load_round_trip(tmp_path):
    paths = simulate_heston(HestonParams(), 64, 0.25, seed=5)
    target = tmp_path / "paths.bin"
    save_paths(paths, target)
    assert target.stat().st_size == 16 + 16 + 2 * 64 * (paths.n_steps + 1) * 8
    loaded = load_paths(target)
    assert loaded.seed == 5
    assert loaded.dt == paths.dt
    assert np.array_equal(loaded.log_prices, paths.log_prices)
    assert np.array_equal(loaded.variances, paths.variances)


def test_load_rejects_wrong_magic(tmp_path):
    target = tmp_path / "bogus.bin"
    target.write_bytes(b"NOPE" + b"\x00" * 28)
    with pytest.raises(Exception):
        load_paths(target)
