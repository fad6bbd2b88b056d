"""Pricing engines and their oracles."""

import numpy as np
import pytest

from cmepricer.errors import InvalidContract, InvalidInput, PriceOutOfBounds
from cmepricer.market import HestonParams, PathSet, simulate_heston
from cmepricer.pricing import (
    ContractSpec,
    backward_bound_report,
    binomial_american_put,
    black_scholes_put,
    fit_pricing_operator,
    implied_vol_put,
    price_american_cme,
    price_american_ls,
    price_european_mc,
)


def two_path_one_step(terminal_prices, s0):
    """Hand-built path set with a single monitoring step."""
    log_prices = np.array([[np.log(s0), np.log(terminal_prices[0])], [np.log(s0), np.log(terminal_prices[1])]])
    variances = np.full((2, 2), 0.04)
    return PathSet(log_prices=log_prices, variances=variances, dt=1.0, seed=0)


@pytest.fixture(scope="module")
def table_paths():
    return simulate_heston(HestonParams(), 4000, 1.0, seed=2)


def test_contract_validation():
    with pytest.raises(InvalidContract):
        ContractSpec(strike=-1.0, maturity=1.0)
    with pytest.raises(InvalidContract):
        ContractSpec(strike=100.0, maturity=0.0)
    with pytest.raises(InvalidContract):
        ContractSpec(strike=100.0, maturity=1.0, kind="call")


def test_two_path_return_line_cme():
    # terminal discounted payoffs {0, 10}, immediate exercise value 2
    paths = two_path_one_step([100.0, 82.0], s0=90.0)
    contract = ContractSpec(strike=92.0, maturity=1.0)
    result = price_american_cme(paths, contract)
    # exact agreement with the hand-rolled return line on the same payoffs
    terminal = np.maximum(contract.strike - np.exp(paths.log_prices[:, 1]), 0.0)
    assert result.price == max(2.0, float(terminal.mean()))
    assert np.isclose(result.price, 5.0, rtol=1e-12)
    assert result.method == "cme_lr"


def test_two_path_return_line_ls():
    paths = two_path_one_step([100.0, 82.0], s0=90.0)
    contract = ContractSpec(strike=92.0, maturity=1.0)
    result = price_american_ls(paths, contract)
    terminal = np.maximum(contract.strike - np.exp(paths.log_prices[:, 1]), 0.0)
    assert result.price == max(2.0, float(terminal.mean()))
    assert np.isclose(result.price, 5.0, rtol=1e-12)


def test_deep_out_of_the_money_is_worthless(table_paths):
    result = price_american_ls(table_paths, ContractSpec(strike=1e-6, maturity=1.0))
    assert result.price == 0.0
    result = price_american_cme(table_paths, ContractSpec(strike=1e-6, maturity=1.0))
    assert result.price == 0.0


def test_maturity_mismatch_rejected(table_paths):
    with pytest.raises(InvalidContract):
        price_american_cme(table_paths, ContractSpec(strike=100.0, maturity=0.5))


def test_zero_rate_equals_european(table_paths):
    contract = ContractSpec(strike=100.0, maturity=1.0)
    euro, stderr = price_european_mc(table_paths.log_prices[:, -1], contract, rate=0.0)
    cme = price_american_cme(table_paths, contract)
    ls = price_american_ls(table_paths, contract)
    assert abs(cme.price - euro) < 3 * stderr
    assert abs(ls.price - euro) < 3 * stderr
    # American value dominates the European value up to noise
    assert cme.price >= euro - 3 * stderr
    # both engines realize the same stopping problem
    assert abs(cme.price - ls.price) < 3 * (2 * stderr)


def test_monotonicity_in_strike(table_paths):
    prev_cme, prev_ls = -1.0, -1.0
    operator = fit_pricing_operator(table_paths)
    for strike in (80.0, 90.0, 100.0, 110.0, 120.0):
        contract = ContractSpec(strike=strike, maturity=1.0)
        cme = price_american_cme(table_paths, contract, operator=operator)
        ls = price_american_ls(table_paths, contract)
        assert cme.price >= prev_cme
        assert ls.price >= prev_ls
        prev_cme, prev_ls = cme.price, ls.price


def test_operator_reuse_matches_inline_fit(table_paths):
    contract = ContractSpec(strike=105.0, maturity=1.0)
    inline = price_american_cme(table_paths, contract)
    operator = fit_pricing_operator(table_paths)
    reused = price_american_cme(table_paths, contract, operator=operator)
    assert reused.price == inline.price
    assert reused.offline_micros == 0
    assert inline.offline_micros > 0
    assert inline.rank_x == reused.rank_x and inline.rank_y == reused.rank_y


def test_timing_fields(table_paths):
    result = price_american_ls(table_paths, ContractSpec(strike=100.0, maturity=1.0))
    assert result.elapsed_micros > 0
    assert result.offline_micros == 0
    result = price_american_cme(table_paths, ContractSpec(strike=100.0, maturity=1.0))
    assert result.elapsed_micros >= result.offline_micros > 0


def test_black_scholes_special_cases():
    assert black_scholes_put(100.0, 90.0, 0.0, 0.0, 1.0) == 0.0
    assert black_scholes_put(80.0, 100.0, 0.05, 0.2, 0.0) == 20.0
    assert np.isclose(black_scholes_put(100.0, 100.0, 0.0, 0.2, 1.0), 7.96557, atol=5e-6)
    with pytest.raises(InvalidInput):
        black_scholes_put(-1.0, 100.0, 0.0, 0.2, 1.0)
    with pytest.raises(InvalidInput):
        black_scholes_put(100.0, 100.0, 0.0, -0.2, 1.0)


def test_implied_vol_round_trip():
    price = black_scholes_put(100.0, 100.0, 0.0, 0.2, 1.0)
    assert abs(implied_vol_put(price, 100.0, 100.0, 0.0, 1.0) - 0.2) < 1e-9
    price = black_scholes_put(90.0, 100.0, 0.03, 0.45, 0.7)
    assert abs(implied_vol_put(price, 90.0, 100.0, 0.03, 0.7) - 0.45) < 1e-9


def test_implied_vol_bounds():
    # intrinsic lower bound and cash upper bound are both rejected
    with pytest.raises(PriceOutOfBounds):
        implied_vol_put(20.0, 80.0, 100.0, 0.0, 1.0)
    with pytest.raises(PriceOutOfBounds):
        implied_vol_put(100.0, 80.0, 100.0, 0.0, 1.0)
    with pytest.raises(PriceOutOfBounds):
        implied_vol_put(0.0, 100.0, 90.0, 0.0, 1.0)


def test_binomial_expiry_limit():
    assert np.isclose(binomial_american_put(80.0, 100.0, 0.05, 0.2, 1e-9, 1), 20.0, atol=1e-6)


def test_binomial_zero_rate_equals_european_tree():
    s, k, sigma, maturity, steps = 100.0, 105.0, 0.25, 1.0, 400
    american = binomial_american_put(s, k, 0.0, sigma, maturity, steps)

    dt = maturity / steps
    up = np.exp(sigma * np.sqrt(dt))
    down = 1.0 / up
    prob = (1.0 - down) / (up - down)
    prices = s * up ** np.arange(steps + 1) * down ** np.arange(steps, -1, -1)
    values = np.maximum(k - prices, 0.0)
    for level in range(steps - 1, -1, -1):
        values = prob * values[1 : level + 2] + (1.0 - prob) * values[: level + 1]
    assert np.isclose(american, values[0], rtol=1e-12)


def test_binomial_self_convergence():
    values = [binomial_american_put(100.0, 100.0, 0.06, 0.2, 1.0, steps) for steps in (500, 1000, 2000)]
    assert abs(values[1] - values[0]) < 0.01
    assert abs(values[2] - values[1]) < 0.01


def test_binomial_validation():
    with pytest.raises(InvalidInput):
        binomial_american_put(100.0, 100.0, 0.0, 0.2, 1.0, 0)
    with pytest.raises(InvalidInput):
        binomial_american_put(100.0, 100.0, 0.0, 0.0, 1.0, 100)


def test_bound_report_zero_epsilon(table_paths):
    operator = fit_pricing_operator(table_paths, epsilon=1e-5)
    small = simulate_heston(HestonParams(), 50, 1.0, seed=0)
    exact = fit_pricing_operator(small, epsilon=0.0)
    report = backward_bound_report(exact, 52)
    assert report.bound_lr_part == 0.0
    report_one = backward_bound_report(operator, 52)
    report_two = backward_bound_report(operator, 104)
    assert report_one.bound_lr_part > 0.0
    assert np.isclose(report_two.bound_lr_part, 2.0 * report_one.bound_lr_part)
    assert report_one.kappa_x_empirical > 0
    assert "not computable" in report_one.statistical_part


def test_bound_report_benchmark_configuration():
    paths = simulate_heston(HestonParams(), 1000, 1.0, seed=0)
    operator = fit_pricing_operator(paths, lam=1000**-0.5, epsilon=1e-5)
    report = backward_bound_report(operator, 52)
    assert np.isfinite(report.delta_lr) and report.delta_lr > 0
    assert np.isfinite(report.bound_lr_part) and report.bound_lr_part > 0


def test_strike_ladder_matches_single_contract(table_paths):
    from cmepricer.pricing import price_strike_ladder

    strikes = np.array([85.0, 100.0, 115.0])
    operator = fit_pricing_operator(table_paths)
    ladder = price_strike_ladder(table_paths, strikes, 1.0, operator=operator)
    assert len(ladder) == 3
    for strike, result in zip(strikes, ladder):
        single = price_american_cme(table_paths, ContractSpec(float(strike), 1.0), operator=operator)
        assert result.price == pytest.approx(single.price, rel=1e-12)
        assert result.rank_y == single.rank_y
    with pytest.raises(InvalidContract):
        price_strike_ladder(table_paths, np.array([-5.0]), 1.0, operator=operator)
