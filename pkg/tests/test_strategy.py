import math

import numpy as np
import pytest

from conftest import BAND, inputs_of
from pttrade.checks import with_corrupted_c
from pttrade.errors import DomainError, IllPosedError, InvalidParameterError
from pttrade.strategy import (
    BuyRule,
    TradingStrategy,
    choose_horizon,
    evaluate_strategy_exact,
    optimal_strategy,
    passage_cdf,
    perturbation_dominance_check,
    simulate_strategy_mc,
    unfinished_mass,
)


def _prices(sol, n=20):
    r = sol.regime
    lo = r.p1_star or 1.0
    hi = r.p2_star or lo
    return np.geomspace(lo / 20, hi * 20, n)


class TestStrategyType:
    def test_level_rules(self):
        with pytest.raises(InvalidParameterError):
            TradingStrategy(BuyRule.UPCROSS)
        with pytest.raises(InvalidParameterError):
            TradingStrategy(BuyRule.IMMEDIATE, 2.0)
        with pytest.raises(InvalidParameterError):
            TradingStrategy.immediate(sale_multiple=0.0)

    def test_buy_at(self):
        assert TradingStrategy.buy_at(2.0, 2.0).buy_rule is BuyRule.IMMEDIATE
        assert TradingStrategy.buy_at(3.0, 2.0).buy_rule is BuyRule.UPCROSS
        assert TradingStrategy.buy_at(1.0, 2.0).buy_rule is BuyRule.DOWNCROSS


class TestExactValuation:
    @pytest.mark.parametrize("name", ["ray", "band", "high_fee", "statics"])
    def test_optimal_rule_attains_value(self, name, request):
        sol = request.getfixturevalue(name)
        for p in _prices(sol):
            got = evaluate_strategy_exact(p, optimal_strategy(p, sol), sol.inputs, sol.exit).expected_utility
            assert got == pytest.approx(sol.value(p), rel=1e-9)

    def test_probabilities_sum_to_one(self, band):
        for p in (1.0, 6.0, 30.0):
            sv = evaluate_strategy_exact(p, optimal_strategy(p, band), band.inputs, band.exit)
            assert math.fsum((sv.prob_never_buy, sv.prob_buy_no_sale, sv.prob_round_trip)) == pytest.approx(1.0, abs=1e-15)

    def test_hand_computed_round_trip(self, band):
        # buy now at p=6, sell at c H / gamma; H = 1.1*6 + 2
        p, inp, c = 6.0, band.inputs, band.exit.c
        H = 1.1 * p + 2.0
        x = c * H / 0.9
        q = (p / x) ** 0.85
        expect = q * (0.9 * x - H) ** 0.5 + (1 - q) * (-2.25 * H**0.5)
        got = evaluate_strategy_exact(p, TradingStrategy.immediate(), inp, band.exit).expected_utility
        assert got == pytest.approx(expect, rel=1e-14)

    def test_never(self, band):
        sv = evaluate_strategy_exact(3.0, TradingStrategy.never(), band.inputs, band.exit)
        assert sv.expected_utility == -2.25 and sv.prob_never_buy == 1.0

    def test_level_on_wrong_side_rejected(self, band):
        with pytest.raises(DomainError):
            evaluate_strategy_exact(3.0, TradingStrategy.upcross(2.0), band.inputs, band.exit)
        with pytest.raises(DomainError):
            evaluate_strategy_exact(3.0, TradingStrategy.downcross(4.0), band.inputs, band.exit)

    def test_ill_posed_rejected(self, band):
        with pytest.raises(IllPosedError):
            evaluate_strategy_exact(1.0, TradingStrategy.never(), inputs_of(dict(BAND, beta=-0.5)), band.exit)


class TestDominance:
    @pytest.mark.parametrize("name", ["ray", "band", "high_fee", "statics"])
    def test_no_perturbation_wins(self, name, request):
        sol = request.getfixturevalue(name)
        for p in _prices(sol, 6):
            rep = perturbation_dominance_check(p, sol)
            assert rep.n_strategies == 441
            assert rep.holds(1e-12), rep

    def test_corrupted_multiple_is_beaten(self, band):
        bad = with_corrupted_c(band, 1.01)
        assert not perturbation_dominance_check(6.0, bad).holds()


class TestHorizon:
    def test_passage_cdf_limits(self):
        assert passage_cdf(1.0, -0.1, 1.0, 0.0) == 0.0
        # with negative drift the path reaches +1 with probability exp(2 nu d / sigma^2)
        assert passage_cdf(1.0, -0.1, 1.0, 1e6) == pytest.approx(math.exp(-0.2), rel=1e-9)
        assert passage_cdf(1.0, 0.1, 1.0, 1e6) == pytest.approx(1.0, rel=1e-9)

    def test_unfinished_mass_shrinks(self, ray):
        p = ray.regime.p1_star / 2
        s = optimal_strategy(p, ray)
        masses = [unfinished_mass(p, s, ray.inputs, ray.exit, t) for t in (4, 16, 64, 256)]
        assert all(b < a for a, b in zip(masses, masses[1:]))

    def test_choose_horizon_meets_target(self, ray):
        p = ray.regime.p1_star / 2
        s = optimal_strategy(p, ray)
        T = choose_horizon(p, s, ray.inputs, ray.exit)
        assert unfinished_mass(p, s, ray.inputs, ray.exit, T) < 0.002
        assert unfinished_mass(p, s, ray.inputs, ray.exit, T / 2) >= 0.002


class TestMonteCarlo:
    def test_deterministic_per_seed(self, band):
        s = TradingStrategy.immediate()
        kw = dict(horizon=16.0, n_paths=2000, seed=7, n_steps=512)
        a = simulate_strategy_mc(6.0, s, band.inputs, band.exit, **kw)
        b = simulate_strategy_mc(6.0, s, band.inputs, band.exit, **kw)
        assert a == b
        c = simulate_strategy_mc(6.0, s, band.inputs, band.exit, **dict(kw, seed=8))
        assert c.mean != a.mean

    def test_never_has_zero_error(self, high_fee):
        est = simulate_strategy_mc(3.0, TradingStrategy.never(), high_fee.inputs, high_fee.exit, horizon=1.0, n_paths=10)
        assert est.stderr == 0.0 and est.mean == -2.25 and est.z_score(-2.25) == 0.0

    def test_argument_validation(self, band):
        s = TradingStrategy.immediate()
        with pytest.raises(InvalidParameterError):
            simulate_strategy_mc(6.0, s, band.inputs, band.exit, horizon=0.0, n_paths=10)
        with pytest.raises(InvalidParameterError):
            simulate_strategy_mc(6.0, s, band.inputs, band.exit, horizon=1.0, n_paths=0)

    def test_bridge_correction_matters(self, band):
        # on a coarse grid, skipping the bridge misses crossings and biases the outcome mix
        s = TradingStrategy.immediate()
        exact = evaluate_strategy_exact(6.0, s, band.inputs, band.exit)
        kw = dict(horizon=64.0, n_paths=20000, seed=3, n_steps=64)
        with_bridge = simulate_strategy_mc(6.0, s, band.inputs, band.exit, **kw)
        without = simulate_strategy_mc(6.0, s, band.inputs, band.exit, bridge=False, **kw)
        assert abs(with_bridge.frac_round_trip - exact.prob_round_trip) < abs(without.frac_round_trip - exact.prob_round_trip)

    @pytest.mark.slow
    @pytest.mark.parametrize("start", ["below", "inside", "above"])
    def test_agrees_with_exact_value(self, band, start):
        r = band.regime
        p = {"below": r.p1_star / 2, "inside": (r.p1_star + r.p2_star) / 2, "above": r.p2_star * 2}[start]
        s = optimal_strategy(p, band)
        T = choose_horizon(p, s, band.inputs, band.exit)
        est = simulate_strategy_mc(p, s, band.inputs, band.exit, horizon=T, n_paths=40000, seed=11)
        assert abs(est.z_score(band.value(p))) <= 3.0
