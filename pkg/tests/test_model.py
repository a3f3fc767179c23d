import math

import numpy as np
import pytest

from pttrade.errors import DomainError, IllPosedError, InvalidParameterError
from pttrade.model import (
    MarketDynamics,
    ModelInputs,
    Preferences,
    TransactionCosts,
    WellPosedness,
    buy_and_hold_value,
    classify_wellposedness,
    hitting_probability,
    scale,
    utility,
)

PREFS = Preferences(0.5, 2.25, 1.0)


class TestValidation:
    @pytest.mark.parametrize(
        "kwargs, field",
        [
            (dict(alpha=0.0, k=2.0, R=1.0), "alpha"),
            (dict(alpha=1.0, k=2.0, R=1.0), "alpha"),
            (dict(alpha=0.5, k=1.0, R=1.0), "k"),
            (dict(alpha=0.5, k=2.0, R=0.0), "R"),
            (dict(alpha=math.nan, k=2.0, R=1.0), "alpha"),
            (dict(alpha=0.5, k=math.inf, R=1.0), "k"),
        ],
    )
    def test_preferences_rejected(self, kwargs, field):
        with pytest.raises(InvalidParameterError) as exc:
            Preferences(**kwargs)
        assert exc.value.field == field

    @pytest.mark.parametrize(
        "kwargs, field",
        [
            (dict(lam=0.99), "lambda"),
            (dict(gamma=0.0), "gamma"),
            (dict(gamma=1.01), "gamma"),
            (dict(psi=-0.1), "psi"),
        ],
    )
    def test_costs_rejected(self, kwargs, field):
        with pytest.raises(InvalidParameterError) as exc:
            TransactionCosts(**kwargs)
        assert exc.value.field == field

    def test_market_rejects_negative_drift_and_zero_vol(self):
        with pytest.raises(InvalidParameterError):
            MarketDynamics(-0.01, 0.2)
        with pytest.raises(InvalidParameterError):
            MarketDynamics(0.01, 0.0)
        with pytest.raises(InvalidParameterError):
            MarketDynamics.from_beta(1.2)

    def test_beta_from_mu_sigma(self):
        m = MarketDynamics(0.02, 0.4)
        assert m.beta == pytest.approx(1 - 2 * 0.02 / 0.16, rel=1e-15)

    def test_from_beta_keeps_exact_value(self):
        assert MarketDynamics.from_beta(0.85).beta == 0.85

    def test_beta_and_mu_sigma_are_exclusive(self):
        with pytest.raises(InvalidParameterError):
            ModelInputs.from_values(alpha=0.5, k=2, R=1, beta=0.8, mu=0.1, sigma=0.5)
        with pytest.raises(InvalidParameterError):
            ModelInputs.from_values(alpha=0.5, k=2, R=1, mu=0.1)

    def test_types_are_immutable(self):
        with pytest.raises(AttributeError):
            PREFS.alpha = 0.3

    def test_replace_round_trip(self):
        inp = ModelInputs.from_values(alpha=0.5, k=2.25, R=1, beta=0.85, lam=1.1, gamma=0.9, psi=1)
        out = inp.replace(psi=2.0)
        assert out.costs.psi == 2.0 and out.beta == 0.85 and out.costs.lam == 1.1
        assert inp.replace(mu=0.1, sigma=1.0).beta == pytest.approx(0.8)


class TestUtility:
    def test_values(self):
        assert utility(4.0, PREFS) == 2.0
        assert utility(-4.0, PREFS) == -4.5
        assert utility(0.0, PREFS) == 0.0

    def test_vectorised_and_monotone(self):
        x = np.linspace(-5, 5, 101)
        u = utility(x, PREFS)
        assert isinstance(u, np.ndarray)
        assert np.all(np.diff(u) > 0)

    def test_loss_aversion_kink(self):
        # losses hurt k times as much as equal gains help
        for x in (0.1, 1.0, 7.0):
            assert utility(-x, PREFS) == pytest.approx(-2.25 * utility(x, PREFS), rel=1e-15)


class TestScaleAndHitting:
    def test_scale_branches(self):
        assert scale(4.0, 0.5) == 2.0
        assert scale(math.e, 0.0) == pytest.approx(1.0)
        assert scale(4.0, -0.5) == 2.0
        with pytest.raises(DomainError):
            scale(0.0, 0.5)

    def test_hitting_upward(self):
        assert hitting_probability(1.0, 4.0, 0.5) == 0.5
        assert hitting_probability(1.0, 4.0, -0.5) == 1.0
        assert hitting_probability(2.0, 2.0, 0.7) == 1.0

    def test_hitting_downward_is_sure(self):
        assert hitting_probability(4.0, 1.0, 0.5) == 1.0
        assert hitting_probability(4.0, 1.0, 0.0) == 1.0

    def test_hitting_rejects_nonpositive(self):
        with pytest.raises(DomainError):
            hitting_probability(0.0, 1.0, 0.5)

    def test_scaled_price_is_martingale_for_two_sided_exit(self):
        # P(hit b before a) from p is (s(p)-s(a))/(s(b)-s(a)); with a -> 0 this is (p/b)**beta
        beta, p, b = 0.85, 2.0, 5.0
        for a in (1e-3, 1e-6, 1e-9):
            two_sided = (p**beta - a**beta) / (b**beta - a**beta)
            assert abs(two_sided - hitting_probability(p, b, beta)) < 2 * a**beta


class TestWellPosedness:
    @pytest.mark.parametrize(
        "beta, alpha, expected",
        [
            (0.85, 0.5, WellPosedness.INTERIOR),
            (0.5, 0.5, WellPosedness.INTERIOR),
            (1.0, 0.5, WellPosedness.BOUNDARY),
            (0.3, 0.5, WellPosedness.ILL_POSED),
            (0.0, 0.5, WellPosedness.ILL_POSED),
            (-0.5, 0.5, WellPosedness.ILL_POSED),
        ],
    )
    def test_classification(self, beta, alpha, expected):
        inp = ModelInputs.from_values(alpha=alpha, k=2.25, R=1, beta=beta)
        assert classify_wellposedness(inp) is expected

    @pytest.mark.parametrize("beta", [-0.5, 0.0, 0.3])
    def test_buy_and_hold_diverges(self, beta):
        inp = ModelInputs.from_values(alpha=0.5, k=2.25, R=1, beta=beta, lam=1.1, gamma=0.9, psi=1)
        vals = [buy_and_hold_value(1.0, n, inp) for n in (1e2, 1e4, 1e6, 1e8)]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_buy_and_hold_refuses_well_posed(self):
        inp = ModelInputs.from_values(alpha=0.5, k=2.25, R=1, beta=0.85)
        with pytest.raises(IllPosedError):
            buy_and_hold_value(1.0, 100.0, inp)
