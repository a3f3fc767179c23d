import numpy as np
import pytest

from mp_reference import exit_multiple
from pttrade.errors import DomainError, IllPosedError
from pttrade.exit import exit_equation, exit_value, sale_threshold, solve_c
from pttrade.model import ModelInputs, Preferences


def test_reference_multiple():
    # 50-digit optimum of the sell-at-m rule: 1.06250000000000000332...
    sol = solve_c(Preferences(0.5, 2.25, 1.0), 0.85)
    assert sol.c == 1.0625
    assert sol.residual <= 1e-12


@pytest.mark.parametrize("alpha, beta, k", [(0.5, 0.85, 2.25), (0.3, 0.6, 1.5), (0.2, 1.0, 4.0), (0.88, 0.9, 2.25), (0.1, 0.15, 10.0)])
def test_against_high_precision_reference(alpha, beta, k):
    got = solve_c(Preferences(alpha, k, 1.0), beta).c
    assert got == pytest.approx(float(exit_multiple(alpha, beta, k)), rel=1e-13)


@pytest.mark.parametrize("alpha", [0.1, 0.3, 0.5, 0.7, 0.9])
@pytest.mark.parametrize("k", [1.2, 2.25, 8.0])
def test_closed_form_when_alpha_equals_beta(alpha, k):
    sol = solve_c(Preferences(alpha, k, 1.0), alpha)
    assert abs(sol.c - (1 + k ** (1 / (alpha - 1)))) <= 1e-10


def test_alpha_near_one_keeps_precision_in_c_minus_one():
    sol = solve_c(Preferences(0.99, 2.25, 1.0), 0.99)
    assert sol.c_minus_one == pytest.approx(2.25 ** (1 / (0.99 - 1)), rel=1e-12)


def test_equation_root_and_sign():
    sol = solve_c(Preferences(0.5, 2.25, 1.0), 0.85)
    d = sol.c_minus_one
    assert exit_equation(d * 0.5, 0.5, 0.85, 2.25) > 0 > exit_equation(d * 2, 0.5, 0.85, 2.25)


@pytest.mark.parametrize("alpha, beta", [(0.5, 0.3), (0.5, 0.0), (0.5, -0.5), (0.5, 1.2)])
def test_rejects_ill_posed(alpha, beta):
    with pytest.raises(IllPosedError):
        solve_c(Preferences(alpha, 2.25, 1.0), beta)


def test_sale_threshold():
    assert sale_threshold(1.0625, 2.0, 0.9) == pytest.approx(1.0625 * 2 / 0.9)
    with pytest.raises(DomainError):
        sale_threshold(1.0, 2.0, 0.9)


class TestExitValue:
    inputs = ModelInputs.from_values(alpha=0.5, k=2.25, R=1, beta=0.85, lam=1.1, gamma=0.9, psi=1)
    sol = solve_c(inputs.prefs, 0.85)
    H = 3.0

    def test_continuous_and_smooth_at_threshold(self):
        b = self.sol.c * self.H / 0.9
        below = exit_value(b * (1 - 1e-9), self.H, self.inputs, self.sol)
        above = exit_value(b * (1 + 1e-9), self.H, self.inputs, self.sol)
        assert below == pytest.approx(above, rel=1e-7)
        # slopes in p**beta agree on both sides (smooth fit)
        eps = 1e-5
        th = b**0.85
        left = (exit_value(b, self.H, self.inputs, self.sol) - exit_value((th * (1 - eps)) ** (1 / 0.85), self.H, self.inputs, self.sol)) / (th * eps)
        right = (exit_value((th * (1 + eps)) ** (1 / 0.85), self.H, self.inputs, self.sol) - exit_value(b, self.H, self.inputs, self.sol)) / (th * eps)
        assert left == pytest.approx(right, rel=1e-3)

    def test_tends_to_loss_of_reference_point(self):
        assert exit_value(1e-12, self.H, self.inputs, self.sol) == pytest.approx(-2.25 * self.H**0.5, rel=1e-8)

    def test_above_threshold_is_immediate_sale(self):
        p = 50.0
        assert exit_value(p, self.H, self.inputs, self.sol) == pytest.approx((0.9 * p - self.H) ** 0.5, rel=1e-15)

    def test_dominates_selling_now(self):
        p = np.geomspace(0.01, 100, 400)
        sell_now = np.where(0.9 * p > self.H, np.abs(0.9 * p - self.H) ** 0.5, -2.25 * np.abs(0.9 * p - self.H) ** 0.5)
        assert np.all(exit_value(p, self.H, self.inputs, self.sol) >= sell_now - 1e-12)

    def test_broadcasts_over_reference_points(self):
        p = np.array([1.0, 2.0, 3.0])
        H = np.array([1.0, 2.0, 3.0])
        expect = [exit_value(a, b, self.inputs, self.sol) for a, b in zip(p, H)]
        np.testing.assert_array_equal(exit_value(p, H, self.inputs, self.sol), expect)

    def test_rejects_nonpositive(self):
        with pytest.raises(DomainError):
            exit_value(0.0, self.H, self.inputs, self.sol)
        with pytest.raises(DomainError):
            exit_value(1.0, 0.0, self.inputs, self.sol)
