"""Optimal purchase of the asset.

After substituting the exit value, the scaled entry payoff is
``max(v1(theta), -k R**alpha)`` where ``v1(theta) = (R+psi)**alpha *
f((gamma/(R+psi))**beta * theta)`` and ``f`` depends only on ``alpha``,
``beta``, ``k``, ``c`` and the cost ratio ``xi = lam/gamma``.  The shape of
``f`` decides the purchase regime:

* ``xi <= critical_xi``: ``f`` is increasing and concave; buy at or above ``p1*``.
* ``xi > critical_xi``: ``f`` peaks at ``x2*`` and falls to ``-inf``; buy
  inside ``[p1*, p2*]`` if the fixed fee is small enough (``psi < C R``),
  otherwise never buy.

With ``beta == 1`` a third cut-off ``xi >= (c-1)**(alpha-1) / k`` makes
``f`` decreasing, and the agent never buys regardless of ``psi``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from ._roots import bisect, first_sign_change
from .errors import DomainError, IllPosedError, NumericalError, RegimeError
from .exit import ExitSolution, solve_c
from .model import ModelInputs, WellPosedness, classify_wellposedness, utility

__all__ = [
    "FProfile",
    "RegimeTag",
    "EntryRegime",
    "EntrySolution",
    "f_value",
    "f_derivative",
    "f_second_derivative",
    "h1",
    "h2",
    "critical_xi",
    "f_profile",
    "solve_x2",
    "solve_x_tilde",
    "no_trade_constant",
    "tangency_lhs",
    "solve_x1",
    "classify_regime",
    "solve_entry",
    "v1_value",
    "entry_value",
    "entry_payoff",
    "scaled_payoff_g2",
]


def _out(arr):
    return float(arr) if np.ndim(arr) == 0 else arr


# ---------------------------------------------------------------------------
# the auxiliary function f and its derivatives
# ---------------------------------------------------------------------------


def f_value(x, exit: ExitSolution, xi: float):
    """Normalised exit-conditional value as a function of the scaled price ``x >= 0``.

    ``f(x) = [A x - k u**beta] / u**(beta-alpha)`` with ``u = xi x**(1/beta) + 1``
    and ``A = (alpha/beta) c**(1-beta) (c-1)**(alpha-1)``.  ``f(0) = -k``.
    """
    a, b, k, A = exit.alpha, exit.beta, exit.k, exit.slope
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0):
        raise DomainError("f is defined for x >= 0")
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        # x < 1: direct form
        u = xi * x ** (1.0 / b) + 1.0
        small = (A * x - k * u**b) * u ** (a - b)
        # x >= 1: factor out x**(alpha/beta) to avoid overflow
        w = xi + x ** (-1.0 / b)
        large = x ** (a / b) * (A - k * w**b) * w ** (a - b)
    return _out(np.where(x < 1.0, small, large))


def h1(z, exit: ExitSolution, xi: float):
    """Sign-carrying factor of ``f'`` in the variable ``z = x**(-1/beta)``."""
    b, k = exit.beta, exit.k
    z = np.asarray(z, dtype=float)
    return _out(exit.kappa * (z + xi * exit.alpha / b) - k * xi * (z + xi) ** b)


def h2(z, exit: ExitSolution, xi: float):
    """Sign-carrying factor of ``f''`` in the variable ``z = x**(-1/beta)``."""
    a, b, k = exit.alpha, exit.beta, exit.k
    z = np.asarray(z, dtype=float)
    linear = exit.kappa * (-xi * a / b**2 * (b - a) + (a / b - b + a - 1.0) / b * z)
    power = k * (xi + z) ** b * (-xi * (1.0 - a / b) + (1.0 / b - 1.0) * z)
    return _out(linear - power)


def f_derivative(x, exit: ExitSolution, xi: float):
    """Closed-form ``f'(x)`` for ``x > 0``."""
    a, b, k, K = exit.alpha, exit.beta, exit.k, exit.kappa
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0):
        raise DomainError("closed-form f' needs x > 0 (the limit at 0+ is alpha/beta * kappa)")
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        s = x ** (1.0 / b)
        u = xi * s + 1.0
        small = a / b * (K * (xi * a / b * s + 1.0) - k * xi * x ** (1.0 / b - 1.0) * u**b) / u ** (b - a + 1.0)
        z = x ** (-1.0 / b)
        w = xi + z
        large = a / b * x ** ((a - b) / b) * h1(z, exit, xi) / w ** (b - a + 1.0)
    return _out(np.where(x < 1.0, small, large))


def f_second_derivative(x, exit: ExitSolution, xi: float):
    """Closed-form ``f''(x)`` for ``x > 0``."""
    a, b, k, K = exit.alpha, exit.beta, exit.k, exit.kappa
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0):
        raise DomainError("closed-form f'' needs x > 0")
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        s = x ** (1.0 / b)
        u = xi * s + 1.0
        brace = K * x * (-xi * a / b**2 * (b - a) * s + (a / b - b + a - 1.0) / b) - k * u**b * (
            -xi * (1.0 - a / b) * s + 1.0 / b - 1.0
        )
        small = xi * a / b * x ** (1.0 / b - 2.0) * brace / u ** (b - a + 2.0)
        z = x ** (-1.0 / b)
        w = xi + z
        large = xi * a / b * x ** ((a - 2.0 * b) / b) * h2(z, exit, xi) / w ** (b - a + 2.0)
    return _out(np.where(x < 1.0, small, large))


def critical_xi(exit: ExitSolution) -> float:
    """Cost ratio above which ``f`` stops being increasing.

    This is ``(A/k)**(1/beta)``.  Substituting the exit equation for ``k``
    gives ``A/k = (1+d)**(1-beta) / (1 - d (beta-alpha)/alpha)`` with
    ``d = c - 1``, which stays above 1 even when ``d`` is tiny and ``A`` and
    ``k`` agree to nearly every digit.
    """
    a, b, d = exit.alpha, exit.beta, exit.c_minus_one
    log_ratio = (1.0 - b) * math.log1p(d) - math.log1p(-d * (b - a) / a)
    return math.exp(log_ratio / b)


def _no_peak_threshold(exit: ExitSolution) -> float:
    """For ``beta == 1``: cost ratio at or above which ``f`` is decreasing on ``[0, inf)``."""
    return exit.kappa / exit.k


# ---------------------------------------------------------------------------
# turning point, inflexion point and the no-trade constant
# ---------------------------------------------------------------------------


def _bracket_z(func, *, want_positive_at_hi: bool) -> tuple[float, float] | None:
    """Geometric bracket ``[lo, hi]`` in ``z > 0`` around the single sign change of ``func``.

    Returns ``None`` when the sign change lies beyond ``z = 1e300``, i.e. the
    corresponding ``x = z**(-beta)`` underflows to 0.  This happens for
    ``beta`` just below 1, where the root grows like ``q**(1/(1-beta))``.
    """

    def good_hi(v):
        return v > 0.0 if want_positive_at_hi else v < 0.0

    hi = 1.0
    while not good_hi(func(hi)):
        hi *= 10.0
        if hi > 1e300:
            return None
    lo = hi / 10.0
    while good_hi(func(lo)):
        lo /= 10.0
        if lo < 1e-300:
            raise NumericalError("sign change sits below z = 1e-300")
    return lo, hi


def _supercritical(inputs: ModelInputs, exit: ExitSolution) -> float:
    xi = inputs.xi
    if not xi > critical_xi(exit):
        raise RegimeError(f"xi={xi} <= critical_xi={critical_xi(exit)}: f has no interior maximum")
    return xi


def solve_x2(inputs: ModelInputs, exit: ExitSolution) -> float:
    """Maximiser of ``f`` (scaled upper purchase boundary)."""
    xi = _supercritical(inputs, exit)
    if exit.beta == 1.0 and xi >= _no_peak_threshold(exit):
        raise RegimeError("f is decreasing (beta == 1 and xi >= (c-1)**(alpha-1)/k)")
    # h1 is convex in z with h1(0) < 0, so it up-crosses zero exactly once
    func = lambda z: h1(z, exit, xi)  # noqa: E731
    bracket = _bracket_z(func, want_positive_at_hi=True)
    if bracket is None:
        return 0.0
    z = bisect(func, *bracket, geometric=True)
    return z ** (-exit.beta)


def solve_x_tilde(inputs: ModelInputs, exit: ExitSolution) -> float:
    """Inflexion point of ``f``: concave before, convex after."""
    xi = _supercritical(inputs, exit)
    if exit.beta == 1.0 and xi >= 2.0 * _no_peak_threshold(exit):
        raise RegimeError("f has no inflexion point (beta == 1 and xi >= 2 (c-1)**(alpha-1)/k)")
    # h2 is concave in z with h2(0) > 0, so it down-crosses zero exactly once
    func = lambda z: h2(z, exit, xi)  # noqa: E731
    bracket = _bracket_z(func, want_positive_at_hi=False)
    if bracket is None:
        return 0.0
    z = bisect(func, *bracket, geometric=True)
    return z ** (-exit.beta)


def no_trade_constant(inputs: ModelInputs, exit: ExitSolution) -> float:
    """``C`` such that the agent never buys iff ``psi >= C R``."""
    x2 = solve_x2(inputs, exit)
    peak = f_value(x2, exit, inputs.xi)
    if not -exit.k < peak < 0.0:
        raise NumericalError(f"f(x2*)={peak} outside (-k, 0)")
    return (-exit.k / peak) ** (1.0 / exit.alpha) - 1.0


@dataclass(frozen=True)
class FProfile:
    xi: float
    critical_xi: float
    limit_sign: int
    x2_star: float | None
    x_tilde: float | None


def f_profile(inputs: ModelInputs, exit: ExitSolution) -> FProfile:
    xi = inputs.xi
    crit = critical_xi(exit)
    limit_sign = int(np.sign(crit - xi))
    x2 = x_tilde = None
    if xi > crit:
        try:
            x2 = solve_x2(inputs, exit)
        except RegimeError:
            pass
        try:
            x_tilde = solve_x_tilde(inputs, exit)
        except RegimeError:
            pass
    return FProfile(xi=xi, critical_xi=crit, limit_sign=limit_sign, x2_star=x2, x_tilde=x_tilde)


# ---------------------------------------------------------------------------
# lower purchase boundary
# ---------------------------------------------------------------------------


def tangency_lhs(x, inputs: ModelInputs, exit: ExitSolution):
    """``(1 + psi/R)**alpha * (x f'(x) - f(x))`` in closed form.

    The lower purchase boundary is where this down-crosses ``k``: there the
    line through ``(0, -k R**alpha)`` touches ``v1``.
    """
    a, b, k, A = exit.alpha, exit.beta, exit.k, exit.slope
    xi = inputs.xi
    lift = (1.0 + inputs.costs.psi / inputs.prefs.R) ** a
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0):
        raise DomainError("x must be >= 0")
    g = 1.0 - a / b
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        s = x ** (1.0 / b)
        u = xi * s + 1.0
        small = (k * u**b * (xi * g * s + 1.0) - A * xi * g * s * x) / u ** (b - a + 1.0)
        z = x ** (-1.0 / b)
        w = xi + z
        large = x ** (a / b) * (k * w**b * (xi * g + z) - A * xi * g) / w ** (b - a + 1.0)
    return _out(lift * np.where(x < 1.0, small, large))


def solve_x1(inputs: ModelInputs, exit: ExitSolution, *, x2_star: float | None = None) -> float:
    """Scaled lower purchase boundary: first down-crossing of ``tangency_lhs`` through ``k``."""
    if inputs.costs.psi == 0.0:
        return 0.0
    k = exit.k

    def excess(x):
        return tangency_lhs(x, inputs, exit) - k

    upper = 1e6 * max(1.0, x2_star if x2_star is not None else 1.0)
    n = int(40 * math.log10(upper / 1e-12)) + 1
    grid = np.geomspace(1e-12, upper, n)
    values = excess(grid)
    if values[0] <= 0.0:
        # excess(0) = k ((1 + psi/R)**alpha - 1) > 0, so the root is below 1e-12
        return bisect(excess, 0.0, float(grid[0]))
    i = first_sign_change(values, direction="down")
    # when c is barely above 1 the crossing can sit far beyond the default scan
    while i is None and values[-1] > 0.0 and grid[-1] < 1e294:
        grid = np.geomspace(grid[-1], grid[-1] * 1e6, 241)
        values = excess(grid)
        i = first_sign_change(values, direction="down")
    if i is None:
        raise NumericalError("no down-crossing for the lower boundary; regime likely misclassified")
    return bisect(excess, float(grid[i]), float(grid[i + 1]), geometric=True)


# ---------------------------------------------------------------------------
# regimes
# ---------------------------------------------------------------------------


class RegimeTag(enum.Enum):
    ONE_SIDED = "one_sided"
    INTERVAL = "interval"
    NO_TRADE = "no_trade"
    ILL_POSED = "ill_posed"


@dataclass(frozen=True)
class EntryRegime:
    """Purchase regime with its boundaries.

    ``x1_star``/``x2_star`` are the scaled boundaries; the price boundaries
    are ``p_i = (R + psi) x_i**(1/beta) / gamma``.  ``C`` is set whenever
    ``xi > critical_xi``.
    """

    tag: RegimeTag
    critical_xi: float | None = None
    p1_star: float | None = None
    p2_star: float | None = None
    C: float | None = None
    x1_star: float | None = None
    x2_star: float | None = None


def _to_price(x: float, inputs: ModelInputs) -> float:
    R, psi, gamma = inputs.prefs.R, inputs.costs.psi, inputs.costs.gamma
    return (R + psi) * x ** (1.0 / inputs.beta) / gamma


def classify_regime(inputs: ModelInputs, exit: ExitSolution) -> EntryRegime:
    if not classify_wellposedness(inputs).well_posed:
        return EntryRegime(RegimeTag.ILL_POSED)
    xi = inputs.xi
    crit = critical_xi(exit)
    R, psi = inputs.prefs.R, inputs.costs.psi

    if xi <= crit:
        x1 = solve_x1(inputs, exit)
        return EntryRegime(RegimeTag.ONE_SIDED, crit, p1_star=_to_price(x1, inputs), x1_star=x1)

    if exit.beta == 1.0 and xi >= _no_peak_threshold(exit):
        # f decreasing: f(x2*) = f(0) = -k, so C = 0 and no fee level allows trading
        return EntryRegime(RegimeTag.NO_TRADE, crit, C=0.0)

    x2 = solve_x2(inputs, exit)
    C = (-exit.k / f_value(x2, exit, xi)) ** (1.0 / exit.alpha) - 1.0
    if psi >= C * R:
        return EntryRegime(RegimeTag.NO_TRADE, crit, C=C, x2_star=x2)
    x1 = solve_x1(inputs, exit, x2_star=x2)
    return EntryRegime(
        RegimeTag.INTERVAL,
        crit,
        p1_star=_to_price(x1, inputs),
        p2_star=_to_price(x2, inputs),
        C=C,
        x1_star=x1,
        x2_star=x2,
    )


# ---------------------------------------------------------------------------
# value functions
# ---------------------------------------------------------------------------


def v1_value(p, inputs: ModelInputs, exit: ExitSolution):
    """Value of buying at ``p`` now and then following the optimal exit rule.

    The immediate-purchase reference point ``H = lam p + psi + R`` always
    puts ``p`` below the sale threshold, so only the waiting branch of the
    exit value applies.  Evaluated as ``H**alpha (A (gamma p / H)**beta - k)``,
    which cannot overflow.
    """
    p = np.asarray(p, dtype=float)
    c = inputs.costs
    H = c.lam * p + c.psi + inputs.prefs.R
    return _out(H**exit.alpha * (exit.slope * (c.gamma * p / H) ** exit.beta - exit.k))


def entry_payoff(p, inputs: ModelInputs, exit: ExitSolution):
    """Payoff of stopping the entry problem at ``p``: ``max(v1(p), U(-R))``."""
    floor = utility(-inputs.prefs.R, inputs.prefs)
    return _out(np.maximum(v1_value(p, inputs, exit), floor))


def scaled_payoff_g2(theta, inputs: ModelInputs, exit: ExitSolution):
    """Entry payoff in scaled coordinates, built from ``f``."""
    theta = np.asarray(theta, dtype=float)
    R, psi, gamma = inputs.prefs.R, inputs.costs.psi, inputs.costs.gamma
    x = (gamma / (R + psi)) ** inputs.beta * theta
    v1 = (R + psi) ** exit.alpha * f_value(x, exit, inputs.xi)
    return _out(np.maximum(v1, utility(-R, inputs.prefs)))


@dataclass(frozen=True)
class EntrySolution:
    """Solved entry problem; ``exit`` is ``None`` only when ill-posed."""

    regime: EntryRegime
    exit: ExitSolution | None
    inputs: ModelInputs

    @property
    def tag(self) -> RegimeTag:
        return self.regime.tag

    def value(self, p):
        return entry_value(p, self)

    def payoff(self, p):
        self._require_well_posed()
        return entry_payoff(p, self.inputs, self.exit)

    def in_purchase_region(self, p):
        """Boolean mask of prices at which buying immediately is optimal."""
        self._require_well_posed()
        p = np.asarray(p, dtype=float)
        r = self.regime
        if r.tag is RegimeTag.ONE_SIDED:
            out = p >= r.p1_star
        elif r.tag is RegimeTag.INTERVAL:
            out = (p >= r.p1_star) & (p <= r.p2_star)
        else:
            out = np.zeros_like(p, dtype=bool)
        return bool(out) if out.ndim == 0 else out

    def _require_well_posed(self):
        if self.regime.tag is RegimeTag.ILL_POSED:
            raise IllPosedError("value is unbounded for ill-posed parameters")


def solve_entry(inputs: ModelInputs) -> EntrySolution:
    """Solve exit and entry problems for ``inputs``."""
    if classify_wellposedness(inputs) is WellPosedness.ILL_POSED:
        return EntrySolution(EntryRegime(RegimeTag.ILL_POSED), None, inputs)
    exit = solve_c(inputs.prefs, inputs.beta)
    return EntrySolution(classify_regime(inputs, exit), exit, inputs)


def entry_value(p, solution: EntrySolution):
    """Value of the combined purchase-and-sale problem at price ``p``."""
    solution._require_well_posed()
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0.0):
        raise DomainError("entry_value needs p > 0")
    inputs, exit, r = solution.inputs, solution.exit, solution.regime
    floor = utility(-inputs.prefs.R, inputs.prefs)
    if r.tag is RegimeTag.NO_TRADE:
        return _out(np.full_like(p, floor))

    b = inputs.beta
    p1 = r.p1_star
    v = v1_value(p, inputs, exit)
    if p1 > 0.0:
        chord = (v1_value(p1, inputs, exit) - floor) * (p / p1) ** b + floor
        v = np.where(p < p1, chord, v)
    if r.tag is RegimeTag.INTERVAL:
        v = np.where(p > r.p2_star, v1_value(r.p2_star, inputs, exit), v)
    return _out(v)
