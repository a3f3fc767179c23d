"""Valuation of threshold trading strategies.

Two independent routes to the expected utility of a buy-then-sell rule:

* ``evaluate_strategy_exact`` multiplies out first-passage probabilities of
  the price diffusion (upward level ``b`` from ``p`` is reached with
  probability ``(p/b)**beta``; downward levels are reached surely).
* ``simulate_strategy_mc`` simulates log-price paths on a time grid and
  detects crossings between grid points with the Brownian-bridge
  probability ``exp(-2 (L - y0)(L - y1) / (sigma**2 dt))``.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .entry import EntrySolution, RegimeTag, entry_value
from .errors import DomainError, IllPosedError, InvalidParameterError
from .exit import ExitSolution
from .model import ModelInputs, hitting_probability, utility

__all__ = [
    "BuyRule",
    "TradingStrategy",
    "StrategyValue",
    "DominanceReport",
    "MCEstimate",
    "optimal_strategy",
    "evaluate_strategy_exact",
    "perturbation_dominance_check",
    "passage_cdf",
    "unfinished_mass",
    "choose_horizon",
    "simulate_strategy_mc",
]


class BuyRule(enum.Enum):
    IMMEDIATE = "immediate"
    UPCROSS = "upcross"
    DOWNCROSS = "downcross"
    NEVER = "never"


@dataclass(frozen=True)
class TradingStrategy:
    """A purchase rule followed by a gain-exit sale.

    The sale happens when the price first reaches
    ``sale_multiple * (lam * buy_price + psi + R) / gamma``; ``None`` means
    the optimal multiple ``c``.
    """

    buy_rule: BuyRule
    level: float | None = None
    sale_multiple: float | None = None

    def __post_init__(self):
        needs_level = self.buy_rule in (BuyRule.UPCROSS, BuyRule.DOWNCROSS)
        if needs_level and not (self.level is not None and self.level > 0.0):
            raise InvalidParameterError("level", f"{self.buy_rule.value} needs a positive level")
        if not needs_level and self.level is not None:
            raise InvalidParameterError("level", f"{self.buy_rule.value} takes no level")
        if self.sale_multiple is not None and not self.sale_multiple > 0.0:
            raise InvalidParameterError("sale_multiple", "must be positive")

    @classmethod
    def immediate(cls, sale_multiple=None):
        return cls(BuyRule.IMMEDIATE, None, sale_multiple)

    @classmethod
    def upcross(cls, level, sale_multiple=None):
        return cls(BuyRule.UPCROSS, level, sale_multiple)

    @classmethod
    def downcross(cls, level, sale_multiple=None):
        return cls(BuyRule.DOWNCROSS, level, sale_multiple)

    @classmethod
    def never(cls):
        return cls(BuyRule.NEVER)

    @classmethod
    def buy_at(cls, level, p, sale_multiple=None):
        """Buy the first time the price touches ``level`` starting from ``p``."""
        if level == p:
            return cls.immediate(sale_multiple)
        if level > p:
            return cls.upcross(level, sale_multiple)
        return cls.downcross(level, sale_multiple)


@dataclass(frozen=True)
class StrategyValue:
    """Expected utility split over the three possible outcomes.

    Outcomes: never buy (utility ``U(-R)``), buy but never sell (``U(-H)``),
    and a completed round trip (``U(gamma x - H)``).
    """

    expected_utility: float
    prob_never_buy: float
    prob_buy_no_sale: float
    prob_round_trip: float
    utility_never_buy: float
    utility_buy_no_sale: float
    utility_round_trip: float
    buy_price: float | None = None
    sale_price: float | None = None


def _plan(p: float, strategy: TradingStrategy, inputs: ModelInputs, exit: ExitSolution):
    """Buy price, sale price and the probability that the purchase happens."""
    rule = strategy.buy_rule
    if rule is BuyRule.NEVER:
        return None, None, 0.0
    if rule is BuyRule.IMMEDIATE:
        b, q_buy = p, 1.0
    elif rule is BuyRule.UPCROSS:
        b = strategy.level
        if b < p:
            raise DomainError(f"up-cross level {b} is below the start price {p}")
        q_buy = hitting_probability(p, b, inputs.beta)
    else:
        b = strategy.level
        if b > p:
            raise DomainError(f"down-cross level {b} is above the start price {p}")
        q_buy = hitting_probability(p, b, inputs.beta)
    m = exit.c if strategy.sale_multiple is None else strategy.sale_multiple
    costs = inputs.costs
    H = costs.lam * b + costs.psi + inputs.prefs.R
    x_sale = max(m * H / costs.gamma, b)
    return b, x_sale, q_buy


def evaluate_strategy_exact(
    p: float, strategy: TradingStrategy, inputs: ModelInputs, exit: ExitSolution
) -> StrategyValue:
    if not inputs.beta > 0.0:
        raise IllPosedError("exact valuation needs beta > 0")
    if not p > 0.0:
        raise DomainError("start price must be positive")
    prefs = inputs.prefs
    u_never = utility(-prefs.R, prefs)
    b, x_sale, q_buy = _plan(p, strategy, inputs, exit)
    if b is None:
        return StrategyValue(u_never, 1.0, 0.0, 0.0, u_never, math.nan, math.nan)
    costs = inputs.costs
    H = costs.lam * b + costs.psi + prefs.R
    q_sell = hitting_probability(b, x_sale, inputs.beta)
    u_hold = utility(-H, prefs)
    u_trip = utility(costs.gamma * x_sale - H, prefs)
    probs = (1.0 - q_buy, q_buy * (1.0 - q_sell), q_buy * q_sell)
    value = math.fsum((probs[0] * u_never, probs[1] * u_hold, probs[2] * u_trip))
    return StrategyValue(value, *probs, u_never, u_hold, u_trip, buy_price=b, sale_price=x_sale)


def optimal_strategy(p: float, solution: EntrySolution) -> TradingStrategy:
    """The solver's purchase rule as seen from start price ``p``."""
    r = solution.regime
    if r.tag is RegimeTag.ILL_POSED:
        raise IllPosedError("no optimal strategy exists for ill-posed parameters")
    if r.tag is RegimeTag.NO_TRADE:
        return TradingStrategy.never()
    if p < r.p1_star:
        return TradingStrategy.upcross(r.p1_star)
    if r.tag is RegimeTag.INTERVAL and p > r.p2_star:
        return TradingStrategy.downcross(r.p2_star)
    return TradingStrategy.immediate()


@dataclass(frozen=True)
class DominanceReport:
    price: float
    optimal_value: float
    best_perturbed_value: float
    max_violation: float
    worst_strategy: TradingStrategy | None
    n_strategies: int

    def holds(self, tol: float = 1e-12) -> bool:
        return self.max_violation <= tol


def default_perturbation_grid(p: float, solution: EntrySolution, n: int = 21):
    """Buy levels and sale multiples spread around the optimal rule (centre point exact)."""
    t = np.linspace(-1.0, 1.0, n)
    strat = optimal_strategy(p, solution)
    base = p if strat.level is None else strat.level
    levels = base * 2.0**t
    multiples = solution.exit.c * (1.0 + 0.2 * t)
    return levels, multiples


def perturbation_dominance_check(
    p: float,
    solution: EntrySolution,
    buy_levels=None,
    sale_multiples=None,
) -> DominanceReport:
    """Evaluate every (buy level, sale multiple) rule and compare with the value function.

    No threshold rule may beat the value function; ``max_violation`` is the
    largest excess found (0 when none does).
    """
    if buy_levels is None or sale_multiples is None:
        levels, multiples = default_perturbation_grid(p, solution)
        buy_levels = levels if buy_levels is None else buy_levels
        sale_multiples = multiples if sale_multiples is None else sale_multiples
    target = entry_value(p, solution)
    best, worst = -math.inf, None
    n = 0
    for level in np.asarray(buy_levels, dtype=float):
        for m in np.asarray(sale_multiples, dtype=float):
            strat = TradingStrategy.buy_at(float(level), p, float(m))
            val = evaluate_strategy_exact(p, strat, solution.inputs, solution.exit).expected_utility
            n += 1
            if val > best:
                best, worst = val, strat
    return DominanceReport(p, target, best, max(0.0, best - target), worst, n)


# ---------------------------------------------------------------------------
# horizon truncation
# ---------------------------------------------------------------------------


def _norm_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def passage_cdf(distance: float, drift: float, sigma: float, t: float) -> float:
    """``P(tau <= t)`` for ``drift * s + sigma * W_s`` to first reach ``distance > 0``."""
    if distance <= 0.0:
        return 1.0
    if t <= 0.0:
        return 0.0
    sd = sigma * math.sqrt(t)
    first = _norm_cdf((drift * t - distance) / sd)
    expo = 2.0 * drift * distance / sigma**2
    second = _norm_cdf((-distance - drift * t) / sd)
    # exp(expo) * second, guarded against overflow when drift > 0
    tail = math.exp(expo + math.log(second)) if second > 0.0 else 0.0
    return min(1.0, first + tail)


def _passage_tail(distance: float, drift: float, sigma: float, t: float) -> float:
    """``P(t < tau < inf)`` for the same passage problem."""
    if distance <= 0.0:
        return 0.0
    reach = 1.0 if drift >= 0.0 else math.exp(2.0 * drift * distance / sigma**2)
    return max(0.0, reach - passage_cdf(distance, drift, sigma, t))


def unfinished_mass(p: float, strategy: TradingStrategy, inputs: ModelInputs, exit: ExitSolution, horizon: float) -> float:
    """Upper bound on the probability that a rule completes only after ``horizon``.

    Paths that would eventually buy (or sell) but have not by the horizon
    are scored as if they never would; this bounds that misclassified mass
    by ``P(T/2 < buy time < inf) + P(buy) P(T/2 < holding time < inf)``.
    """
    b, x_sale, q_buy = _plan(p, strategy, inputs, exit)
    if b is None:
        return 0.0
    sigma = inputs.market.sigma
    nu = -inputs.beta * sigma**2 / 2.0  # log-price drift
    half = horizon / 2.0
    if b >= p:
        buy_tail = _passage_tail(math.log(b / p), nu, sigma, half)
    else:
        buy_tail = _passage_tail(math.log(p / b), -nu, sigma, half)
    sell_tail = _passage_tail(math.log(x_sale / b), nu, sigma, half)
    return buy_tail + q_buy * sell_tail


def choose_horizon(p, strategy, inputs, exit, target: float = 0.002) -> float:
    """Smallest power-of-two multiple of ``1/sigma**2`` with unfinished mass below ``target``."""
    horizon = 1.0 / inputs.market.sigma**2
    while unfinished_mass(p, strategy, inputs, exit, horizon) >= target:
        horizon *= 2.0
        if horizon > 1e9:
            raise DomainError("no horizon reaches the requested unfinished-mass target")
    return horizon


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    stderr: float
    n_paths: int
    horizon: float
    n_steps: int
    frac_never_buy: float
    frac_buy_no_sale: float
    frac_round_trip: float

    def z_score(self, exact: float) -> float:
        if self.stderr == 0.0:
            return 0.0 if self.mean == exact else math.copysign(math.inf, self.mean - exact)
        return (self.mean - exact) / self.stderr


def _simulate_block(n, rng, y0, log_buy, buy_up, immediate, log_sale, drift, vol, n_steps, bridge):
    """Outcome codes (0 never bought, 1 held, 2 sold) for ``n`` paths.

    Each live path is tracked by its distance ``gap > 0`` to the barrier it
    is waiting for, so up- and down-crossings share one update.  The
    log-price increment is symmetric in law, so the gap moves by
    ``-(direction * drift) + vol * Z`` either way.
    """
    state = np.zeros(n, dtype=np.int8)
    sale_gap = log_sale - log_buy
    if immediate:
        state[:] = 1
        gap = np.full(n, sale_gap)
        step_mean = np.full(n, -drift)
    else:
        direction = 1.0 if buy_up else -1.0
        gap = np.full(n, direction * (log_buy - y0))
        step_mean = np.full(n, -direction * drift)
    if sale_gap <= 0.0:
        # sale target at or below the purchase price: sell on purchase
        state[state == 1] = 2
    idx = np.nonzero(state < 2)[0]
    gap, step_mean = gap[idx], step_mean[idx]
    # beyond this many bridge standard deviations the crossing probability is < 1e-17
    near = 40.0 * vol * vol
    two_var = 2.0 / (vol * vol)
    for _ in range(n_steps):
        if idx.size == 0:
            break
        new_gap = gap + step_mean + vol * rng.standard_normal(idx.size)
        crossed = new_gap <= 0.0
        if bridge:
            cand = np.nonzero(~crossed & (gap * new_gap < near))[0]
            if cand.size:
                p_cross = np.exp(-two_var * gap[cand] * new_gap[cand])
                crossed[cand] = rng.random(cand.size) < p_cross
        gap = new_gap
        if crossed.any():
            hit = idx[crossed]
            state[hit] += 1
            if sale_gap <= 0.0:
                state[hit] = 2
            # a crossing puts the path exactly on the barrier; holders now wait for the sale
            now_holding = crossed & (state[idx] == 1)
            gap[now_holding] = sale_gap
            step_mean[now_holding] = -drift
            keep = state[idx] < 2
            idx, gap, step_mean = idx[keep], gap[keep], step_mean[keep]
    return state


def simulate_strategy_mc(
    p: float,
    strategy: TradingStrategy,
    inputs: ModelInputs,
    exit: ExitSolution,
    *,
    horizon: float,
    n_paths: int,
    seed: int = 0,
    n_steps: int = 4096,
    n_workers: int = 1,
    bridge: bool = True,
) -> MCEstimate:
    """Monte Carlo expected utility of ``strategy`` over ``[0, horizon]``.

    Paths use exact Gaussian log-price increments.  Paths are split into
    ``n_workers`` blocks, block ``i`` drawing from ``Philox`` seeded with
    ``(seed, i)``; results are reproducible for a fixed worker count.
    """
    if not horizon > 0.0 or not math.isfinite(horizon):
        raise InvalidParameterError("horizon", f"must be positive and finite, got {horizon}")
    if int(n_paths) != n_paths or n_paths < 1:
        raise InvalidParameterError("paths", f"must be a positive integer, got {n_paths}")
    if int(n_steps) != n_steps or n_steps < 1:
        raise InvalidParameterError("steps", f"must be a positive integer, got {n_steps}")
    if not inputs.beta > 0.0:
        raise IllPosedError("simulation needs beta > 0")
    n_paths, n_steps = int(n_paths), int(n_steps)
    exact = evaluate_strategy_exact(p, strategy, inputs, exit)
    u = np.array([exact.utility_never_buy, exact.utility_buy_no_sale, exact.utility_round_trip])

    if strategy.buy_rule is BuyRule.NEVER:
        return MCEstimate(exact.utility_never_buy, 0.0, n_paths, horizon, n_steps, 1.0, 0.0, 0.0)

    dt = horizon / n_steps
    sigma = inputs.market.sigma
    drift = -inputs.beta * sigma**2 / 2.0 * dt
    vol = sigma * math.sqrt(dt)
    args = (
        math.log(p),
        math.log(exact.buy_price),
        strategy.buy_rule is BuyRule.UPCROSS,
        strategy.buy_rule is BuyRule.IMMEDIATE,
        math.log(exact.sale_price),
        drift,
        vol,
        n_steps,
        bridge,
    )
    sizes = [n_paths // n_workers + (i < n_paths % n_workers) for i in range(n_workers)]

    def run(i):
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), i])))
        return _simulate_block(sizes[i], rng, *args)

    if n_workers == 1:
        states = [run(0)]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            states = list(pool.map(run, range(n_workers)))
    state = np.concatenate(states)
    counts = np.bincount(state, minlength=3)
    values = u[state]
    mean = math.fsum(values) / n_paths
    if n_paths > 1:
        var = math.fsum((values - mean) ** 2) / (n_paths - 1)
    else:
        var = 0.0
    fr = counts / n_paths
    return MCEstimate(mean, math.sqrt(var / n_paths), n_paths, horizon, n_steps, *map(float, fr))
