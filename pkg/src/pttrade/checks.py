"""Verification suite: the closed-form solution checked three independent ways.

* exact valuation of the solver's own rule equals the value function;
* no perturbed threshold rule beats the value function;
* the grid hull oracle reproduces values and boundaries.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .entry import EntrySolution, RegimeTag, classify_regime
from .errors import IllPosedError
from .exit import exit_value
from .majorant import GridSpec, comparison_window, oracle_boundaries, oracle_entry_value, oracle_exit_value
from .strategy import evaluate_strategy_exact, optimal_strategy, perturbation_dominance_check

__all__ = [
    "CheckResult",
    "verification_prices",
    "exact_valuation_checks",
    "dominance_checks",
    "oracle_value_checks",
    "oracle_boundary_checks",
    "run_verification",
    "with_corrupted_c",
]

EXACT_TOL = 1e-9
DOMINANCE_TOL = 1e-12
ORACLE_TOL = 1e-3


@dataclass(frozen=True)
class CheckResult:
    check: str
    price: float | None
    value: float | None
    reference: float | None
    error: float
    tolerance: float
    passed: bool

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


def verification_prices(solution: EntrySolution, n: int = 20) -> np.ndarray:
    """Log-spaced prices straddling the purchase boundaries."""
    inputs, r = solution.inputs, solution.regime
    ref = (inputs.prefs.R + inputs.costs.psi) / inputs.costs.gamma
    lo = r.p1_star if r.p1_star else ref
    hi = r.p2_star if r.p2_star else lo
    return np.geomspace(lo / 20.0, hi * 20.0, n)


def exact_valuation_checks(solution: EntrySolution, prices, tol: float = EXACT_TOL) -> list[CheckResult]:
    out = []
    for p in np.asarray(prices, dtype=float):
        strat = optimal_strategy(float(p), solution)
        got = evaluate_strategy_exact(float(p), strat, solution.inputs, solution.exit).expected_utility
        want = solution.value(float(p))
        err = _rel(got, want)
        out.append(CheckResult("exact_valuation", float(p), got, want, err, tol, err <= tol))
    return out


def dominance_checks(solution: EntrySolution, prices, tol: float = DOMINANCE_TOL) -> list[CheckResult]:
    out = []
    for p in np.asarray(prices, dtype=float):
        rep = perturbation_dominance_check(float(p), solution)
        out.append(
            CheckResult(
                "dominance", float(p), rep.best_perturbed_value, rep.optimal_value, rep.max_violation, tol, rep.holds(tol)
            )
        )
    return out


def oracle_value_checks(
    solution: EntrySolution, n: int = 50, spec: GridSpec | None = None, tol: float = ORACLE_TOL
) -> list[CheckResult]:
    """Entry values inside the comparison window, then exit values at ``(p, H)`` pairs."""
    spec = spec or GridSpec()
    out = []
    w = comparison_window(solution, spec)
    prices = np.geomspace(w * 1e-6, w, n)
    got = np.atleast_1d(oracle_entry_value(prices, solution, spec))
    want = np.atleast_1d(solution.value(prices))
    for p, g, v in zip(prices, got, want):
        err = _rel(float(g), float(v))
        out.append(CheckResult("oracle_entry_value", float(p), float(g), float(v), err, tol, err <= tol))

    inputs, exit = solution.inputs, solution.exit
    R, gamma = inputs.prefs.R, inputs.costs.gamma
    # one hull per reference point; prices span both sides of the sale threshold
    for H in (R, 3.0 * R + inputs.costs.psi):
        threshold = exit.c * H / gamma
        ps = np.geomspace(threshold * 1e-3, threshold * 10.0, n // 2)
        got = np.atleast_1d(oracle_exit_value(ps, H, inputs, exit, spec))
        want = np.atleast_1d(exit_value(ps, H, inputs, exit))
        for p, g, v in zip(ps, got, want):
            err = _rel(float(g), float(v))
            out.append(CheckResult("oracle_exit_value", float(p), float(g), float(v), err, tol, err <= tol))
    return out


def oracle_boundary_checks(solution: EntrySolution, spec: GridSpec | None = None) -> list[CheckResult]:
    """Solver boundaries must fall inside the oracle's grid cells.

    ``error`` is the distance outside the cell (0 when inside).
    """
    r = solution.regime
    if r.tag is RegimeTag.NO_TRADE:
        return []
    ob = oracle_boundaries(solution, spec)

    def cell_check(name, solver, cell):
        lo, hi = cell
        miss = max(lo - solver, solver - hi, 0.0)
        return CheckResult(name, solver, (lo + hi) / 2.0, solver, miss, 0.0, miss == 0.0)

    out = [cell_check("oracle_p1", r.p1_star, ob.p1_cell)]
    if r.p2_star is None:
        unbounded = ob.p2 is None
        out.append(CheckResult("oracle_p2_unbounded", None, None, None, 0.0 if unbounded else 1.0, 0.0, unbounded))
    elif ob.p2_cell is None:
        out.append(CheckResult("oracle_p2", r.p2_star, None, r.p2_star, math.inf, 0.0, False))
    else:
        out.append(cell_check("oracle_p2", r.p2_star, ob.p2_cell))
    return out


def run_verification(
    solution: EntrySolution, n_prices: int = 20, *, spec: GridSpec | None = None, oracle: bool = True
) -> list[CheckResult]:
    if solution.regime.tag is RegimeTag.ILL_POSED:
        raise IllPosedError("nothing to verify: the value is unbounded")
    prices = verification_prices(solution, n_prices)
    results = exact_valuation_checks(solution, prices) + dominance_checks(solution, prices)
    if oracle:
        results += oracle_value_checks(solution, spec=spec) + oracle_boundary_checks(solution, spec)
    return results


def with_corrupted_c(solution: EntrySolution, factor: float) -> EntrySolution:
    """Copy of ``solution`` solved again with ``c`` multiplied by ``factor``.

    Only for exercising the verification suite: a wrong exit multiple must
    make some check fail.
    """
    e = solution.exit
    c = e.c * factor
    bad = dataclasses.replace(e, c=c, c_minus_one=c - 1.0)
    return EntrySolution(classify_regime(solution.inputs, bad), bad, solution.inputs)
