"""Comparative statics: one-parameter sweeps of the purchase boundaries."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .entry import solve_entry
from .errors import InvalidParameterError
from .model import ModelInputs

__all__ = [
    "SWEEP_PARAMETERS",
    "SweepRecord",
    "Transition",
    "MonotonicityVerdict",
    "sweep_record",
    "run_sweep",
    "find_transitions",
    "check_monotonicity",
    "local_extrema",
]

# CLI name -> keyword of ModelInputs.from_values
SWEEP_PARAMETERS = {"lambda": "lam", "gamma": "gamma", "psi": "psi", "R": "R"}

MONOTONE_TOL = 1e-9


@dataclass(frozen=True)
class SweepRecord:
    parameter: str
    value: float
    regime: str
    p1_star: float | None
    p2_star: float | None
    C: float | None
    c: float | None
    critical_xi: float | None

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Transition:
    """Regime change located between ``lower`` and ``upper`` (at most ``tol`` apart)."""

    parameter: str
    lower: float
    upper: float
    regime_below: str
    regime_above: str

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class MonotonicityVerdict:
    parameter: str
    boundary: str
    direction: str
    holds: bool
    max_violation: float

    def as_dict(self) -> dict:
        return asdict(self)


def _keyword(parameter: str) -> str:
    try:
        return SWEEP_PARAMETERS[parameter]
    except KeyError:
        raise InvalidParameterError("param", f"cannot sweep {parameter!r}; choose from {sorted(SWEEP_PARAMETERS)}") from None


def sweep_record(base: ModelInputs, parameter: str, value: float) -> SweepRecord:
    """Solve ``base`` with one parameter replaced and summarise the result."""
    inputs = base.replace(**{_keyword(parameter): float(value)})
    sol = solve_entry(inputs)
    r = sol.regime
    c = sol.exit.c if sol.exit is not None else None
    return SweepRecord(parameter, float(value), r.tag.value, r.p1_star, r.p2_star, r.C, c, r.critical_xi)


def run_sweep(
    base: ModelInputs, parameter: str, lo: float, hi: float, steps: int, *, workers: int = 1
) -> list[SweepRecord]:
    """Evenly spaced sweep of ``parameter`` over ``[lo, hi]``.

    Every grid value is validated before any solving starts, so a range that
    leaves the parameter's domain is rejected as a whole.  Records come back
    in grid order whatever the worker count.
    """
    if int(steps) != steps or steps < 2:
        raise InvalidParameterError("steps", f"need at least 2 grid points, got {steps}")
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise InvalidParameterError("range", f"need finite lo < hi, got [{lo}, {hi}]")
    key = _keyword(parameter)
    values = np.linspace(lo, hi, int(steps))
    for v in (values[0], values[-1]):
        base.replace(**{key: float(v)})  # raises on an invalid endpoint
    if workers <= 1:
        return [sweep_record(base, parameter, v) for v in values]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda v: sweep_record(base, parameter, v), values))


def find_transitions(
    base: ModelInputs, records: list[SweepRecord], *, tol: float = 1e-6
) -> list[Transition]:
    """Bracket every regime change between neighbouring records by bisection."""
    out = []
    for a, b in zip(records, records[1:]):
        if a.regime == b.regime:
            continue
        lo, hi = a.value, b.value
        above = b.regime
        while hi - lo > tol:
            mid = lo + 0.5 * (hi - lo)
            tag = sweep_record(base, a.parameter, mid).regime
            if tag == a.regime:
                lo = mid
            else:
                # a third regime in between becomes the new upper side
                hi, above = mid, tag
        out.append(Transition(a.parameter, lo, hi, a.regime, above))
    return out


def check_monotonicity(
    records: list[SweepRecord], boundary: str, direction: str, *, tol: float = MONOTONE_TOL
) -> MonotonicityVerdict:
    """Check ``boundary`` against ``direction`` over consecutive records where it is defined.

    ``direction`` is ``"nondecreasing"`` or ``"nonincreasing"``.  The
    violation of a pair is how far it moves the wrong way, relative to the
    larger of the two values.
    """
    if direction not in ("nondecreasing", "nonincreasing"):
        raise ValueError(f"unknown direction {direction!r}")
    sign = 1.0 if direction == "nondecreasing" else -1.0
    worst = 0.0
    for a, b in zip(records, records[1:]):
        va, vb = getattr(a, boundary), getattr(b, boundary)
        if va is None or vb is None:
            continue
        drop = sign * (va - vb)
        scale = max(abs(va), abs(vb), 1e-300)
        worst = max(worst, drop / scale)
    param = records[0].parameter if records else ""
    return MonotonicityVerdict(param, boundary, direction, worst <= tol, worst)


def local_extrema(records: list[SweepRecord], boundary: str) -> list[int]:
    """Indices of strict interior local extrema of ``boundary``.

    Only runs of consecutive records where the boundary is defined are
    considered.
    """
    vals = [getattr(r, boundary) for r in records]
    found = []
    for i in range(1, len(vals) - 1):
        a, b, c = vals[i - 1], vals[i], vals[i + 1]
        if a is None or b is None or c is None:
            continue
        if (b > a and b > c) or (b < a and b < c):
            found.append(i)
    return found
