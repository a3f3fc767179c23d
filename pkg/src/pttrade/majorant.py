"""Brute-force value functions from the smallest concave majorant on a grid.

In scaled coordinates ``theta = p**beta`` the price is a martingale, so the
value of stopping a payoff ``g`` optimally is the smallest concave function
above ``g``.  On a finite grid that is the upper convex hull of the points
``(theta_i, g(theta_i))``, which we build with a monotone chain.  None of
this uses the closed-form boundaries; the solver's output only sets the
grid extent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .entry import EntrySolution, RegimeTag
from .errors import DomainError, IllPosedError, RegimeError
from .exit import ExitSolution, exit_value
from .model import ModelInputs, utility

__all__ = [
    "GridFunction",
    "MajorantResult",
    "GridSpec",
    "upper_hull",
    "concave_majorant",
    "exit_payoff_grid",
    "entry_payoff_grid",
    "oracle_exit_value",
    "oracle_entry_value",
    "oracle_boundaries",
    "comparison_window",
    "OracleBoundaries",
]


@dataclass(frozen=True)
class GridFunction:
    thetas: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.thetas, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape:
            raise ValueError("thetas and values must be 1-d arrays of equal length")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise ValueError("grid function must be finite")
        if np.any(np.diff(t) <= 0.0):
            raise ValueError("thetas must be strictly increasing")
        object.__setattr__(self, "thetas", t)
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class MajorantResult:
    thetas: np.ndarray
    hull_values: np.ndarray
    contact_mask: np.ndarray
    vertices: np.ndarray

    def __call__(self, theta):
        """Piecewise-linear majorant at arbitrary ``theta`` inside the grid."""
        theta = np.asarray(theta, dtype=float)
        if np.any(theta < self.thetas[0]) or np.any(theta > self.thetas[-1]):
            raise DomainError("theta outside the grid")
        out = np.interp(theta, self.thetas, self.hull_values)
        return float(out) if out.ndim == 0 else out


def upper_hull(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Indices of the upper convex hull vertices of points sorted by ``x``.

    Andrew's monotone chain, upper half only.  Collinear points are dropped.
    """
    hull: list[int] = []
    xs, ys = x.tolist(), y.tolist()
    for i in range(len(xs)):
        xi, yi = xs[i], ys[i]
        while len(hull) >= 2:
            j, k = hull[-2], hull[-1]
            # keep k only if it lies strictly above the chord j -> i
            cross = (xs[k] - xs[j]) * (yi - ys[j]) - (ys[k] - ys[j]) * (xi - xs[j])
            if cross >= 0.0:
                hull.pop()
            else:
                break
        hull.append(i)
    return np.asarray(hull, dtype=np.intp)


def concave_majorant(gf: GridFunction, contact_tol: float = 1e-12, *, nondecreasing: bool = False) -> MajorantResult:
    """Smallest concave majorant of ``gf`` evaluated on its own grid.

    ``contact_tol`` is relative to the largest ``|value|``; points with
    ``hull - value <= contact_tol * scale`` are flagged as contact
    (stopping) points.  With ``nondecreasing=True``
    the hull also has to be nondecreasing, which amounts to closing the grid
    with a horizontal ray at the maximum of ``gf``.
    """
    if gf.thetas.size < 2:
        raise ValueError("need at least two points")
    tol = contact_tol * max(1.0, float(np.max(np.abs(gf.values))))
    if nondecreasing:
        xs = np.append(gf.thetas, 2.0 * gf.thetas[-1])
        ys = np.append(gf.values, gf.values.max())
        vertices = upper_hull(xs, ys)
        vertices = vertices[vertices < gf.thetas.size]
        # the last grid point carries the ray's level if it is not a vertex
        hull = np.interp(gf.thetas, xs[vertices].tolist() + [xs[-1]], ys[vertices].tolist() + [ys[-1]])
        hull = np.maximum(hull, gf.values)
        contact = hull - gf.values <= tol
        return MajorantResult(gf.thetas, hull, contact, vertices)
    vertices = upper_hull(gf.thetas, gf.values)
    hull = np.interp(gf.thetas, gf.thetas[vertices], gf.values[vertices])
    # interpolation can undershoot by an ulp at vertices of the input itself
    hull = np.maximum(hull, gf.values)
    contact = hull - gf.values <= tol
    return MajorantResult(gf.thetas, hull, contact, vertices)


@dataclass(frozen=True)
class GridSpec:
    """Grid policy for the oracles.

    Prices are log-spaced over ``[p_max * min_ratio, p_max]`` and mapped to
    ``theta``; ``theta = 0`` is prepended because every chord in the proofs
    is anchored there.  ``theta_max_factor`` multiplies the relevant
    threshold in ``theta`` (sale threshold for exit, purchase boundary for
    entry).
    """

    n_points: int = 100_000
    theta_max_factor: float | None = None
    min_ratio: float = 1e-10
    contact_tol: float = 1e-12

    def __post_init__(self):
        if self.n_points < 10:
            raise ValueError(f"grid too coarse: {self.n_points} points")


def _price_grid(p_max: float, spec: GridSpec) -> np.ndarray:
    return np.concatenate(([0.0], np.geomspace(p_max * spec.min_ratio, p_max, spec.n_points - 1)))


def exit_payoff_grid(H: float, inputs: ModelInputs, p_max: float, spec: GridSpec) -> tuple[np.ndarray, GridFunction]:
    """Prices and the scaled sale payoff ``U(gamma p - H)`` on the oracle grid."""
    beta = inputs.beta
    prices = _price_grid(p_max, spec)
    values = utility(inputs.costs.gamma * prices - H, inputs.prefs)
    return prices, GridFunction(prices**beta, values)


def _require_scaled(inputs: ModelInputs):
    if not inputs.beta > 0.0:
        raise IllPosedError("the scaled-majorant oracle needs beta > 0")


def oracle_exit_value(p, H: float, inputs: ModelInputs, exit: ExitSolution, spec: GridSpec | None = None):
    """Exit value at ``p`` from the hull of the sale payoff.

    ``exit`` only sets the grid extent (``theta_max = 100 (c H / gamma)**beta``
    by default); the hull never sees the closed form.
    """
    _require_scaled(inputs)
    spec = spec or GridSpec()
    factor = spec.theta_max_factor or 100.0
    beta = inputs.beta
    theta_max = factor * (exit.c * H / inputs.costs.gamma) ** beta
    prices, gf = exit_payoff_grid(H, inputs, theta_max ** (1.0 / beta), spec)
    maj = concave_majorant(gf, spec.contact_tol)
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0.0):
        raise DomainError("prices must be positive")
    return maj(p**beta)


def _entry_reference_price(solution: EntrySolution) -> float:
    inputs, r = solution.inputs, solution.regime
    ref = (inputs.prefs.R + inputs.costs.psi) / inputs.costs.gamma
    if r.tag is RegimeTag.INTERVAL:
        return r.p2_star
    if r.tag is RegimeTag.ONE_SIDED and r.p1_star > 0.0:
        return r.p1_star
    return ref


def entry_payoff_grid(inputs: ModelInputs, exit: ExitSolution, p_max: float, spec: GridSpec) -> tuple[np.ndarray, GridFunction]:
    """Prices and ``max(V1(p; lam p + psi + R), U(-R))`` on the oracle grid."""
    prices = _price_grid(p_max, spec)
    costs = inputs.costs
    H = costs.lam * prices + costs.psi + inputs.prefs.R
    v1 = np.empty_like(prices)
    v1[0] = -exit.k * H[0] ** exit.alpha  # exit value as p -> 0+
    v1[1:] = exit_value(prices[1:], H[1:], inputs, exit)
    values = np.maximum(v1, utility(-inputs.prefs.R, inputs.prefs))
    return prices, GridFunction(prices**inputs.beta, values)


def _entry_majorant(solution: EntrySolution, spec: GridSpec):
    _require_scaled(solution.inputs)
    if solution.regime.tag is RegimeTag.ILL_POSED:
        raise IllPosedError("no value function for ill-posed parameters")
    factor = spec.theta_max_factor or 1000.0
    beta = solution.inputs.beta
    theta_max = factor * _entry_reference_price(solution) ** beta
    prices, gf = entry_payoff_grid(solution.inputs, solution.exit, theta_max ** (1.0 / beta), spec)
    return prices, gf, concave_majorant(gf, spec.contact_tol, nondecreasing=True)


def comparison_window(solution: EntrySolution, spec: GridSpec | None = None) -> float:
    """Largest price at which entry values are compared against the oracle.

    ``2**(1/beta) * p2*`` in the interval regime and a tenth of the grid's
    ``theta`` range otherwise, which keeps comparisons away from the
    right edge of the grid.
    """
    spec = spec or GridSpec()
    beta = solution.inputs.beta
    factor = spec.theta_max_factor or 1000.0
    if solution.regime.tag is RegimeTag.INTERVAL:
        return 2.0 ** (1.0 / beta) * solution.regime.p2_star
    return (factor / 10.0 * _entry_reference_price(solution) ** beta) ** (1.0 / beta)


def oracle_entry_value(p, solution: EntrySolution, spec: GridSpec | None = None):
    """Entry value at ``p`` from the hull of the entry payoff.

    The scaled price is a nonnegative martingale that drifts to zero, so
    any level above the current one is out of reach with positive
    probability but every lower level is reached surely.  The value is
    therefore the smallest nondecreasing concave majorant, not just the
    smallest concave one; the plain hull on a truncated grid would bend
    down towards the last grid point.
    """
    spec = spec or GridSpec()
    _, _, maj = _entry_majorant(solution, spec)
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0.0):
        raise DomainError("prices must be positive")
    return maj(p**solution.inputs.beta)


@dataclass(frozen=True)
class OracleBoundaries:
    p1: float
    p2: float | None
    p1_cell: tuple[float, float]
    p2_cell: tuple[float, float] | None


def oracle_boundaries(solution: EntrySolution, spec: GridSpec | None = None) -> OracleBoundaries:
    """Purchase region read off the hull's contact set.

    Contact points strictly above the no-trade utility mark the purchase
    region.  Its first point gives ``p1``.  The end of the first unbroken
    run gives ``p2``, unless the run reaches the end of the grid (a
    right-unbounded region).  The cells are
    the neighbouring grid prices on either side.
    """
    spec = spec or GridSpec()
    prices, gf, maj = _entry_majorant(solution, spec)
    floor = utility(-solution.inputs.prefs.R, solution.inputs.prefs)
    above = gf.values > floor
    idx = np.nonzero(maj.contact_mask & above)[0]
    if idx.size == 0:
        raise RegimeError("empty contact set: the agent never buys")
    lo = int(idx[0])
    gaps = np.nonzero(np.diff(idx) > 1)[0]
    hi = int(idx[gaps[0]]) if gaps.size else int(idx[-1])
    last = prices.size - 1
    p1_cell = (float(prices[max(lo - 1, 0)]), float(prices[min(lo + 1, last)]))
    if hi == last:
        return OracleBoundaries(float(prices[lo]), None, p1_cell, None)
    p2_cell = (float(prices[max(hi - 1, 0)]), float(prices[min(hi + 1, last)]))
    return OracleBoundaries(float(prices[lo]), float(prices[hi]), p1_cell, p2_cell)
