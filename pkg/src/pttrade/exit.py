"""Optimal liquidation of a held asset.

Once the asset has been bought and the reference point ``H`` is fixed, the
agent sells the first time the price reaches ``c * H / gamma``.  The gain
multiple ``c > 1`` depends only on ``alpha``, ``beta`` and ``k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._roots import bisect, first_sign_change
from .errors import DomainError, IllPosedError, NumericalError
from .model import ModelInputs, Preferences

__all__ = ["ExitSolution", "exit_equation", "solve_c", "sale_threshold", "exit_value"]

ROOT_TOL = 1e-12
_C_MAX = 1e12


@dataclass(frozen=True)
class ExitSolution:
    """Gain-exit multiple together with the parameters it was solved for.

    ``c_minus_one`` is kept separately because ``c`` can sit within a few
    ulps of 1 when ``alpha`` is close to 1.
    """

    c: float
    c_minus_one: float
    residual: float
    alpha: float
    beta: float
    k: float

    @property
    def kappa(self) -> float:
        """``c**(1-beta) * (c-1)**(alpha-1)``, the recurring constant of the closed forms."""
        return math.exp(
            (1.0 - self.beta) * math.log1p(self.c_minus_one)
            + (self.alpha - 1.0) * math.log(self.c_minus_one)
        )

    @property
    def slope(self) -> float:
        """Slope of the exit value's linear part: ``(alpha/beta) * kappa``."""
        return self.alpha / self.beta * self.kappa


def exit_equation(c_minus_one, alpha: float, beta: float, k: float):
    """Left side of the gain-multiple equation, written in ``d = c - 1``.

    ``(alpha/beta) c (c-1)**(alpha-1) - (c-1)**alpha - k``, factored as
    ``d**(alpha-1) * ((alpha/beta)(1+d) - d) - k`` so that it stays finite
    near ``d = 0``.
    """
    d = np.asarray(c_minus_one, dtype=float)
    out = d ** (alpha - 1.0) * ((alpha / beta) * (1.0 + d) - d) - k
    return float(out) if out.ndim == 0 else out


def solve_c(prefs: Preferences, beta: float) -> ExitSolution:
    """Solve for the gain-exit multiple ``c``; requires ``0 < alpha <= beta <= 1``."""
    alpha, k = prefs.alpha, prefs.k
    if not (0.0 < alpha <= beta <= 1.0):
        raise IllPosedError(f"exit problem needs 0 < alpha <= beta <= 1, got alpha={alpha}, beta={beta}")

    def F(d):
        return exit_equation(d, alpha, beta, k)

    lo, hi = 1e-9, 1.0
    # F -> +inf as d -> 0+; if alpha is close to 1 the root can sit below 1e-9
    while F(lo) <= 0.0:
        lo *= 1e-3
        if lo < 1e-300:
            raise NumericalError("could not bracket c from below")
    while F(hi) >= 0.0:
        hi *= 10.0
        if hi > _C_MAX:
            raise NumericalError(f"bracket for c exceeded {_C_MAX:g}")

    # the smallest root: locate the first down-crossing on a log grid first
    grid = np.geomspace(lo, hi, 257)
    i = first_sign_change(F(grid), direction="down")
    d = bisect(F, float(grid[i]), float(grid[i + 1]), geometric=True)
    residual = abs(F(d))
    if residual > ROOT_TOL:
        raise NumericalError(f"residual {residual:.3g} for c exceeds {ROOT_TOL:g}")
    return ExitSolution(c=1.0 + d, c_minus_one=d, residual=residual, alpha=alpha, beta=beta, k=k)


def sale_threshold(c: float, H: float, gamma: float) -> float:
    """Price at which an asset bought with reference point ``H`` is sold."""
    if not (c > 1.0 and H > 0.0 and 0.0 < gamma <= 1.0):
        raise DomainError(f"need c > 1, H > 0, 0 < gamma <= 1; got c={c}, H={H}, gamma={gamma}")
    return c * H / gamma


def exit_value(p, H, inputs: ModelInputs, exit: ExitSolution):
    """Value of holding the asset at price ``p`` with reference point ``H``.

    Below the sale threshold the value is linear in ``p**beta``; at and
    above it the agent sells at once and receives ``(gamma p - H)**alpha``.
    ``p`` and ``H`` broadcast against each other.
    """
    p_arr = np.asarray(p, dtype=float)
    H = np.asarray(H, dtype=float)
    if np.any(p_arr <= 0.0) or np.any(H <= 0.0):
        raise DomainError("exit_value needs p > 0 and H > 0")
    alpha, beta, k = exit.alpha, exit.beta, exit.k
    gamma = inputs.costs.gamma
    threshold = exit.c * H / gamma
    waiting = exit.slope * H ** (alpha - beta) * (gamma * p_arr) ** beta - k * H**alpha
    selling = np.abs(gamma * p_arr - H) ** alpha
    out = np.where(p_arr < threshold, waiting, selling)
    return float(out) if out.ndim == 0 else out
