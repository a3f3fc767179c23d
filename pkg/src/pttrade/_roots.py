"""Bracketing root search used by the boundary solvers."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .errors import NumericalError


def bisect(
    func: Callable[[float], float],
    lo: float,
    hi: float,
    *,
    xtol: float = 0.0,
    rtol: float = 4 * np.finfo(float).eps,
    geometric: bool = False,
    maxiter: int = 2000,
) -> float:
    """Bisect a sign change of ``func`` on ``[lo, hi]``.

    Runs until the bracket is below ``xtol + rtol * |x|`` or can no longer be
    split in floating point.  With ``geometric=True`` (positive brackets
    only) the split point is the geometric mean, which converges in a number
    of steps proportional to the log of the bracket ratio.
    """
    flo, fhi = func(lo), func(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if np.sign(flo) == np.sign(fhi):
        raise NumericalError(f"no sign change on [{lo!r}, {hi!r}]: f={flo!r}, {fhi!r}")
    if geometric and lo <= 0.0:
        raise NumericalError("geometric bisection needs a positive bracket")
    for _ in range(maxiter):
        if geometric and hi / lo > 4.0:
            mid = math.sqrt(lo) * math.sqrt(hi)
        else:
            mid = lo + 0.5 * (hi - lo)
        if not lo < mid < hi:
            break
        fmid = func(mid)
        if fmid == 0.0:
            return mid
        if np.sign(fmid) == np.sign(flo):
            lo, flo = mid, fmid
        else:
            hi, fhi = mid, fmid
        if hi - lo <= xtol + rtol * max(abs(lo), abs(hi)):
            break
    else:
        raise NumericalError("bisection did not converge")
    # the endpoint with the smaller residual
    return lo if abs(flo) <= abs(fhi) else hi


def first_sign_change(values: np.ndarray, *, direction: str = "down") -> int | None:
    """Index ``i`` of the first pair ``values[i], values[i+1]`` that changes sign.

    ``direction="down"`` looks for a + to - (or + to 0) transition,
    ``"up"`` for - to +.
    """
    v = np.asarray(values)
    if direction == "down":
        hits = np.nonzero((v[:-1] > 0) & (v[1:] <= 0))[0]
    elif direction == "up":
        hits = np.nonzero((v[:-1] < 0) & (v[1:] >= 0))[0]
    else:
        raise ValueError(f"direction must be 'down' or 'up', got {direction!r}")
    return int(hits[0]) if hits.size else None
