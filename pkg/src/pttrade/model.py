"""Model parameters, the S-shaped utility and diffusion helpers.

Prices follow a geometric Brownian motion dP = P(mu dt + sigma dB).  Every
solver formula depends on the market only through the exponent
``beta = 1 - 2 mu / sigma**2``, which makes ``P**beta`` a local martingale
whenever ``beta > 0``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, IllPosedError, InvalidParameterError

__all__ = [
    "Preferences",
    "MarketDynamics",
    "TransactionCosts",
    "ModelInputs",
    "WellPosedness",
    "utility",
    "scale",
    "hitting_probability",
    "classify_wellposedness",
    "buy_and_hold_value",
]


def _require(cond: bool, name: str, message: str) -> None:
    if not cond:
        raise InvalidParameterError(name, message)


def _finite(value, name: str) -> float:
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise InvalidParameterError(name, f"expected a number, got {value!r}") from None
    _require(math.isfinite(value), name, f"must be finite, got {value}")
    return value


@dataclass(frozen=True)
class Preferences:
    """Piecewise-power utility with loss aversion and an aspiration level.

    ``alpha`` is the curvature exponent, ``k`` the loss-aversion coefficient
    and ``R`` the aspiration level added to the purchase cost to form the
    reference point.
    """

    alpha: float
    k: float
    R: float

    def __post_init__(self):
        alpha = _finite(self.alpha, "alpha")
        k = _finite(self.k, "k")
        R = _finite(self.R, "R")
        _require(0.0 < alpha < 1.0, "alpha", f"must satisfy 0 < alpha < 1, got {alpha}")
        _require(k > 1.0, "k", f"must be > 1, got {k}")
        _require(R > 0.0, "R", f"must be > 0, got {R}")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "R", R)


@dataclass(frozen=True)
class MarketDynamics:
    """GBM drift and volatility; ``beta`` is derived and never set directly."""

    mu: float
    sigma: float
    beta: float = field(init=False)

    def __post_init__(self):
        mu = _finite(self.mu, "mu")
        sigma = _finite(self.sigma, "sigma")
        _require(mu >= 0.0, "mu", f"must be >= 0, got {mu}")
        _require(sigma > 0.0, "sigma", f"must be > 0, got {sigma}")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "beta", 1.0 - 2.0 * mu / sigma**2)

    @classmethod
    def from_beta(cls, beta: float) -> "MarketDynamics":
        """Build dynamics with unit volatility and the drift implied by ``beta``."""
        beta = _finite(beta, "beta")
        _require(beta <= 1.0, "beta", f"must be <= 1 (non-negative drift), got {beta}")
        market = cls(mu=(1.0 - beta) / 2.0, sigma=1.0)
        # keep the requested value exactly rather than the round-tripped one
        object.__setattr__(market, "beta", beta)
        return market


@dataclass(frozen=True)
class TransactionCosts:
    """Proportional purchase multiplier ``lam``, sale multiplier ``gamma``, entry fee ``psi``."""

    lam: float = 1.0
    gamma: float = 1.0
    psi: float = 0.0

    def __post_init__(self):
        lam = _finite(self.lam, "lambda")
        gamma = _finite(self.gamma, "gamma")
        psi = _finite(self.psi, "psi")
        _require(lam >= 1.0, "lambda", f"must be >= 1, got {lam}")
        _require(0.0 < gamma <= 1.0, "gamma", f"must satisfy 0 < gamma <= 1, got {gamma}")
        _require(psi >= 0.0, "psi", f"must be >= 0, got {psi}")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "psi", psi)

    @property
    def xi(self) -> float:
        """Round-trip cost ratio ``lam / gamma`` (always >= 1)."""
        return self.lam / self.gamma


@dataclass(frozen=True)
class ModelInputs:
    prefs: Preferences
    market: MarketDynamics
    costs: TransactionCosts

    @classmethod
    def from_values(
        cls,
        *,
        alpha: float,
        k: float,
        R: float,
        lam: float = 1.0,
        gamma: float = 1.0,
        psi: float = 0.0,
        beta: float | None = None,
        mu: float | None = None,
        sigma: float | None = None,
    ) -> "ModelInputs":
        """Flat constructor; give either ``beta`` or both ``mu`` and ``sigma``."""
        if beta is not None:
            if mu is not None or sigma is not None:
                raise InvalidParameterError("beta", "give either beta or (mu, sigma), not both")
            market = MarketDynamics.from_beta(beta)
        else:
            if mu is None or sigma is None:
                raise InvalidParameterError("beta", "give beta or both mu and sigma")
            market = MarketDynamics(mu, sigma)
        return cls(Preferences(alpha, k, R), market, TransactionCosts(lam, gamma, psi))

    def replace(self, **changes) -> "ModelInputs":
        """Copy with some flat parameters changed (same keywords as ``from_values``)."""
        values = self.as_dict()
        if "beta" in changes:
            values.pop("mu")
            values.pop("sigma")
        elif "mu" in changes or "sigma" in changes:
            values.pop("beta")
        else:
            values.pop("mu")
            values.pop("sigma")
        values.update(changes)
        return ModelInputs.from_values(**values)

    def as_dict(self) -> dict:
        return {
            "alpha": self.prefs.alpha,
            "k": self.prefs.k,
            "R": self.prefs.R,
            "beta": self.market.beta,
            "mu": self.market.mu,
            "sigma": self.market.sigma,
            "lam": self.costs.lam,
            "gamma": self.costs.gamma,
            "psi": self.costs.psi,
        }

    @property
    def alpha(self) -> float:
        return self.prefs.alpha

    @property
    def beta(self) -> float:
        return self.market.beta

    @property
    def xi(self) -> float:
        return self.costs.xi


class WellPosedness(enum.Enum):
    ILL_POSED = "ill_posed"
    INTERIOR = "well_posed_interior"  # 0 < alpha <= beta < 1
    BOUNDARY = "well_posed_boundary"  # alpha < beta == 1

    @property
    def well_posed(self) -> bool:
        return self is not WellPosedness.ILL_POSED


def utility(x, prefs: Preferences):
    """S-shaped utility: ``x**alpha`` on gains, ``-k |x|**alpha`` on losses.

    Accepts scalars or arrays; scalars come back as ``float``.
    """
    x = np.asarray(x, dtype=float)
    magnitude = np.abs(x) ** prefs.alpha
    out = np.where(x > 0.0, magnitude, -prefs.k * magnitude)
    return float(out) if out.ndim == 0 else out


def scale(x, beta: float):
    """Scale function of the price process (strictly increasing in ``x``)."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0) or np.any(np.isnan(x)):
        raise DomainError("scale is defined for positive prices only")
    if beta > 0.0:
        out = x**beta
    elif beta == 0.0:
        out = np.log(x)
    else:
        out = x ** (-beta)
    return float(out) if out.ndim == 0 else out


def hitting_probability(p: float, b: float, beta: float) -> float:
    """Probability that the price started at ``p`` ever reaches level ``b``."""
    if not (p > 0.0 and b > 0.0):
        raise DomainError(f"prices must be positive, got p={p}, b={b}")
    if b == p:
        return 1.0
    if b > p:
        if beta > 0.0:
            return (p / b) ** beta
        return 1.0
    if beta >= 0.0:
        # beta > 0: P -> 0 a.s.; beta == 0: log-price is a driftless BM
        return 1.0
    raise NotImplementedError(
        "downward passage with beta <= 0 is outside the solver's scope"
    )


def classify_wellposedness(inputs: ModelInputs) -> WellPosedness:
    beta, alpha = inputs.beta, inputs.alpha
    if beta <= 0.0 or beta < alpha:
        return WellPosedness.ILL_POSED
    if beta == 1.0:
        return WellPosedness.BOUNDARY
    return WellPosedness.INTERIOR


def buy_and_hold_value(p: float, n: float, inputs: ModelInputs) -> float:
    """Expected utility of buying at ``p`` now and selling on first reaching ``n``.

    Only meaningful in the ill-posed case, where it grows without bound in
    ``n`` and so certifies that no optimal strategy exists.
    """
    if classify_wellposedness(inputs).well_posed:
        raise IllPosedError("buy-and-hold divergence only applies to ill-posed inputs")
    if not (p > 0.0 and n > p):
        raise DomainError(f"need 0 < p < n, got p={p}, n={n}")
    prefs, costs, beta = inputs.prefs, inputs.costs, inputs.beta
    cost = costs.lam * p + costs.psi + prefs.R
    gain = utility(costs.gamma * n - cost, prefs)
    if beta <= 0.0:
        return gain
    reach = (p / n) ** beta
    return (1.0 - reach) * utility(-cost, prefs) + reach * gain
