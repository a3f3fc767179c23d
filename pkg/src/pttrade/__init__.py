"""Optimal buy-then-sell rules for a loss-averse trader facing transaction costs."""

from .entry import EntryRegime, EntrySolution, RegimeTag, classify_regime, entry_value, solve_entry
from .errors import DomainError, IllPosedError, InvalidParameterError, NumericalError, PTTradeError, RegimeError
from .exit import ExitSolution, exit_value, solve_c
from .model import (
    MarketDynamics,
    ModelInputs,
    Preferences,
    TransactionCosts,
    WellPosedness,
    classify_wellposedness,
    utility,
)

__all__ = [
    "DomainError",
    "EntryRegime",
    "EntrySolution",
    "ExitSolution",
    "IllPosedError",
    "InvalidParameterError",
    "MarketDynamics",
    "ModelInputs",
    "NumericalError",
    "PTTradeError",
    "Preferences",
    "RegimeError",
    "RegimeTag",
    "TransactionCosts",
    "WellPosedness",
    "classify_regime",
    "classify_wellposedness",
    "entry_value",
    "exit_value",
    "solve_c",
    "solve_entry",
    "utility",
]
