import sys
from pathlib import Path

import pytest

from pttrade.entry import solve_entry
from pttrade.model import ModelInputs

sys.path.insert(0, str(Path(__file__).parent))

BASE = dict(alpha=0.5, k=2.25, R=1.0, beta=0.85)

# one scenario per entry regime, plus the comparative-statics base
RAY = dict(BASE, lam=1.01, gamma=0.99, psi=1.0)
BAND = dict(BASE, lam=1.1, gamma=0.9, psi=1.0)
HIGH_FEE = dict(BASE, lam=1.1, gamma=0.9, psi=2.5)
STATICS = dict(BASE, lam=1.05, gamma=0.95, psi=5.0)
# at R = 1 the lower boundary rises monotonically in lambda; see README
LAMBDA_DIP = dict(alpha=0.5, k=2.25, R=2.5, beta=0.85, lam=1.05, gamma=0.95, psi=1.0)

SCENARIOS = {"ray": RAY, "band": BAND, "high_fee": HIGH_FEE, "statics": STATICS}


def inputs_of(params) -> ModelInputs:
    return ModelInputs.from_values(**params)


@pytest.fixture(scope="session")
def ray():
    return solve_entry(inputs_of(RAY))


@pytest.fixture(scope="session")
def band():
    return solve_entry(inputs_of(BAND))


@pytest.fixture(scope="session")
def high_fee():
    return solve_entry(inputs_of(HIGH_FEE))


@pytest.fixture(scope="session")
def statics():
    return solve_entry(inputs_of(STATICS))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
