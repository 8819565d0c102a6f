import pytest

from quadcost.model import ModelParams

# Filled by tests/test_acceptance.py; printed once at the end of the run.
ACCEPTANCE_LINES: dict[str, str] = {}


@pytest.fixture
def params():
    return ModelParams(mu=0.05, sigma=0.15, gamma=0.01, rho=0.05, eps=0.01)


@pytest.fixture
def critical_params():
    # 4 mu^2 = 3 sigma^4 - 8 sigma^2 rho with sigma = 1, rho = 0.25
    return ModelParams(mu=0.5, sigma=1.0, gamma=1.0, rho=0.25, eps=0.01)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
