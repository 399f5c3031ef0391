import pytest

from billiard_slrt.geometry import BilliardConfig
from billiard_slrt.quantum import build_F, solve


@pytest.fixture(scope="session")
def cfg():
    return BilliardConfig()


@pytest.fixture(scope="session")
def window_3500(cfg):
    """Eigenpairs and coupling of the default billiard between E=3500 and 4000."""
    basis, sw = solve(cfg, (3500.0, 4000.0))
    return basis, sw, build_F(sw, basis, cfg)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
