import pytest

from subinv.core import CapacityConstraint, DemandModel, EconomicParams, Fixed, InventoryModel

SCENARIO1 = EconomicParams(r1=50, c1=10, h1=0, r2=20, c2=4, h2=0)


@pytest.fixture
def scenario1_demand():
    return DemandModel(20, 20, 0.4, 0.4)


def make_model(demand, econ=SCENARIO1, C=80.0, regime=Fixed(1.0), a=(1.0, 1.0)):
    return InventoryModel(demand, econ, CapacityConstraint(a[0], a[1], C), regime)


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda text: int(text.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
