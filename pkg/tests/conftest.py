import pytest

from afar_twin import scenario
from afar_twin.channel import Measurement
from afar_twin.geodesy import GeoPoint
from afar_twin.strategies.base import Strategy, StrategyDecision

ORIGIN = GeoPoint(35.7, -78.7, 0.0)


def meas(t, rssi, conf=0.9, pos=None):
    return Measurement(t, pos or GeoPoint(35.7, -78.7, 20.0), rssi, conf)


class FixedEstimate(Strategy):
    """Never moves; reports `target` from time `after` on (None: never)."""

    name = "fixed"

    def __init__(self, ctx, target=None, after=0.0):
        super().__init__(ctx, None)
        self.target, self.after = target, after

    @classmethod
    def default_params(cls):
        return None

    def step(self, m, vehicle):
        if self.target is not None and m.t >= self.after:
            self.estimate = self.target
        return StrategyDecision(None, self.estimate, None, "hold")


@pytest.fixture
def locations():
    return scenario.locations()


# criterion number -> (passed, detail); filled by the acceptance tests
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record_criterion(n: int, passed: bool, detail: str):
    ACCEPTANCE[n] = (passed, detail)
    print(f"criterion {n}: {'PASS' if passed else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if passed else 'FAIL'}  {detail}")
