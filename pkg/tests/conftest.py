import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from wnaction.noise import FieldConfig, generate_field

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def small_field():
    return generate_field(FieldConfig(L=8, m=2, dy=0.25, y_cap=4.0, seed=7))


def fields(n, **cfg):
    """``n`` replicas of one configuration."""
    base = dict(L=4, m=2, dy=0.5, y_cap=2.0, seed=123)
    base.update(cfg)
    return [generate_field(FieldConfig(replica=r, **base)) for r in range(n)]


def within_se(samples, target_var, k=5.0):
    """Sample variance within ``k`` standard errors of a Gaussian target."""
    x = np.asarray(samples)
    se = target_var * np.sqrt(2.0 / (x.size - 1))
    return abs(x.var(ddof=1) - target_var) <= k * se


# one pass/fail line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = {}


def record(criterion: int, passed: bool, detail: str) -> bool:
    ACCEPTANCE_LINES[criterion] = f"criterion {criterion}: {'PASS' if passed else 'FAIL'}  {detail}"
    return passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
