import re

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

settings.register_profile("default", deadline=None, max_examples=100, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def vectors(dim=None, min_dim=1, max_dim=256, elements=finite):
    """Hypothesis strategy for 1-D float64 arrays."""
    if dim is None:
        return st.integers(min_dim, max_dim).flatmap(lambda n: hnp.arrays(np.float64, n, elements=elements))
    return hnp.arrays(np.float64, dim, elements=elements)


def vector_pairs(max_dim=256, elements=finite):
    return st.integers(1, max_dim).flatmap(
        lambda n: st.tuples(hnp.arrays(np.float64, n, elements=elements), hnp.arrays(np.float64, n, elements=elements))
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# one PASS/FAIL line per acceptance criterion, printed in the terminal summary
_CRITERION = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)")
_criteria: dict[int, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if not m or (report.when != "call" and report.passed):
        return
    num, label = int(m.group(1)), m.group(2).replace("_", " ")
    if report.when == "call" or report.failed:
        outcome = "PASS" if report.passed else "SKIP" if report.skipped else "FAIL"
        if _criteria.get(num, ("", "PASS"))[1] == "PASS":
            _criteria[num] = (label, outcome)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_criteria):
        label, outcome = _criteria[num]
        terminalreporter.write_line(f"criterion {num:2d} {label}: {outcome}")
