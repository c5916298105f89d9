import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def central_difference(f, x, step=1e-6):
    """Centered finite-difference gradient, used as an independent oracle."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = step
        g[i] = (f(x + e) - f(x - e)) / (2 * step)
    return g


def pytest_terminal_summary(terminalreporter):
    """Print one PASS/FAIL line per acceptance criterion that was exercised."""
    import sys

    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if module is None or not module.RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(module.RESULTS):
        checks = module.RESULTS[number]
        status = "PASS" if all(ok for _, ok, _ in checks) else "FAIL"
        tr.write_line(f"{status} criterion {number}: {module.CRITERIA[number]}")
        for name, ok, detail in checks:
            tr.write_line(f"    [{'ok' if ok else 'FAIL'}] {name}: {detail}")
