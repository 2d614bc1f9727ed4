import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    max_examples=60,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def rel_inf(a, b):
    """Relative infinity-norm distance of ``a`` from reference ``b``."""
    a = np.asarray(a)
    b = np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# -- acceptance summary ------------------------------------------------------

_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    crit = dict(report.user_properties).get("criterion")
    if crit is None:
        return
    failed = report.failed
    if report.when == "call" or failed:
        prev = _ACCEPTANCE.get(crit, (True, ""))
        detail = dict(report.user_properties).get("detail", prev[1])
        _ACCEPTANCE[crit] = (prev[0] and not failed, detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")

    def key(c):
        digits = "".join(ch for ch in c if ch.isdigit())
        return int(digits or 0), c

    for crit in sorted(_ACCEPTANCE, key=key):
        ok, detail = _ACCEPTANCE[crit]
        tr.write_line(f"criterion {crit}: {'PASS' if ok else 'FAIL'}  {detail}")
