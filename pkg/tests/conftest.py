import numpy as np
import pytest

from hsifreq.cube import SceneSpec, synth_scene


@pytest.fixture(scope="session")
def scene():
    """A 32x32x16 procedural scene shared by read-only tests."""
    return synth_scene(SceneSpec(32, 32, 16, seed=7))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)



# --------------------------------------------------------------------------
# Acceptance reporting: one PASS/FAIL line per criterion after the run.

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion covered by the test")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when != "call" and not (call.when == "setup" and call.excinfo):
        return
    label = marker.args[0]
    passed = call.excinfo is None
    _CRITERIA.setdefault(label, []).append((item.name, passed))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")

    def key(label):
        digits = "".join(ch for ch in label if ch.isdigit())
        return int(digits), label

    for label in sorted(_CRITERIA, key=key):
        results = _CRITERIA[label]
        ok = all(p for _, p in results)
        names = ", ".join(n for n, _ in results)
        terminalreporter.write_line(f"criterion {label:<3} {'PASS' if ok else 'FAIL'}  ({names})")
