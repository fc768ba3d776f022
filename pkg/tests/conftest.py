import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from maskblur import kernels, model, simkit

settings.register_profile("repo", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_geometry():
    # R = 256, N = 64, M = 64
    return model.make_geometry(8, 8, 4)


@pytest.fixture
def small_op(small_geometry):
    g = small_geometry
    P = simkit.generate_patterns(g, 6, seed=3)
    lib = kernels.kernel_library(g)
    ks = [lib["disk_1.667"], lib["disk_1"], lib["coded_2x2"]] * 2
    return model.SystemOperator(g, P.bits, ks)


ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_report():
    """Record one line per acceptance criterion; echoed in the terminal summary."""
    def report(number, title, ok, detail):
        line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {title} | {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
