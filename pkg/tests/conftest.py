import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ltlab.grid_core import BoxSpec
from ltlab.gn_solver import OptimizerParams, minimize_gn, minimize_hgn

settings.register_profile(
    "ltlab", derandomize=True, deadline=None, max_examples=30,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("ltlab")

_ACCEPTANCE_KEY = pytest.StashKey[dict]()

CRITERIA = {
    1: "GN constant oracle",
    2: "Hardy constants",
    3: "exclusion soundness",
    4: "covering invariants",
    5: "local-constant scaling law",
    6: "upper-bound mechanism",
    7: "certificate soundness and trend",
    8: "spectral substrate",
    9: "bosonic floor",
    10: "determinism",
}


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = {}


@pytest.fixture
def acceptance(request):
    """Record (passed, detail) for an acceptance criterion."""
    store = request.config.stash[_ACCEPTANCE_KEY]

    def record(k, ok, detail=""):
        store[k] = (bool(ok), detail)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash[_ACCEPTANCE_KEY]
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for k, name in CRITERIA.items():
        if k in store:
            ok, detail = store[k]
            terminalreporter.write_line(f"criterion {k:2d} {'PASS' if ok else 'FAIL'}  {name}: {detail}")
        else:
            terminalreporter.write_line(f"criterion {k:2d} NOT RUN  {name}")


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def d3_minimizers():
    """GN and Hardy-GN minimizers in d=3 on 64^3 cells, box side 24."""
    box = BoxSpec.cube(3, 24.0, 64)
    p = OptimizerParams(restarts=1, max_iters=800)
    out = {}
    for s in (0.5, 1.0):
        out[("gn", s)] = minimize_gn(s, 3, box, p)
        out[("hgn", s)] = minimize_hgn(s, 3, box, p)
    return out


@pytest.fixture(scope="session")
def gn_1d():
    """s=1, d=1 GN minimizer on 2048 cells, box 40."""
    return minimize_gn(1.0, 1, BoxSpec.cube(1, 40.0, 2048))


@pytest.fixture(scope="session")
def cal_1d():
    """In-run calibration for s=1, d=1, shared across certifier tests."""
    from ltlab.certifier import Calibration

    return Calibration(1.0, 1)
