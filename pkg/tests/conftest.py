import numpy as np
import pytest

from amrcontrol.model import DimensionlessParams, compute_thresholds
from amrcontrol.scenarios import PHASE_PORTRAITS, Scenario, phase_portrait_params, resolve

REGION_TAGS = tuple(PHASE_PORTRAITS)  # R1..R5


@pytest.fixture(params=REGION_TAGS)
def portrait(request):
    """(region tag, DimensionlessParams) for each reference phase portrait."""
    return request.param, phase_portrait_params(request.param)


@pytest.fixture
def south_amox():
    return resolve(Scenario(region="South", antibiotic="amoxicillin"))


@pytest.fixture
def south_gent():
    return resolve(Scenario(region="South", antibiotic="gentamicin"))


def random_params(rng, *, h_interior=True) -> DimensionlessParams:
    """A valid dimensionless parameter set with log-uniform rates."""
    while True:
        beta_s = 10 ** rng.uniform(-5, 0)
        beta_r = beta_s * rng.uniform(0.01, 1.0)
        q = 10 ** rng.uniform(-6, -1)
        alpha = 10 ** rng.uniform(-6, 0)
        gamma = 10 ** rng.uniform(-6, 0)
        if h_interior:
            h1, h2 = rng.uniform(0.001, 0.999, size=2)
        else:
            h1, h2 = rng.uniform(0, 1, size=2)
        dp = DimensionlessParams(beta_s, beta_r, q, alpha, gamma, float(h1), float(h2))
        th = compute_thresholds(dp)
        if np.all(np.isfinite([th.R_s, th.R_r, th.h_s])):
            return dp


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(n: int, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES[n] = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(ACCEPTANCE_LINES[n])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
