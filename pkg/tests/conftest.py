import numpy as np
import pytest

from dmdrom import pipeline
from dmdrom.snapshots import generate_limit_cycle_family

DT = 1e-3
DOF = 24

ACCEPTANCE_RESULTS = []


def family(params, steps=4000, dof=DOF, seed=0):
    return [generate_limit_cycle_family(p, dof, steps, DT, seed) for p in params]


@pytest.fixture(scope="session")
def family_db():
    """Database on the synthetic family sampled at p = 0, 0.5, 1."""
    return pipeline.build_database(family([0.0, 0.5, 1.0]), pipeline.PipelineConfig())


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_orthonormal(rng, n, k):
    q, _ = np.linalg.qr(rng.standard_normal((n, k)))
    return q


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
