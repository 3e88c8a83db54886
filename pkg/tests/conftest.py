import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from msso.problem import MssoProblem

settings.register_profile(
    "msso", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("msso")


def random_problem(rng, M, N, P, complex_data=False, K=None):
    """Random problem; with K set, d is synthesized from a K-row solution."""
    F = rng.standard_normal((P, M, N))
    if complex_data:
        F = F + 1j * rng.standard_normal((P, M, N))
    if K is None:
        d = rng.standard_normal(M)
        if complex_data:
            d = d + 1j * rng.standard_normal(M)
        return MssoProblem(d, F)
    G = np.zeros((N, P), dtype=F.dtype)
    rows = rng.choice(N, size=K, replace=False)
    G[rows] = rng.standard_normal((K, P))
    return MssoProblem(np.einsum("pmn,np->m", F, G), F)


def random_solution(rng, N, P, complex_data=False):
    G = rng.standard_normal((N, P))
    if complex_data:
        G = G + 1j * rng.standard_normal((N, P))
    return G


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance summary ----------------------------------------------------------

ACCEPTANCE = {}


def record_criterion(number, passed, detail):
    ACCEPTANCE[number] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(
            f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
