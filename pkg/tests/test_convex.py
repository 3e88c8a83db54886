import cvxpy as cp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from msso.convex import (RelaxParams, _segment_objective, cbcs, cbcs_alpha,
                         element_fixed_point, irls, irls_weights,
                         line_search_mu, rbrs)
from msso.problem import MssoProblem, objective, profile_of, row_norms
from msso.solvers import run_solver

from conftest import random_problem, random_solution

seeds = st.integers(0, 2**32 - 1)
TIGHT = dict(epsilon=1e-14, delta=1e-13, max_outer=20000)


def _cvx_optimum(p, lam):
    """Relaxed objective minimised by an independent conic modelling layer."""
    G = cp.Variable((p.N, p.P))
    fit = sum(p.systems[q] @ G[:, q] for q in range(p.P))
    obj = 0.5 * cp.sum_squares(p.d - fit) + lam * cp.sum(cp.norm(G, 2, axis=1))
    prob = cp.Problem(cp.Minimize(obj))
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-10, tol_gap_rel=1e-10,
               tol_feas=1e-10)
    return prob.value


def _monotone(trace):
    t = np.asarray(trace)
    return bool(np.all(np.diff(t) <= 1e-10 * (1 + t[1:])))


# irls_weights -------------------------------------------------------------

def test_irls_weights_examples():
    np.testing.assert_allclose(irls_weights(np.array([[3.0, 4.0]]), 0.0),
                               [0.4, 0.4])
    np.testing.assert_allclose(irls_weights(np.zeros((1, 2)), 1e-6),
                               [2e6, 2e6])


@given(seed=seeds, lam=st.floats(0.01, 3))
def test_weighted_quadratic_matches_penalty(seed, lam):
    rng = np.random.default_rng(seed)
    G = random_solution(rng, 5, 3)
    eps = 1e-9
    w = irls_weights(G, eps)
    h = G.reshape(-1)
    quad = 0.5 * lam * np.sum(w * h * h)
    assert abs(quad - lam * row_norms(G).sum()) <= eps * 5 * lam + 1e-13 * (1 + quad)


def test_irls_weights_reject_negative_epsilon():
    with pytest.raises(ValueError):
        irls_weights(np.ones((2, 2)), -1.0)


# line search --------------------------------------------------------------

def test_line_search_parabola():
    assert line_search_mu(lambda m: (m - 0.3) ** 2, tol=1e-8) == \
        pytest.approx(0.3, abs=1e-6)


def test_line_search_monotone():
    assert line_search_mu(lambda m: m) == 0.0
    assert line_search_mu(lambda m: -m) == 1.0


@given(seed=seeds, lam=st.floats(0, 3))
def test_line_search_on_objective_segment(seed, lam):
    rng = np.random.default_rng(seed)
    p = random_problem(rng, 5, 4, 2)
    G0, G1 = random_solution(rng, 4, 2), random_solution(rng, 4, 2)

    def f(mu):
        return objective(p, (1 - mu) * G0 + mu * G1, lam)
    r0 = p.d - p.C_tot @ G0.reshape(-1)
    r1 = p.d - p.C_tot @ G1.reshape(-1)
    seg = _segment_objective(r0, r1 - r0, G0, G1 - G0, lam)
    grid = np.linspace(0, 1, 101)
    np.testing.assert_allclose([seg(m) for m in grid], [f(m) for m in grid],
                               rtol=1e-10)
    mu = line_search_mu(seg)
    assert f(mu) <= min(f(0), f(1)) + 1e-12
    assert f(mu) <= min(f(m) for m in grid) + 1e-6 * (1 + f(mu))


# IRLS ---------------------------------------------------------------------

def test_irls_lambda_zero_is_least_squares(rng):
    p = random_problem(rng, 8, 4, 2)
    G, _ = irls(p, RelaxParams(lam=0.0))
    ref = np.linalg.lstsq(p.C_tot, p.d, rcond=None)[0]
    np.testing.assert_allclose(G.reshape(-1), ref, atol=1e-8)


def test_irls_zero_data():
    p = MssoProblem(np.zeros(4), np.ones((2, 4, 3)))
    G, _ = irls(p, RelaxParams(lam=0.5))
    assert not np.any(G)


def test_irls_small_real_against_oracle(rng):
    p = random_problem(rng, 6, 4, 1, K=2)
    G, report = irls(p, RelaxParams(lam=0.05, delta=1e-13, max_outer=20000))
    assert objective(p, G, 0.05) == pytest.approx(_cvx_optimum(p, 0.05),
                                                  rel=1e-4)
    assert _monotone(report.objective_trace)


def test_literal_surrogate_stops_short(rng):
    p = random_problem(rng, 10, 8, 2, K=2)
    lam = 0.3
    fm = objective(p, irls(p, RelaxParams(lam=lam, **TIGHT))[0], lam)
    fl = objective(p, irls(p, RelaxParams(lam=lam, **TIGHT),
                           surrogate="literal")[0], lam)
    assert fl > fm * (1 + 1e-4)


def test_irls_rejects_unknown_surrogate(rng):
    with pytest.raises(ValueError):
        irls(random_problem(rng, 3, 3, 1), RelaxParams(), surrogate="x")


# RBRS ---------------------------------------------------------------------

def test_rbrs_orthonormal_lambda_zero(rng):
    Q, _ = np.linalg.qr(rng.standard_normal((6, 6)))
    F = np.stack([Q[:, :3], Q[:, 3:]])
    d = rng.standard_normal(6)
    G, _ = rbrs(MssoProblem(d, F), RelaxParams(lam=0.0))
    np.testing.assert_allclose(G, np.stack([Q[:, :3].T @ d, Q[:, 3:].T @ d],
                                           axis=1), atol=1e-10)


def test_rbrs_single_row_matches_scalar_search(rng):
    # With N = 1 the minimiser is a shrunken least-squares fit along the
    # direction of the solution; search its length on a fine grid.
    F = rng.standard_normal((2, 5, 1))
    d = rng.standard_normal(5)
    p = MssoProblem(d, F)
    lam = 0.4
    G, _ = rbrs(p, RelaxParams(lam=lam, **TIGHT))
    direction = G[0] / np.linalg.norm(G[0])
    C = p.C_tot
    best = min(0.5 * np.sum((d - C @ (t * direction)) ** 2) + lam * t
               for t in np.linspace(0, 2 * np.linalg.norm(G), 200001))
    assert objective(p, G, lam) <= best + 1e-6
    assert objective(p, G, lam) == pytest.approx(_cvx_optimum(p, lam),
                                                 rel=1e-6)


def test_rbrs_sweep_recovers_planted_profile():
    rng = np.random.default_rng(11)
    F = rng.standard_normal((2, 12, 8))
    G = np.zeros((8, 2))
    G[[2, 6]] = rng.standard_normal((2, 2)) + np.sign(rng.standard_normal((2, 2)))
    p = MssoProblem(np.einsum("pmn,np->m", F, G), F)
    hits = [profile_of(rbrs(p, RelaxParams(lam=lam))[0], 2).indices
            for lam in np.linspace(0.05, 2, 20)]
    assert (2, 6) in hits


def test_zero_rows_can_revive_with_tiny_epsilon(rng):
    # Rows that start at zero must still reach a nonzero optimum.
    p = random_problem(rng, 6, 4, 1, K=2)
    ref = _cvx_optimum(p, 0.05)
    for fn in (rbrs, cbcs):
        G, _ = fn(p, RelaxParams(lam=0.05, **TIGHT))
        assert objective(p, G, 0.05) == pytest.approx(ref, rel=1e-6)


def test_rbrs_rejects_complex(rng):
    with pytest.raises(ValueError, match="apply stacking reduction"):
        rbrs(random_problem(rng, 3, 3, 1, True), RelaxParams())


# CBCS ---------------------------------------------------------------------

def test_element_fixed_point_examples():
    assert element_fixed_point(0.0, 1.0, 2.0, 0.5, 1e-12, 0.7, 1e-14, 50) == 0
    x = element_fixed_point(3.0, 0.0, 2.0, 0.0, 1e-12, 0.0, 1e-14, 1)
    assert x == -1.5


@given(v=st.floats(-5, 5), b=st.floats(0.01, 4), alpha=st.floats(0.5, 5),
       lam=st.floats(0, 2))
def test_element_fixed_point_stationary(v, b, alpha, lam):
    x = element_fixed_point(v, b, alpha, lam, 0.0, 0.0, 0.0, 10000)
    assert abs(v + x * (alpha + lam / np.sqrt(x * x + b))) <= 1e-8 * (1 + abs(v))


@given(seed=seeds)
def test_cbcs_alpha_makes_proximal_term_psd(seed):
    rng = np.random.default_rng(seed)
    p = random_problem(rng, 5, 4, 3)
    alpha = cbcs_alpha(p)
    for F in p.systems:
        assert np.linalg.eigvalsh(alpha * np.eye(4) - F.T @ F).min() >= \
            -1e-10 * alpha


@given(seed=seeds)
def test_cbcs_b_nonnegative(seed):
    rng = np.random.default_rng(seed)
    G = random_solution(rng, 6, 3) * 10.0 ** rng.integers(-8, 8, (6, 1))
    sumsq = np.sum(G * G, axis=1)
    for p in range(3):
        assert np.all(np.maximum(sumsq - G[:, p] ** 2, 0.0) >= 0)


def test_cbcs_rejects_complex(rng):
    with pytest.raises(ValueError, match="apply stacking reduction"):
        cbcs(random_problem(rng, 3, 3, 1, True), RelaxParams())


# agreement ----------------------------------------------------------------

@pytest.mark.parametrize("lam", [0.0, 0.05, 0.3, 1.0])
def test_relaxations_match_conic_oracle(lam):
    rng = np.random.default_rng(int(lam * 100))
    p = random_problem(rng, 10, 8, 2, K=2)
    ref = _cvx_optimum(p, lam)
    prm = RelaxParams(lam=lam, **TIGHT)
    for fn in (rbrs, cbcs):
        G, report = fn(p, prm)
        assert objective(p, G, lam) == pytest.approx(ref, rel=1e-4, abs=1e-9)
        assert _monotone(report.objective_trace)
    # IRLS cannot revive a row once its weight is 2/eps, so it keeps the
    # default eps; the shrinkage solvers need a tiny eps to lose their bias.
    Gi, _ = irls(p, RelaxParams(lam=lam, delta=1e-13, max_outer=20000))
    assert objective(p, Gi, lam) >= ref - 1e-8
    if lam <= 0.3:
        assert objective(p, Gi, lam) == pytest.approx(ref, rel=1e-3, abs=1e-9)


@given(seed=seeds, lam=st.floats(0, 2), cplx=st.booleans())
def test_traces_never_increase(seed, lam, cplx):
    rng = np.random.default_rng(seed)
    p = random_problem(rng, 6, 5, 2, cplx)
    prm = RelaxParams(lam=lam, max_outer=60)
    for alg in ("irls", "rbrs", "cbcs"):
        _, report = run_solver(p, alg, params=prm)
        assert _monotone(report.objective_trace)


def test_complex_paths_agree():
    rng = np.random.default_rng(5)
    p = random_problem(rng, 6, 5, 2, True)
    prm = RelaxParams(lam=0.2, **TIGHT)
    vals = [objective(p, run_solver(p, alg, params=prm)[0], 0.2)
            for alg in ("irls", "rbrs", "cbcs")]
    assert max(vals) - min(vals) <= 1e-4 * max(vals)


def test_relax_params_validation():
    with pytest.raises(ValueError):
        RelaxParams(lam=-1)
    with pytest.raises(ValueError):
        RelaxParams(epsilon=0.0)
    with pytest.raises(ValueError):
        RelaxParams(init="random")
    p = MssoProblem(np.array([3.0, 4.0]), np.ones((1, 2, 1)))
    assert RelaxParams().resolved(p).epsilon == pytest.approx(6e-8)
