"""Acceptance criteria 1 to 13.

Each test records one PASS/FAIL line through ``record_criterion``; the lines
are printed in the ``acceptance criteria`` section of the pytest summary.
Criterion 5 checks every relaxation trace produced by the other criteria, so
it runs last.  Criterion 13 re-runs criteria 1, 10 and 12 with two workers
and compares CSV bytes with the single-worker runs.
"""

import itertools
import time

import numpy as np
import pytest

import msso.experiments as experiments
from msso.cone import build_socp, check_feasible, embed_point, \
    extract_solution, program_objective, solve_socp
from msso.convex import RelaxParams, cbcs, irls, rbrs
from msso.experiments import (NOISELESS_GRID, RecoveryConfig, add_noise,
                              build_mri_scene, make_rng, noise_variance,
                              rows_to_csv, run_pulse_design,
                              run_recovery_experiment)
from msso.greedy import run_lsmp, run_mp
from msso.linalg import lsqr_damped
from msso.problem import (MssoProblem, SparsityProfile, complex_sparse_as_msso,
                          objective, residual, retune, s_norm, split_solution,
                          stack_solution, to_real_split, to_real_stacked)

from conftest import record_criterion

pytestmark = pytest.mark.acceptance

BASE_SEED = 1
RELAXATIONS = ("irls", "rbrs", "cbcs", "socp")
TRACE_STATS = {"runs": 0, "worst": -np.inf, "where": None}
CSV_CACHE = {}


def _note_trace(algorithm, trace):
    if algorithm not in RELAXATIONS or algorithm == "socp" or len(trace) < 2:
        TRACE_STATS["runs"] += algorithm in RELAXATIONS
        return
    t = np.asarray(trace, dtype=float)
    excess = np.max(np.diff(t) - 1e-10 * (1.0 + np.abs(t[1:])))
    TRACE_STATS["runs"] += 1
    if excess > TRACE_STATS["worst"]:
        TRACE_STATS["worst"] = float(excess)
        TRACE_STATS["where"] = algorithm


@pytest.fixture(autouse=True, scope="module")
def _record_traces():
    """Route the harness's solver calls through the trace recorder."""
    original = experiments.run_solver

    def recording(problem, algorithm, *args, **kwargs):
        G, report = original(problem, algorithm, *args, **kwargs)
        _note_trace(algorithm, report.objective_trace)
        return G, report

    experiments.run_solver = recording
    yield
    experiments.run_solver = original


def _means(rows):
    return {(r.algorithm,) + tuple(getattr(r, k) for k in ("M", "P", "K",
                                                           "snr_db")):
            r.metric_value for r in rows
            if r.trial == "all" and r.metric_name == "recovery"}


# 1 -------------------------------------------------------------------------

def _criterion1_config():
    return RecoveryConfig(
        experiment="noiseless", N=30, M_values=(40,), P_values=(1, 2), K=3,
        trials=50, algorithms=("mp", "lsmp", "irls", "rbrs", "cbcs", "socp"),
        lambda_grid=NOISELESS_GRID, adapter="clarabel")


def test_criterion_01_high_m_recovery():
    start = time.perf_counter()
    rows = run_recovery_experiment(_criterion1_config(), BASE_SEED, jobs=1)
    elapsed = time.perf_counter() - start
    CSV_CACHE[1] = rows_to_csv(rows)
    means = _means(rows)
    worst = min(means.values())
    ok = worst >= 0.90 and elapsed <= 600
    detail = ", ".join(f"{a}/P={P}: {v:.3f}" for (a, M, P, K, s), v in
                       sorted(means.items(), key=lambda kv: kv[0][2]))
    record_criterion(1, ok, f"min mean recovery {worst:.3f} "
                     f"in {elapsed:.0f} s ({detail})")
    assert worst >= 0.90
    assert elapsed <= 600


# 2 -------------------------------------------------------------------------

def test_criterion_02_convex_beats_greedy():
    cfg = RecoveryConfig(
        experiment="noiseless", N=30, M_values=(10,), P_values=(8,), K=3,
        trials=50, algorithms=("mp", "irls", "rbrs", "cbcs"),
        lambda_grid=NOISELESS_GRID)
    means = {k[0]: v for k, v in _means(
        run_recovery_experiment(cfg, BASE_SEED, jobs=1)).items()}
    ok = all(means[a] >= means["mp"] for a in ("irls", "rbrs", "cbcs"))
    record_criterion(2, ok, ", ".join(f"{a} {v:.3f}" for a, v in
                                      means.items()))
    assert ok, means


# 3 -------------------------------------------------------------------------

def test_criterion_03_mp_single_step_when_wide():
    failures = []
    for i in range(100):
        rng = np.random.default_rng([3, i])
        M = int(rng.integers(1, 5))
        P = int(rng.integers(M, 7))
        N = int(rng.integers(2, 11))
        p = MssoProblem(rng.standard_normal(M),
                        rng.standard_normal((P, M, N)))
        G, report = run_mp(p, int(rng.integers(1, N + 1)))
        r = np.linalg.norm(residual(p, G))
        if report.iterations != 1 or r > 1e-8 * np.linalg.norm(p.d):
            failures.append((i, report.iterations, r))
    record_criterion(3, not failures,
                     f"{100 - len(failures)}/100 instances stop after one "
                     "step with zero residual")
    assert not failures


# 4 -------------------------------------------------------------------------

def _agreement_instance(i):
    rng = np.random.default_rng([4, i])
    M = int(rng.integers(10, 21))
    F = rng.standard_normal((2, M, 15))
    G = np.zeros((15, 2))
    G[rng.choice(15, 3, replace=False)] = rng.standard_normal((3, 2))
    d = np.einsum("pmn,np->m", F, G) + 0.05 * rng.standard_normal(M)
    return MssoProblem(d, F)


def test_criterion_04_solver_agreement():
    grid = np.linspace(0.0, 0.5, 10)
    common = dict(delta=1e-13, max_outer=20000)
    worst_pair, worst_beat, worst_small = 0.0, -np.inf, 0.0
    for i in range(20):
        p = _agreement_instance(i)
        for j, lam in enumerate(grid):
            tight = RelaxParams(lam=lam, epsilon=1e-14, **common)
            values = {}
            for name, fn, prm in (("rbrs", rbrs, tight), ("cbcs", cbcs, tight),
                                  ("irls", irls, RelaxParams(lam=lam,
                                                             **common))):
                G, report = fn(p, prm)
                _note_trace(name, report.objective_trace)
                values[name] = objective(p, G, lam)
            values["socp"] = objective(p, solve_socp(p, lam, "clarabel")[0],
                                       lam)
            group = [values[a] for a in ("rbrs", "cbcs", "socp")]
            hi = max(group)
            worst_pair = max(worst_pair, (max(group) - min(group))
                             - 1e-4 * hi - 1e-10)
            best = min(group)
            worst_beat = max(worst_beat, best - values["irls"])
            if j in (1, 2):
                worst_small = max(worst_small,
                                  (values["irls"] - best) / best)
    ok = worst_pair <= 0 and worst_beat <= 1e-8 and worst_small <= 1e-3
    record_criterion(4, ok, f"RBRS/CBCS/SOCP excess over 1e-4 relative "
                     f"{max(worst_pair, 0):.2e}; IRLS below best by at most "
                     f"{max(worst_beat, 0):.2e}; IRLS gap at small lambda "
                     f"{worst_small:.2e}")
    assert ok


# 6 -------------------------------------------------------------------------

def test_criterion_06_lsqr():
    worst = 0.0
    for i in range(50):
        rng = np.random.default_rng([6, i])
        M = int(rng.integers(8, 30))
        N = int(rng.integers(2, M + 1))
        U, _ = np.linalg.qr(rng.standard_normal((M, N)))
        V, _ = np.linalg.qr(rng.standard_normal((N, N)))
        A = U @ np.diag(rng.uniform(1.0, 10.0, N)) @ V.T
        d = rng.standard_normal(M)
        if i % 2:
            A = A + 1j * (U @ np.diag(rng.uniform(0.0, 1.0, N)) @ V.T)
            d = d + 1j * rng.standard_normal(M)
        for lam in (0.0, 0.1, 1.0):
            q = lsqr_damped(A, d, lam)
            ref = np.linalg.solve(A.conj().T @ A + lam * np.eye(N),
                                  A.conj().T @ d)
            worst = max(worst, np.linalg.norm(q - ref) / np.linalg.norm(ref))
    record_criterion(6, worst <= 1e-6, f"worst relative error {worst:.2e}")
    assert worst <= 1e-6


# 7 -------------------------------------------------------------------------

def test_criterion_07_complex_real_equivalence():
    worst = 0.0
    for i in range(50):
        rng = np.random.default_rng([7, i])
        M, N, P = (int(v) for v in rng.integers(1, 8, 3))
        F = rng.standard_normal((P, M, N)) + 1j * rng.standard_normal(
            (P, M, N))
        d = rng.standard_normal(M) + 1j * rng.standard_normal(M)
        p = MssoProblem(d, F)
        G = rng.standard_normal((N, P)) + 1j * rng.standard_normal((N, P))
        lam = float(rng.uniform(0, 2))
        f = objective(p, G, lam)
        for g in (objective(to_real_stacked(p), stack_solution(G), lam),
                  objective(to_real_split(p), split_solution(G), lam)):
            worst = max(worst, abs(g - f) / abs(f))
        g = G[:, :1]
        sparse = complex_sparse_as_msso(F[0], d)
        target = float(np.sum(np.abs(g)))
        worst = max(worst, abs(s_norm(split_solution(g)) - target) / target)
        worst = max(worst, abs(objective(sparse, split_solution(g), lam)
                               - objective(MssoProblem(d, F[0]), g, lam))
                    / objective(MssoProblem(d, F[0]), g, lam))
    record_criterion(7, worst <= 1e-12, f"worst relative gap {worst:.2e}")
    assert worst <= 1e-12


# 8 -------------------------------------------------------------------------

def test_criterion_08_retune_oracle():
    worst_gap, lsmp_ok = 0.0, True
    for i in range(100):
        rng = np.random.default_rng([8, i])
        F = rng.standard_normal((2, 6, 8))
        G = np.zeros((8, 2))
        G[rng.choice(8, 2, replace=False)] = rng.standard_normal((2, 2))
        d = np.einsum("pmn,np->m", F, G) + 0.1 * rng.standard_normal(6)
        p = MssoProblem(d, F)
        best, best_set = np.inf, None
        for subset in itertools.combinations(range(8), 2):
            S = np.concatenate([F[:, :, n].T for n in subset], axis=1)
            x = np.linalg.lstsq(S, d, rcond=None)[0]
            r = np.linalg.norm(d - S @ x)
            if r < best:
                best, best_set = r, subset
        r_retune = np.linalg.norm(residual(p, retune(
            p, SparsityProfile.of(best_set))))
        worst_gap = max(worst_gap, abs(r_retune - best))
        r_lsmp = np.linalg.norm(residual(p, run_lsmp(p, 2)[0]))
        lsmp_ok &= r_lsmp >= best - 1e-10
    ok = worst_gap <= 1e-10 and lsmp_ok
    record_criterion(8, ok, f"worst retune gap {worst_gap:.2e}, LSMP bound "
                     f"held={lsmp_ok}")
    assert ok


# 9 -------------------------------------------------------------------------

def test_criterion_09_noise_model():
    d = make_rng(9).standard_normal(10_000)
    errors = {}
    for snr in (-10, 0, 30):
        noise = add_noise(d, snr, 90 + snr) - d
        errors[snr] = abs(np.var(noise) / noise_variance(d, snr) - 1.0)
    ok = max(errors.values()) <= 0.05
    record_criterion(9, ok, ", ".join(f"{s} dB: {e:.2%} off" for s, e in
                                      errors.items()))
    assert ok


# 10 ------------------------------------------------------------------------

def _criterion10_config():
    return RecoveryConfig(experiment="noisy", N=30, M=25, P=3,
                          snr_values=(30,), K_values=(1, 9), trials=100)


def test_criterion_10_noisy_trend():
    rows = run_recovery_experiment(_criterion10_config(), BASE_SEED, jobs=1)
    CSV_CACHE[10] = rows_to_csv(rows)
    means = _means(rows)
    per_alg = {a: (means[(a, 25, 3, 1, 30)], means[(a, 25, 3, 9, 30)])
               for a in experiments.DEFAULT_ALGORITHMS}
    ok = all(k1 >= k9 for k1, k9 in per_alg.values())
    record_criterion(10, ok, ", ".join(f"{a} {k1:.3f}>={k9:.3f}" for a,
                                       (k1, k9) in per_alg.items()))
    assert ok


# 11 ------------------------------------------------------------------------

def test_criterion_11_cone_embedding():
    worst, exact, feasible = 0.0, True, True
    for i in range(50):
        rng = np.random.default_rng([11, i])
        M, N, P = (int(v) for v in rng.integers(1, 7, 3))
        cplx = bool(i % 2)
        F = rng.standard_normal((P, M, N))
        d = rng.standard_normal(M)
        G = rng.standard_normal((N, P))
        if cplx:
            F = F + 1j * rng.standard_normal((P, M, N))
            d = d + 1j * rng.standard_normal(M)
            G = G + 1j * rng.standard_normal((N, P))
        p = MssoProblem(d, F)
        lam = float(rng.uniform(0, 3))
        prog = build_socp(p, lam)
        x = embed_point(p, G)
        f = objective(p, G, lam)
        worst = max(worst, abs(program_objective(prog, x) - f) / (1 + abs(f)))
        exact &= np.array_equal(extract_solution(prog, x), G)
        feasible &= check_feasible(prog, x, 1e-9).passed
    ok = worst <= 1e-10 and exact and feasible
    record_criterion(11, ok, f"objective gap {worst:.2e}, round trip "
                     f"exact={exact}, feasible={feasible}")
    assert ok


# 12 ------------------------------------------------------------------------

def test_criterion_12_mri_trends():
    rows = run_pulse_design(build_mri_scene(), jobs=1)
    CSV_CACHE[12] = rows_to_csv(rows)
    err = {}
    for r in rows:
        err.setdefault(r.algorithm, {})[r.K] = r.metric_value
    Ks = sorted(err["mp"])
    monotone = {a: all(e[k + 1] <= e[k] * (1 + 1e-12) for k in Ks[:-1])
                for a, e in err.items()}
    lsmp_ok = all(err["lsmp"][k] <= err["mp"][k] * (1 + 1e-12) for k in Ks)
    best_convex = min(err[a][17] for a in ("irls", "rbrs", "cbcs"))
    fourier_ok = err["fourier"][17] >= best_convex
    ok = all(monotone.values()) and lsmp_ok and fourier_ok
    record_criterion(12, ok, f"non-increasing={all(monotone.values())}, "
                     f"LSMP<=MP at every K={lsmp_ok}, Fourier K=17 "
                     f"{err['fourier'][17]:.3f} vs best convex "
                     f"{best_convex:.3f}")
    assert ok, monotone


# 13 ------------------------------------------------------------------------

def test_criterion_13_determinism():
    runs = {
        1: lambda jobs: run_recovery_experiment(_criterion1_config(),
                                                BASE_SEED, jobs=jobs),
        10: lambda jobs: run_recovery_experiment(_criterion10_config(),
                                                 BASE_SEED, jobs=jobs),
        12: lambda jobs: run_pulse_design(build_mri_scene(), jobs=jobs),
    }
    same = {}
    for number, run in runs.items():
        serial = CSV_CACHE.get(number) or rows_to_csv(run(1))
        same[number] = rows_to_csv(run(2)).encode() == serial.encode()
    ok = all(same.values())
    record_criterion(13, ok, ", ".join(
        f"criterion {n}: {'identical' if s else 'DIFFERENT'}"
        for n, s in same.items()) + " (1 vs 2 workers)")
    assert ok


# 5 -------------------------------------------------------------------------

def test_criterion_05_monotone_traces():
    if TRACE_STATS["runs"] == 0:
        for i in range(3):
            p = _agreement_instance(i)
            for name, fn in (("irls", irls), ("rbrs", rbrs), ("cbcs", cbcs)):
                _note_trace(name, fn(p, RelaxParams(lam=0.2))[1]
                            .objective_trace)
    ok = TRACE_STATS["worst"] <= 0
    record_criterion(5, ok, f"{TRACE_STATS['runs']} relaxation runs, worst "
                     f"increase beyond tolerance "
                     f"{max(TRACE_STATS['worst'], 0.0):.2e}")
    assert ok
