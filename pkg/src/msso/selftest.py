"""Invariant checks on the bundled fixture problems (``msso verify``)."""

from importlib import resources
import itertools

import numpy as np

from .cone import (AdapterError, build_socp, check_feasible, embed_point,
                   extract_solution, program_objective, resolve_adapter)
from .convex import RelaxParams, cbcs, irls, rbrs
from .greedy import run_lsmp, run_mp
from .linalg import lsqr_damped
from .problem import (SparsityProfile, merge_solution, objective,
                      problem_from_json, retune, split_solution,
                      stack_solution, to_real_split, to_real_stacked)
from .solvers import run_solver

FIXTURES = ("real_small.json", "complex_small.json", "wide.json")


def load_fixture(name):
    text = resources.files("msso").joinpath(f"data/fixtures/{name}").read_text()
    return problem_from_json(text)


def _rel(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def _check_reductions(problems):
    worst = 0.0
    rng = np.random.default_rng(0)
    for p in problems.values():
        G = rng.standard_normal((p.N, p.P)) + 1j * rng.standard_normal(
            (p.N, p.P))
        f = objective(p, G, 0.3)
        worst = max(worst,
                    _rel(f, objective(to_real_stacked(p), stack_solution(G),
                                      0.3)),
                    _rel(f, objective(to_real_split(p), split_solution(G),
                                      0.3)))
    return worst <= 1e-12, f"worst relative gap {worst:.2e}"


def _check_embedding(problems):
    worst, feasible, exact = 0.0, True, True
    rng = np.random.default_rng(1)
    for p in problems.values():
        G = rng.standard_normal((p.N, p.P))
        if p.is_complex:
            G = G + 1j * rng.standard_normal((p.N, p.P))
        prog = build_socp(p, 0.7)
        x = embed_point(p, G)
        worst = max(worst, abs(program_objective(prog, x)
                               - objective(p, G, 0.7)))
        feasible &= check_feasible(prog, x, 1e-9).passed
        exact &= np.array_equal(extract_solution(prog, x), G)
    ok = worst <= 1e-10 and feasible and exact
    return ok, (f"objective gap {worst:.2e}, feasible={feasible}, "
                f"round trip exact={exact}")


def _check_mp_wide(problems):
    p = problems["wide.json"]
    G, report = run_mp(p, 3)
    r = np.linalg.norm(p.d - np.einsum("pmn,np->m", p.systems, G))
    ok = report.iterations == 1 and r <= 1e-8 * np.linalg.norm(p.d)
    return ok, f"{report.iterations} iteration(s), residual {r:.2e}"


def _check_relaxations(problems):
    p = problems["real_small.json"]
    tight = RelaxParams(epsilon=1e-14, delta=1e-13, max_outer=20000)
    worst, monotone = 0.0, True
    for lam in (0.05, 0.3):
        prm = RelaxParams(**{**tight.__dict__, "lam": lam})
        values = {}
        for name, fn in (("irls", irls), ("rbrs", rbrs), ("cbcs", cbcs)):
            G, report = fn(p, prm)
            values[name] = objective(p, G, lam)
            trace = np.asarray(report.objective_trace)
            monotone &= bool(np.all(np.diff(trace)
                                    <= 1e-10 * (1 + trace[1:])))
        best = min(values.values())
        worst = max(worst, _rel(values["rbrs"], values["cbcs"]),
                    _rel(values["irls"], best))
    ok = worst <= 1e-4 and monotone
    return ok, f"worst relative disagreement {worst:.2e}, monotone={monotone}"


def _check_complex_paths(problems):
    p = problems["complex_small.json"]
    prm = RelaxParams(lam=0.2, epsilon=1e-14, delta=1e-13, max_outer=20000)
    vals = [objective(p, run_solver(p, alg, params=prm)[0], 0.2)
            for alg in ("irls", "rbrs", "cbcs")]
    spread = (max(vals) - min(vals)) / max(vals)
    merged = merge_solution(split_solution(np.arange(6).reshape(3, 2) * 1j))
    ok = spread <= 1e-4 and np.array_equal(merged,
                                           np.arange(6).reshape(3, 2) * 1j)
    return ok, f"complex objective spread {spread:.2e}"


def _check_lsqr(_problems):
    rng = np.random.default_rng(2)
    worst = 0.0
    for lam in (0.0, 0.1, 1.0):
        A = rng.standard_normal((15, 8))
        d = rng.standard_normal(15)
        q = lsqr_damped(A, d, lam)
        ref = np.linalg.solve(A.T @ A + lam * np.eye(8), A.T @ d)
        worst = max(worst, np.linalg.norm(q - ref) / np.linalg.norm(ref))
    return worst <= 1e-6, f"worst relative error {worst:.2e}"


def _check_retune(problems):
    p = problems["real_small.json"]
    best = min(
        np.linalg.norm(p.d - np.einsum(
            "pmn,np->m", p.systems, retune(p, SparsityProfile.of(c))))
        for c in itertools.combinations(range(p.N), 2))
    G, _ = run_lsmp(p, 2)
    r = np.linalg.norm(p.d - np.einsum("pmn,np->m", p.systems, G))
    return r >= best - 1e-10, f"LSMP residual {r:.2e} vs optimum {best:.2e}"


def _check_adapter(problems, adapter):
    try:
        resolve_adapter(adapter)
    except AdapterError as exc:
        return None, f"skipped ({exc})"
    p = problems["real_small.json"]
    G, _ = run_solver(p, "socp", params=RelaxParams(lam=0.3), adapter=adapter)
    Gr, _ = rbrs(p, RelaxParams(lam=0.3, epsilon=1e-14, delta=1e-13,
                                max_outer=20000))
    gap = _rel(objective(p, G, 0.3), objective(p, Gr, 0.3))
    return gap <= 1e-4, f"relative gap to RBRS {gap:.2e}"


def run_selftest(adapter=None):
    """List of ``(name, passed, detail)`` for every check.

    ``passed`` is ``None`` for the cone check when no adapter is available.
    """
    problems = {name: load_fixture(name) for name in FIXTURES}
    checks = [
        ("complex-to-real reductions keep the objective", _check_reductions),
        ("cone embedding consistency", _check_embedding),
        ("MP stops after one step when M <= P", _check_mp_wide),
        ("relaxation solvers agree and descend", _check_relaxations),
        ("complex data through every relaxation", _check_complex_paths),
        ("LSQR against normal equations", _check_lsqr),
        ("LSMP residual bounded by exhaustive retune", _check_retune),
    ]
    results = []
    for name, fn in checks:
        try:
            ok, detail = fn(problems)
        except Exception as exc:  # report, do not abort the remaining checks
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        results.append((name, bool(ok), detail))
    try:
        ok, detail = _check_adapter(problems, adapter)
    except Exception as exc:
        ok, detail = False, f"raised {type(exc).__name__}: {exc}"
    results.append(("cone adapter matches RBRS",
                    None if ok is None else bool(ok), detail))
    return results
