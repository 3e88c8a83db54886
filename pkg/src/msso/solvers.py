"""One entry point for every algorithm in the fixed registry.

:func:`run_solver` dispatches by name and applies the complex-to-real
reductions that the real-only shrinkage solvers need, so callers can hand
any problem to any algorithm.
"""

from .cone import solve_socp
from .convex import RelaxParams, cbcs, irls, rbrs
from .greedy import run_lsmp, run_mp, run_omp
from .problem import (merge_solution, to_real_split, to_real_stacked,
                      unstack_solution)

GREEDY = ("mp", "omp", "lsmp")
RELAXED = ("irls", "rbrs", "cbcs", "socp")
ALGORITHMS = GREEDY + RELAXED

_GREEDY_RUNNERS = {"mp": run_mp, "omp": run_omp, "lsmp": run_lsmp}


def check_algorithm(name):
    if name not in ALGORITHMS:
        raise ValueError(
            f"unknown algorithm {name!r}; choose from {', '.join(ALGORITHMS)}")
    return name


def is_greedy(name):
    return check_algorithm(name) in GREEDY


def run_solver(problem, algorithm, K=None, lam=0.0, params=None,
               adapter=None):
    """Run ``algorithm`` on ``problem``.

    Greedy methods need ``K``.  Relaxation methods use ``params`` (a
    :class:`~msso.convex.RelaxParams`) when given, otherwise defaults with
    ``lam``; ``adapter`` selects the cone solver for ``"socp"``.

    Returns
    -------
    G : ndarray, shape (N, P)
        In the problem's own (possibly complex) coordinates.
    report : SolveReport
    """
    check_algorithm(algorithm)
    if algorithm in GREEDY:
        if K is None:
            raise ValueError(f"{algorithm} needs a sparsity level K")
        return _GREEDY_RUNNERS[algorithm](problem, K)
    if params is None:
        params = RelaxParams(lam=lam)
    if algorithm == "socp":
        return solve_socp(problem, params.lam, adapter=adapter)
    if algorithm == "irls":
        return irls(problem, params)
    if algorithm == "rbrs":
        if problem.is_complex:
            G, report = rbrs(to_real_stacked(problem), params)
            return unstack_solution(G), report
        return rbrs(problem, params)
    if problem.is_complex:
        G, report = cbcs(to_real_split(problem), params)
        return merge_solution(G), report
    return cbcs(problem, params)

