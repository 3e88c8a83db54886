"""Simultaneous sparse approximation for multiple-system single-output data.

The observation ``d`` is modelled as ``F_1 g_1 + ... + F_P g_P`` with all
``g_p`` sharing one small support.  The package provides greedy pursuits
(MP, OMP, LSMP), solvers for the row-norm penalised least-squares
relaxation (IRLS, RBRS, CBCS and a second-order cone formulation) and the
Monte Carlo and MRI experiments used to compare them.
"""

from importlib.metadata import PackageNotFoundError, version

from .convex import RelaxParams, cbcs, irls, rbrs
from .cone import build_socp, solve_socp
from .estimators import (IRLS, ColumnShrinkage, ConeRelaxation,
                         LeastSquaresMatchingPursuit, MatchingPursuit,
                         OrthogonalMatchingPursuit, RowShrinkage,
                         make_estimator)
from .greedy import SolveReport, run_lsmp, run_mp, run_omp
from .problem import (MssoProblem, SparsityProfile, load_problem, objective,
                      profile_of, recovery_fraction, retune, save_problem)
from .solvers import ALGORITHMS, run_solver

try:
    __version__ = version("msso")
except PackageNotFoundError:
    __version__ = "0.1.0"

__all__ = [
    "ALGORITHMS", "IRLS", "ColumnShrinkage", "ConeRelaxation",
    "LeastSquaresMatchingPursuit", "MatchingPursuit", "MssoProblem",
    "OrthogonalMatchingPursuit", "RelaxParams", "RowShrinkage",
    "SolveReport", "SparsityProfile", "build_socp", "cbcs", "irls",
    "load_problem", "make_estimator", "objective", "profile_of", "rbrs",
    "recovery_fraction", "retune", "run_lsmp", "run_mp", "run_omp",
    "run_solver", "save_problem", "solve_socp",
]
