"""scikit-learn style wrappers around the MSSO solvers.

``fit(X, y)`` takes the system stack ``X`` with shape (P, M, N) and the
observation ``y`` with shape (M,).  After fitting, ``coef_`` holds the
(N, P) solution matrix ``G``, ``support_`` the estimated sparsity profile
and ``report_`` the solver's :class:`~msso.greedy.SolveReport`.
``predict(X)`` synthesizes ``sum_p X[p] @ coef_[:, p]``.

Examples
--------
>>> import numpy as np
>>> from msso.estimators import RowShrinkage
>>> rng = np.random.default_rng(0)
>>> X = rng.normal(size=(2, 12, 6))
>>> G = np.zeros((6, 2)); G[1] = [1.0, -2.0]
>>> y = np.einsum("pmn,np->m", X, G)
>>> est = RowShrinkage(lam=0.01, n_nonzero=1).fit(X, y)
>>> est.support_.one_based()
[2]
"""

from dataclasses import replace

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

from ._validation import (check_count, check_is_fitted, check_nonnegative,
                          check_problem, check_systems)
from .convex import RelaxParams, irls
from .problem import objective, profile_of
from .solvers import run_solver


class _MssoEstimator(RegressorMixin, BaseEstimator):
    """Shared fit/predict plumbing; subclasses set ``_algorithm``."""

    _algorithm = None

    def _solve(self, problem):
        raise NotImplementedError

    def fit(self, X, y):
        problem = check_problem(X, y)
        G, report = self._solve(problem)
        self.coef_ = G
        self.report_ = report
        self.n_systems_, self.n_samples_, self.n_candidates_ = (
            problem.systems.shape)
        self.support_ = self._support(G, report)
        return self

    def _support(self, G, report):
        return report.selected

    def predict(self, X):
        check_is_fitted(self)
        X = check_systems(X)
        if X.shape[0] != self.n_systems_ or X.shape[2] != self.n_candidates_:
            raise ValueError(
                f"systems have shape {X.shape}; the fit used "
                f"{self.n_systems_} systems of {self.n_candidates_} columns")
        return np.einsum("pmn,np->m", X, self.coef_)

    def score(self, X, y, sample_weight=None):
        """Coefficient of determination, using moduli for complex data."""
        problem = check_problem(X, y)
        w = np.ones(problem.M) if sample_weight is None else np.asarray(
            sample_weight, dtype=float)
        y = problem.d
        resid = np.abs(y - self.predict(X)) ** 2
        spread = np.abs(y - np.average(y, weights=w)) ** 2
        denom = float(w @ spread)
        if denom == 0.0:
            return 1.0 if float(w @ resid) == 0.0 else 0.0
        return 1.0 - float(w @ resid) / denom

    def _more_tags(self):
        return {"requires_y": True}


class _GreedyEstimator(_MssoEstimator):
    def __init__(self, n_nonzero=1):
        self.n_nonzero = n_nonzero

    def _solve(self, problem):
        K = check_count(self.n_nonzero, "n_nonzero")
        return run_solver(problem, self._algorithm, K=K)


class MatchingPursuit(_GreedyEstimator):
    """Matching pursuit over the blocks ``C_n``.

    Parameters
    ----------
    n_nonzero : int
        Number of selections K (repeats allowed, so the support may be
        smaller).
    """

    _algorithm = "mp"


class OrthogonalMatchingPursuit(_GreedyEstimator):
    """Orthogonal matching pursuit selecting ``n_nonzero`` distinct rows."""

    _algorithm = "omp"


class LeastSquaresMatchingPursuit(_GreedyEstimator):
    """Least-squares matching pursuit selecting ``n_nonzero`` distinct rows."""

    _algorithm = "lsmp"


class _RelaxedEstimator(_MssoEstimator):
    """Base for penalised solvers.

    ``n_nonzero`` only affects ``support_``: when set, the support is the
    ``n_nonzero`` largest-norm rows, otherwise every nonzero row.
    """

    def _params(self):
        return RelaxParams(
            lam=check_nonnegative(self.lam, "lam"), epsilon=self.epsilon,
            delta=self.delta, max_outer=self.max_outer,
            max_inner=self.max_inner)

    def _support(self, G, report):
        K = self.n_nonzero
        if K is None:
            K = G.shape[0]
        return profile_of(G, check_count(K, "n_nonzero"))

    def objective(self, X, y):
        """Penalised objective of the fitted ``coef_`` on ``(X, y)``."""
        check_is_fitted(self)
        return objective(check_problem(X, y), self.coef_, self.lam)


class IRLS(_RelaxedEstimator):
    """Iteratively reweighted least squares for the row-sparse penalty.

    Parameters
    ----------
    lam : float
        Penalty weight.
    epsilon : float or None
        Weight regulariser; ``None`` scales with ``||y||``.
    delta : float
        Stop when one outer iteration lowers the objective by less.
    max_outer, max_inner : int
        Iteration caps.
    init : {"pinv", "ones"}
    surrogate : {"majorizer", "literal"}
        See :func:`msso.convex.irls`.
    n_nonzero : int or None
        Size of ``support_``.
    """

    _algorithm = "irls"

    def __init__(self, lam=0.1, epsilon=None, delta=1e-5, max_outer=500,
                 max_inner=50, init="pinv", surrogate="majorizer",
                 n_nonzero=None):
        self.lam = lam
        self.epsilon = epsilon
        self.delta = delta
        self.max_outer = max_outer
        self.max_inner = max_inner
        self.init = init
        self.surrogate = surrogate
        self.n_nonzero = n_nonzero

    def _params(self):
        return replace(super()._params(), init=self.init)

    def _solve(self, problem):
        return irls(problem, self._params(), surrogate=self.surrogate)


class RowShrinkage(_RelaxedEstimator):
    """Row-by-row sequential shrinkage (RBRS).

    Complex data are solved through the stacked real reduction.  The
    parameters mirror :class:`IRLS`; ``init`` also accepts ``"zeros"``,
    which converges much faster on badly conditioned systems.
    """

    _algorithm = "rbrs"

    def __init__(self, lam=0.1, epsilon=None, delta=1e-5, max_outer=500,
                 max_inner=50, init="pinv", n_nonzero=None):
        self.lam = lam
        self.epsilon = epsilon
        self.delta = delta
        self.max_outer = max_outer
        self.max_inner = max_inner
        self.init = init
        self.n_nonzero = n_nonzero

    def _params(self):
        return replace(super()._params(), init=self.init)

    def _solve(self, problem):
        return run_solver(problem, self._algorithm, params=self._params())


class ColumnShrinkage(RowShrinkage):
    """Column-by-column sequential shrinkage (CBCS).

    Complex data are solved through the split real reduction.
    """

    _algorithm = "cbcs"


class ConeRelaxation(_RelaxedEstimator):
    """The relaxed objective solved as a second-order cone program.

    Parameters
    ----------
    lam : float
    adapter : str, callable or None
        Cone solver; ``None`` reads the ``MSSO_CONE_ADAPTER`` variable.
    n_nonzero : int or None
    """

    _algorithm = "socp"

    def __init__(self, lam=0.1, adapter=None, n_nonzero=None):
        self.lam = lam
        self.adapter = adapter
        self.n_nonzero = n_nonzero

    def _solve(self, problem):
        params = RelaxParams(lam=check_nonnegative(self.lam, "lam"))
        return run_solver(problem, "socp", params=params,
                          adapter=self.adapter)


ESTIMATORS = {
    "mp": MatchingPursuit,
    "omp": OrthogonalMatchingPursuit,
    "lsmp": LeastSquaresMatchingPursuit,
    "irls": IRLS,
    "rbrs": RowShrinkage,
    "cbcs": ColumnShrinkage,
    "socp": ConeRelaxation,
}


def make_estimator(name, **params):
    """Estimator for a registry name, e.g. ``make_estimator("mp", n_nonzero=3)``."""
    try:
        cls = ESTIMATORS[name]
    except KeyError:
        raise ValueError(f"unknown algorithm {name!r}") from None
    return cls(**params)
