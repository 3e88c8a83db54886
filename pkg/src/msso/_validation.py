"""Input checks shared by the estimator wrappers."""

import numbers

import numpy as np

from .problem import MssoProblem


def check_systems(X):
    """Coerce ``X`` to a finite (P, M, N) stack of system matrices.

    A single 2-D matrix is read as P = 1.
    """
    X = np.asarray(X)
    if X.ndim == 2:
        X = X[np.newaxis]
    if X.ndim != 3:
        raise ValueError(
            f"expected systems of shape (P, M, N) or (M, N), got {X.shape}")
    if 0 in X.shape:
        raise ValueError(f"systems have an empty dimension: {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("systems contain NaN or infinite entries")
    return X


def check_observation(y, M):
    y = np.asarray(y)
    if y.ndim == 2 and 1 in y.shape:
        y = y.ravel()
    if y.ndim != 1:
        raise ValueError(f"observation must be a vector, got shape {y.shape}")
    if y.shape[0] != M:
        raise ValueError(
            f"observation has length {y.shape[0]} but systems have {M} rows")
    if not np.all(np.isfinite(y)):
        raise ValueError("observation contains NaN or infinite entries")
    return y


def check_problem(X, y):
    """Validated :class:`~msso.problem.MssoProblem` from systems and data."""
    X = check_systems(X)
    y = check_observation(y, X.shape[1])
    return MssoProblem(y, X)


def check_count(value, name, low=1):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {value!r}")
    if value < low:
        raise ValueError(f"{name} must be at least {low}, got {value}")
    return int(value)


def check_nonnegative(value, name):
    if not isinstance(value, numbers.Real) or not np.isfinite(value):
        raise TypeError(f"{name} must be a finite real number, got {value!r}")
    if value < 0:
        raise ValueError(f"{name} must be nonnegative, got {value}")
    return float(value)


def check_is_fitted(estimator, attribute="coef_"):
    if not hasattr(estimator, attribute):
        raise RuntimeError(
            f"{type(estimator).__name__} is not fitted; call fit first")
