"""Dense matrix kernels shared by the solvers.

Everything here accepts real or complex ``numpy`` arrays and never mutates
its inputs.
"""

import numpy as np

DEFAULT_PINV_RTOL = 1e-12
DEFAULT_LSQR_TOL = 1e-10


def _as_matrix(A):
    A = np.asarray(A)
    if A.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {A.shape}")
    if A.size == 0:
        raise ValueError("empty operand")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def pinv(A, rel_tol=DEFAULT_PINV_RTOL):
    """Moore-Penrose pseudoinverse through a thin SVD.

    Singular values at or below ``rel_tol * sigma_max`` are treated as zero.

    Parameters
    ----------
    A : array_like, shape (m, n)
        Real or complex matrix.
    rel_tol : float
        Relative truncation threshold in ``[0, 1)``.

    Returns
    -------
    ndarray, shape (n, m)
    """
    A = _as_matrix(A)
    if not 0.0 <= rel_tol < 1.0:
        raise ValueError(f"rel_tol must lie in [0, 1), got {rel_tol}")
    U, s, Vh = np.linalg.svd(A, full_matrices=False)
    cutoff = rel_tol * s[0]
    keep = s > cutoff
    s_inv = np.zeros_like(s)
    s_inv[keep] = 1.0 / s[keep]
    return (Vh.conj().T * s_inv) @ U.conj().T


def max_singular_value(A):
    """Largest singular value of ``A``."""
    A = _as_matrix(A)
    return float(np.linalg.svd(A, compute_uv=False)[0])


def lsqr_damped(A, d, lam=0.0, tol=DEFAULT_LSQR_TOL, max_iter=None,
                return_info=False):
    """Minimise ``||d - A q||^2 + lam * ||q||^2`` by Golub-Kahan bidiagonalization.

    This is the LSQR recurrence of Paige and Saunders, written for complex
    operands.  The ridge weight ``lam`` multiplies the *squared* norm, so the
    classical LSQR damping parameter is ``sqrt(lam)``.

    Iteration stops when the relative normal-equation residual
    ``||A^H r - lam q|| / (||Abar|| ||rbar||)`` drops below ``tol``, when the
    damped residual itself is negligible (consistent systems), or after
    ``max_iter`` steps (default ``4 * max(m, n)``).

    Parameters
    ----------
    A : array_like, shape (m, n)
    d : array_like, shape (m,)
    lam : float
        Nonnegative ridge weight.
    tol : float
    max_iter : int, optional
    return_info : bool
        Also return a dict with ``iterations`` and ``converged``.

    Returns
    -------
    q : ndarray, shape (n,)
    info : dict
        Only when ``return_info`` is true.
    """
    A = _as_matrix(A)
    d = np.asarray(d)
    m, n = A.shape
    if d.ndim != 1 or d.shape[0] != m:
        raise ValueError(
            f"dimension mismatch: A is {m}x{n} but d has shape {d.shape}")
    if lam < 0:
        raise ValueError(f"lam must be nonnegative, got {lam}")
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if max_iter is None:
        max_iter = 4 * max(m, n)

    dtype = np.result_type(A.dtype, d.dtype, np.float64)
    x = np.zeros(n, dtype=dtype)
    info = {"iterations": 0, "converged": True}

    u = d.astype(dtype, copy=True)
    beta = np.linalg.norm(u)
    if beta == 0.0:
        return (x, info) if return_info else x
    u /= beta
    v = A.conj().T @ u
    alpha = np.linalg.norm(v)
    if alpha == 0.0:
        return (x, info) if return_info else x
    v /= alpha

    damp = np.sqrt(lam)
    bnorm = beta
    w = v.copy()
    phibar = beta
    rhobar = alpha
    anorm2 = 0.0
    res2 = 0.0
    converged = False
    itn = 0
    while itn < max_iter:
        itn += 1
        u = A @ v - alpha * u
        beta = np.linalg.norm(u)
        if beta > 0.0:
            u /= beta
        anorm2 += alpha * alpha + beta * beta + lam

        # eliminate the damping row
        rhobar1 = np.hypot(rhobar, damp)
        cs1 = rhobar / rhobar1
        sn1 = damp / rhobar1
        psi = sn1 * phibar
        phibar = cs1 * phibar

        v = A.conj().T @ u - beta * v
        alpha = np.linalg.norm(v)
        if alpha > 0.0:
            v /= alpha

        rho = np.hypot(rhobar1, beta)
        cs = rhobar1 / rho
        sn = beta / rho
        theta = sn * alpha
        rhobar = -cs * alpha
        phi = cs * phibar
        phibar = sn * phibar

        x += (phi / rho) * w
        w = v - (theta / rho) * w

        res2 += psi * psi
        rnorm = np.sqrt(phibar * phibar + res2)
        arnorm = alpha * abs(sn * phi)
        anorm = np.sqrt(anorm2)

        if rnorm <= tol * bnorm:
            converged = True
            break
        if arnorm <= tol * anorm * rnorm:
            converged = True
            break
        if alpha == 0.0:
            converged = True
            break

    info = {"iterations": itn, "converged": converged}
    return (x, info) if return_info else x

