"""Minimisers of the relaxed objective ``0.5||d - F_tot g_tot||^2 + lam ||G||_S``.

* :func:`irls`: iteratively reweighted least squares on all rows at once,
  each step a ridge problem solved by :func:`~msso.linalg.lsqr_damped`.
* :func:`rbrs`: row-by-row sequential shrinkage (real data only).
* :func:`cbcs`: column-by-column sequential shrinkage (real data only).

Every solver records the objective once per outer iteration and only ever
accepts updates that do not increase the objective it is working on, so
the recorded trace is non-increasing.
"""

from dataclasses import dataclass, replace
import math
import time

import numba
import numpy as np

from .greedy import SolveReport
from .linalg import lsqr_damped, max_singular_value, pinv
from .problem import row_norms

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class RelaxParams:
    """Control parameters shared by the relaxation solvers.

    ``epsilon=None`` resolves to ``1e-8 * (1 + ||d||)`` per problem and
    ``delta_inner=None`` to ``delta``.  ``init`` is ``"pinv"`` (the
    pseudoinverse solution), ``"ones"`` or ``"zeros"``; IRLS rejects
    ``"zeros"``.  ``max_vector`` bounds the
    per-column repeat loop of CBCS.
    """

    lam: float = 0.0
    epsilon: float = None
    delta: float = 1e-5
    delta_inner: float = None
    max_outer: int = 500
    max_inner: int = 50
    max_vector: int = 50
    init: str = "pinv"

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError(f"lambda must be nonnegative, got {self.lam}")
        if self.epsilon is not None and self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.max_outer < 1 or self.max_inner < 1 or self.max_vector < 1:
            raise ValueError("iteration caps must be positive")
        if self.init not in ("pinv", "ones", "zeros"):
            raise ValueError(f"unknown init {self.init!r}")

    def resolved(self, problem):
        eps = self.epsilon
        if eps is None:
            eps = 1e-8 * (1.0 + float(np.linalg.norm(problem.d)))
        delta_inner = self.delta if self.delta_inner is None else self.delta_inner
        return replace(self, epsilon=eps, delta_inner=delta_inner)


def _initial_solution(problem, init):
    if init == "zeros":
        return np.zeros((problem.N, problem.P), dtype=problem.d.dtype)
    if init == "ones":
        return np.ones((problem.N, problem.P), dtype=problem.d.dtype)
    h = pinv(problem.C_tot) @ problem.d
    return h.reshape(problem.N, problem.P)


# IRLS ----------------------------------------------------------------------

def irls_weights(G, epsilon):
    """Diagonal of ``W_tot``: each row n contributes P copies of
    ``2 / (||h_n|| + epsilon)``.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    G = np.asarray(G)
    w = 2.0 / (row_norms(G) + epsilon)
    return np.repeat(w, G.shape[1])


def line_search_mu(f, tol=1e-8, max_evals=40):
    """Golden-section search for the minimiser of ``f`` on ``[0, 1]``.

    The returned point is never worse than either endpoint.
    """
    f0, f1 = f(0.0), f(1.0)
    a, b = 0.0, 1.0
    c = b - GOLDEN * (b - a)
    e = a + GOLDEN * (b - a)
    fc, fe = f(c), f(e)
    evals = 4
    while b - a > tol and evals < max_evals:
        if fc <= fe:
            b, e, fe = e, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, e, fe
            e = a + GOLDEN * (b - a)
            fe = f(e)
        evals += 1
    mu, fmu = (c, fc) if fc <= fe else (e, fe)
    if f0 <= fmu and f0 <= f1:
        return 0.0
    if f1 < fmu:
        return 1.0
    return mu


def irls(problem, params, surrogate="majorizer"):
    """Iteratively reweighted least squares.

    Each step solves the ridge problem ``||d - A q||^2 + c ||q||^2`` with
    ``A = C_tot W^{-1/2}`` and then line-searches between the current and
    the ridge solution.

    With ``surrogate="majorizer"`` the ridge weight is ``c = lam / 2``.  The
    weighted quadratic then touches the penalty ``lam ||h_n||`` with matching
    value *and* slope at the current iterate, so fixed points are minimisers
    of the relaxed objective.  ``surrogate="literal"`` uses ``c = lam``; that
    quadratic matches the penalty value only, and its fixed points minimise
    the objective with the penalty doubled, which leaves a visible gap at
    moderate ``lam``.

    Parameters
    ----------
    problem : MssoProblem
        Real or complex.
    params : RelaxParams
    surrogate : {"majorizer", "literal"}

    Returns
    -------
    G : ndarray, shape (N, P)
    report : SolveReport
    """
    if surrogate not in ("majorizer", "literal"):
        raise ValueError(f"unknown surrogate {surrogate!r}")
    if params.init == "zeros":
        raise ValueError("IRLS cannot start from zero: every weight would "
                         "be 2/epsilon")
    start = time.perf_counter()
    prm = params.resolved(problem)
    lam, eps = prm.lam, prm.epsilon
    ridge = 0.5 * lam if surrogate == "majorizer" else lam
    C = problem.C_tot
    d = problem.d
    N, P = problem.N, problem.P

    h = _initial_solution(problem, prm.init).reshape(-1)
    r = d - C @ h
    f_prev = _objective_h(r, h, lam, N, P)
    trace = []
    converged = False
    for _ in range(prm.max_outer):
        w = irls_weights(h.reshape(N, P), eps)
        scale = 1.0 / np.sqrt(w)
        q = lsqr_damped(C * scale, d, ridge)
        h_tmp = scale * q
        r_tmp = d - C @ h_tmp

        along = _segment_objective(r, r_tmp - r, h.reshape(N, P),
                                   (h_tmp - h).reshape(N, P), lam)
        mu = line_search_mu(along)
        h = (1 - mu) * h + mu * h_tmp
        r = (1 - mu) * r + mu * r_tmp
        f = _objective_h(r, h, lam, N, P)
        trace.append(f)
        if f_prev - f < prm.delta:
            converged = True
            break
        f_prev = f

    G = h.reshape(N, P)
    report = SolveReport("irls", trace, iterations=len(trace),
                         converged=converged,
                         wall_time=time.perf_counter() - start, lam=lam)
    return G, report


def _segment_objective(r, dr, H, dH, lam):
    """``mu -> objective(H + mu dH)`` with residual ``r + mu dr``, using
    precomputed quadratic coefficients so each evaluation is O(N)."""
    r0 = float(np.vdot(r, r).real)
    r1 = 2.0 * float(np.vdot(r, dr).real)
    r2 = float(np.vdot(dr, dr).real)
    a = np.sum(np.abs(H) ** 2, axis=1)
    b = 2.0 * np.sum((H.conj() * dH).real, axis=1)
    c = np.sum(np.abs(dH) ** 2, axis=1)

    def f(mu):
        rows = np.maximum(a + mu * (b + mu * c), 0.0)
        return 0.5 * (r0 + mu * (r1 + mu * r2)) + lam * float(
            np.sqrt(rows).sum())
    return f


def _objective_h(r, h, lam, N, P):
    hs = h.reshape(N, P)
    return 0.5 * float(np.vdot(r, r).real) + lam * float(
        np.sum(np.sqrt(np.sum(np.abs(hs) ** 2, axis=1))))


# RBRS ----------------------------------------------------------------------

@numba.njit(cache=True)
def _rbrs_kernel(blocks, gram, evals, evecs, d, H, lam, eps, delta_outer,
                 delta_inner, max_outer, max_inner, trace):
    N, M, P = blocks.shape
    r = d.copy()
    for n in range(N):
        r -= blocks[n] @ H[n]
    f_prev = 0.5 * (r @ r)
    for n in range(N):
        f_prev += lam * np.sqrt(H[n] @ H[n])
    wmax = evals.max() if evals.size else 0.0
    floor = 1e-14 * max(wmax, 1.0)

    n_done = 0
    converged = False
    for k in range(max_outer):
        for j in range(N):
            Cj = blocks[j]
            hj = H[j].copy()
            # C_j^T r_j with r_j = r + C_j h_j
            b = Cj.T @ r + gram[j] @ hj
            U = evecs[j]
            w = evals[j]
            x = hj.copy()
            phi = 0.5 * (x @ (gram[j] @ x)) - b @ x + lam * np.sqrt(x @ x)
            if np.sqrt(b @ b) <= lam:
                # b = C_j^T r_j: the row optimum is exactly zero.
                r += Cj @ hj
                H[j] = 0.0
                continue
            # A row at (or near) zero barely moves under the eps-guarded
            # iteration, so also try the best point on the ray through the unshrunk fit.
            y = U.T @ b
            for t in range(P):
                y[t] = y[t] / w[t] if w[t] > floor else 0.0
            xs = U @ y
            # exact minimiser along the ray through the unshrunk fit
            a = xs @ (gram[j] @ xs)
            c = b @ xs - lam * np.sqrt(xs @ xs)
            xs = xs * (c / a) if a > 0.0 and c > 0.0 else xs * 0.0
            phis = 0.5 * (xs @ (gram[j] @ xs)) - b @ xs + lam * np.sqrt(xs @ xs)
            if phis < phi:
                x = xs
                phi = phis
            for i in range(max_inner):
                shift = lam / (np.sqrt(x @ x) + eps)
                y = U.T @ b
                for t in range(P):
                    den = w[t] + shift
                    y[t] = y[t] / den if den > floor else 0.0
                xn = U @ y
                phin = (0.5 * (xn @ (gram[j] @ xn)) - b @ xn
                        + lam * np.sqrt(xn @ xn))
                if phin > phi:
                    break
                dec = phi - phin
                x = xn
                phi = phin
                if dec < delta_inner:
                    break
            r -= Cj @ (x - hj)
            H[j] = x
        r = d.copy()
        for n in range(N):
            r -= blocks[n] @ H[n]
        f = 0.5 * (r @ r)
        for n in range(N):
            f += lam * np.sqrt(H[n] @ H[n])
        trace[k] = f
        n_done = k + 1
        if f_prev - f < delta_outer:
            converged = True
            break
        f_prev = f
    return n_done, converged


def _require_real(problem):
    if problem.is_complex:
        raise ValueError("real-valued solver; apply stacking reduction")
    return problem.as_real()


def rbrs(problem, params):
    """Row-by-row sequential shrinkage on a real problem.

    Each row update iterates
    ``x <- [C_j^T C_j + lam / (||x|| + eps) I]^{-1} C_j^T r_j``
    with the P x P inverse applied through a per-row eigendecomposition of
    ``C_j^T C_j`` computed once up front.
    """
    start = time.perf_counter()
    problem = _require_real(problem)
    prm = params.resolved(problem)
    blocks = np.ascontiguousarray(problem.column_view().blocks)
    gram = np.ascontiguousarray(np.einsum("nmp,nmq->npq", blocks, blocks))
    evals, evecs = np.linalg.eigh(gram)
    H = np.ascontiguousarray(_initial_solution(problem, prm.init), dtype=float)
    trace = np.empty(prm.max_outer)
    n_done, converged = _rbrs_kernel(
        blocks, gram, np.ascontiguousarray(evals),
        np.ascontiguousarray(evecs), np.ascontiguousarray(problem.d), H,
        float(prm.lam), float(prm.epsilon), float(prm.delta),
        float(prm.delta_inner), int(prm.max_outer), int(prm.max_inner), trace)
    report = SolveReport("rbrs", list(trace[:n_done]), iterations=n_done,
                         converged=bool(converged),
                         wall_time=time.perf_counter() - start, lam=prm.lam)
    return H, report


# CBCS ----------------------------------------------------------------------

@numba.njit(cache=True)
def element_fixed_point(v, b, alpha, lam, eps, x0, delta, max_iter):
    """Minimise ``v x + alpha/2 x^2 + lam sqrt(x^2 + b + eps)`` over scalar x.

    Iterates ``x <- -v / (alpha + lam / sqrt(x^2 + b + eps))`` from ``x0``
    or from the soft-threshold point, whichever is lower, keeping only steps
    that lower the scalar objective.
    """
    x = x0
    psi = v * x + 0.5 * alpha * x * x + lam * np.sqrt(x * x + b + eps)
    # Soft-threshold point: exact for b = 0, where the eps-guarded
    # iteration started near zero would hardly move.
    xs = -np.sign(v) * max(abs(v) - lam, 0.0) / alpha
    psis = v * xs + 0.5 * alpha * xs * xs + lam * np.sqrt(xs * xs + b + eps)
    if psis < psi:
        x = xs
        psi = psis
    for _ in range(max_iter):
        xn = -v / (alpha + lam / np.sqrt(x * x + b + eps))
        psin = v * xn + 0.5 * alpha * xn * xn + lam * np.sqrt(xn * xn + b + eps)
        if psin > psi:
            break
        dec = psi - psin
        x = xn
        psi = psin
        if dec < delta:
            break
    return x


@numba.njit(cache=True)
def _cbcs_kernel(F, d, g, alpha, lam, eps, delta_outer, delta_inner,
                 max_outer, max_vector, max_inner, trace):
    P, M, N = F.shape
    r = d.copy()
    for q in range(P):
        r -= F[q] @ g[q]
    sumsq = np.zeros(N)
    for q in range(P):
        sumsq += g[q] * g[q]
    f_prev = 0.5 * (r @ r) + lam * np.sqrt(sumsq + eps).sum()

    n_done = 0
    converged = False
    for k in range(max_outer):
        for p in range(P):
            Fp = F[p]
            b = np.maximum(sumsq - g[p] * g[p], 0.0)
            col_obj = 0.5 * (r @ r) + lam * np.sqrt(g[p] * g[p] + b + eps).sum()
            for j in range(max_vector):
                # v = F^T F g - alpha g - F^T (r + F g) = -F^T r - alpha g
                v = -(Fp.T @ r) - alpha * g[p]
                x = np.empty(N)
                for n in range(N):
                    x[n] = element_fixed_point(v[n], b[n], alpha, lam, eps,
                                               g[p, n], delta_inner, max_inner)
                r_new = r - Fp @ (x - g[p])
                col_new = 0.5 * (r_new @ r_new) + lam * np.sqrt(x * x + b + eps).sum()
                if col_new > col_obj:
                    break
                dec = col_obj - col_new
                g[p] = x
                r = r_new
                col_obj = col_new
                if dec < delta_inner:
                    break
            sumsq = b + g[p] * g[p]
        r = d.copy()
        for q in range(P):
            r -= F[q] @ g[q]
        sumsq = np.zeros(N)
        for q in range(P):
            sumsq += g[q] * g[q]
        f = 0.5 * (r @ r) + lam * np.sqrt(sumsq + eps).sum()
        trace[k] = f
        n_done = k + 1
        if f_prev - f < delta_outer:
            converged = True
            break
        f_prev = f
    return n_done, converged


def cbcs_alpha(problem):
    """Proximal weight: the largest ``sigma_max(F_p)^2`` over systems.

    This makes ``alpha I - F_p^T F_p`` positive semidefinite for every p.
    """
    return max(max_singular_value(F) for F in problem.systems) ** 2


def cbcs(problem, params):
    """Column-by-column sequential shrinkage on a real problem.

    Each column ``g_p`` is refined repeatedly (up to ``max_vector`` times)
    by a separable proximal step whose scalar subproblems are solved with
    :func:`element_fixed_point`, before moving to the next column.

    CBCS works on the smoothed penalty ``lam * sum_n sqrt(||g_n||^2 + eps)``
    throughout, and its objective trace records that value.  Without the
    smoothing, a row that sits at zero in every column cannot leave zero
    through single-column steps even when the joint row gradient exceeds
    ``lam``, and the sweep stalls short of the optimum.  The smoothed value
    exceeds the true objective by at most ``lam * N * sqrt(eps)``.
    """
    start = time.perf_counter()
    problem = _require_real(problem)
    prm = params.resolved(problem)
    F = np.ascontiguousarray(problem.systems)
    g = np.ascontiguousarray(_initial_solution(problem, prm.init).T,
                             dtype=float)
    alpha = cbcs_alpha(problem)
    trace = np.empty(prm.max_outer)
    n_done, converged = _cbcs_kernel(
        F, np.ascontiguousarray(problem.d), g, float(alpha), float(prm.lam),
        float(prm.epsilon), float(prm.delta), float(prm.delta_inner),
        int(prm.max_outer), int(prm.max_vector), int(prm.max_inner), trace)
    report = SolveReport("cbcs", list(trace[:n_done]), iterations=n_done,
                         converged=bool(converged),
                         wall_time=time.perf_counter() - start, lam=prm.lam)
    return np.ascontiguousarray(g.T), report

