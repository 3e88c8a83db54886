"""Greedy pursuits over the blocks ``C_n``: MP, OMP and LSMP.

All three grow an index set one block at a time and finish with the same
least-squares weight computation (:func:`finalize_weights`).
"""

from dataclasses import dataclass, field
import time

import numpy as np

from .linalg import pinv
from .problem import SparsityProfile, retune

ZERO_RESIDUAL_RTOL = 1e-10


@dataclass
class SolveReport:
    """What a solver run did, independent of the solution itself."""

    algorithm: str
    objective_trace: list = field(default_factory=list)
    selected: SparsityProfile = field(default_factory=SparsityProfile)
    order: tuple = ()
    iterations: int = 0
    converged: bool = False
    wall_time: float = 0.0
    lam: float = None

    def to_dict(self):
        return {
            "algorithm": self.algorithm,
            "lambda": None if self.lam is None else float(self.lam),
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
            "wall_time": float(self.wall_time),
            "objective_trace": [float(v) for v in self.objective_trace],
            "selected": self.selected.one_based(),
            "order": [int(i) + 1 for i in self.order],
        }


@dataclass
class GreedyState:
    """Chosen indices (selection order), stacked blocks and residual."""

    chosen: list
    stacked: np.ndarray
    residual: np.ndarray
    iteration: int = 0


def precompute_projectors(blocks):
    """Pseudoinverses of every block; ``Q_n = C_n @ pinvs[n]``.

    The projectors are kept in this factored form so memory stays at
    ``O(N M P)`` rather than ``O(N M^2)``.
    """
    return np.stack([pinv(C) for C in blocks])


def projection_scores(blocks, r, pinvs):
    """``Re(r^H Q_n r)`` for every n."""
    coeffs = np.einsum("npm,m->np", pinvs, r)
    proj = np.einsum("nmp,np->nm", blocks, coeffs)
    return np.real(proj @ r.conj())


def mp_select(blocks, r, pinvs, exclude=()):
    """Index of the block whose span captures the most residual energy.

    Parameters
    ----------
    blocks : ndarray, shape (N, M, P)
    r : ndarray, shape (M,)
    pinvs : ndarray, shape (N, P, M)
        Output of :func:`precompute_projectors`.
    exclude : iterable of int
        Indices that may not be chosen (OMP).
    """
    r = np.asarray(r)
    if not np.any(r):
        raise ValueError("zero residual")
    scores = projection_scores(blocks, r, pinvs)
    for i in exclude:
        scores[i] = -np.inf
    return int(np.argmax(scores))


def _blocks(problem):
    return problem.column_view().blocks


def _is_zero(r, d_norm):
    return np.linalg.norm(r) <= ZERO_RESIDUAL_RTOL * d_norm


def _half_sq(r):
    return 0.5 * float(np.vdot(r, r).real)


def finalize_weights(problem, profile):
    """Least-squares weights on ``profile``; the zero solution when empty."""
    if len(profile) == 0:
        return problem.zeros()
    return retune(problem, profile)


def _finish(problem, name, chosen, trace, converged, start):
    profile = SparsityProfile.of(chosen)
    G = finalize_weights(problem, profile)
    report = SolveReport(
        algorithm=name,
        objective_trace=trace,
        selected=profile,
        order=tuple(chosen),
        iterations=len(trace),
        converged=bool(converged),
        wall_time=time.perf_counter() - start,
    )
    return G, report


def run_mp(problem, K):
    """Matching pursuit: up to ``K`` selections, repeats allowed.

    Returns ``(G, report)``; ``report.order`` lists distinct indices in the
    order they were first chosen.
    """
    if K < 1:
        raise ValueError(f"K must be at least 1, got {K}")
    start = time.perf_counter()
    blocks = _blocks(problem)
    pinvs = precompute_projectors(blocks)
    d = problem.d
    d_norm = np.linalg.norm(d)
    r = d.copy()
    chosen = []
    trace = []
    converged = _is_zero(r, d_norm)
    for _ in range(K):
        if converged:
            break
        q = mp_select(blocks, r, pinvs)
        if q not in chosen:
            chosen.append(q)
        r = r - blocks[q] @ (pinvs[q] @ r)
        trace.append(_half_sq(r))
        converged = _is_zero(r, d_norm)
    return _finish(problem, "mp", chosen, trace, converged, start)


def run_omp(problem, K):
    """Orthogonal matching pursuit: distinct selections, full refit residual."""
    if K < 1:
        raise ValueError(f"K must be at least 1, got {K}")
    start = time.perf_counter()
    blocks = _blocks(problem)
    pinvs = precompute_projectors(blocks)
    d = problem.d
    d_norm = np.linalg.norm(d)
    state = GreedyState(chosen=[], stacked=np.zeros((problem.M, 0), d.dtype),
                        residual=d.copy())
    trace = []
    converged = _is_zero(state.residual, d_norm)
    while state.iteration < K and len(state.chosen) < problem.N:
        if converged:
            break
        q = mp_select(blocks, state.residual, pinvs, exclude=state.chosen)
        state.chosen.append(q)
        state.stacked = np.concatenate([state.stacked, blocks[q]], axis=1)
        state.residual = d - state.stacked @ (pinv(state.stacked) @ d)
        state.iteration += 1
        trace.append(_half_sq(state.residual))
        converged = _is_zero(state.residual, d_norm)
    return _finish(problem, "omp", state.chosen, trace, converged, start)


def lsmp_scores(blocks, stacked, d, candidates, rel_tol=1e-10):
    """``Re(d^H S S^+ d)`` with ``S = [stacked, C_n]`` for each candidate n.

    Rather than a pseudoinverse per candidate, each ``C_n`` is projected
    onto the orthogonal complement of ``span(stacked)``; the score is the
    energy already captured plus the residual energy captured by that
    complement.  Directions of the complement whose singular value is below
    ``rel_tol * ||C_n||`` are numerically inside the span and are dropped.
    """
    scores = np.full(blocks.shape[0], -np.inf)
    if stacked.shape[1]:
        U, s, _ = np.linalg.svd(stacked, full_matrices=False)
        Q = U[:, s > 1e-12 * s[0]]
    else:
        Q = stacked
    captured = d - _complement(Q, d)
    base = float(np.vdot(d, captured).real)
    r = d - captured
    for n in candidates:
        C = blocks[n]
        scale = np.linalg.norm(C, 2)
        if scale == 0.0:
            scores[n] = base
            continue
        U, s, _ = np.linalg.svd(_complement(Q, C), full_matrices=False)
        U = U[:, s > rel_tol * scale]
        c = U.conj().T @ r
        scores[n] = base + float(np.vdot(c, c).real)
    return scores


def _complement(Q, X):
    if Q.shape[1] == 0:
        return X
    return X - Q @ (Q.conj().T @ X)


def lsmp_scores_direct(blocks, stacked, d, candidates):
    """Literal form of :func:`lsmp_scores`: one pseudoinverse per candidate."""
    scores = np.full(blocks.shape[0], -np.inf)
    for n in candidates:
        S = np.concatenate([stacked, blocks[n]], axis=1)
        fit = S @ (pinv(S) @ d)
        scores[n] = np.real(np.vdot(d, fit))
    return scores


def run_lsmp(problem, K):
    """Least-squares matching pursuit: each step refits jointly per candidate."""
    if K < 1:
        raise ValueError(f"K must be at least 1, got {K}")
    start = time.perf_counter()
    blocks = _blocks(problem)
    d = problem.d
    d_norm = np.linalg.norm(d)
    state = GreedyState(chosen=[], stacked=np.zeros((problem.M, 0), d.dtype),
                        residual=d.copy())
    trace = []
    converged = _is_zero(d, d_norm)
    while state.iteration < K and len(state.chosen) < problem.N:
        if converged:
            break
        candidates = [n for n in range(problem.N) if n not in state.chosen]
        scores = lsmp_scores(blocks, state.stacked, d, candidates)
        q = int(np.argmax(scores))
        state.chosen.append(q)
        state.stacked = np.concatenate([state.stacked, blocks[q]], axis=1)
        state.residual = d - state.stacked @ (pinv(state.stacked) @ d)
        state.iteration += 1
        trace.append(_half_sq(state.residual))
        converged = _is_zero(state.residual, d_norm)
    return _finish(problem, "lsmp", state.chosen, trace, converged, start)
