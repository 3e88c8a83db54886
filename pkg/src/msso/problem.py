"""The multiple-system single-output (MSSO) problem.

An instance holds one observation ``d`` (length M) and P system matrices
``F_p`` (each M x N).  A candidate solution is an N x P matrix ``G`` whose
column p is ``g_p`` and whose row n is ``h_n``; the model is

    d ~= F_1 g_1 + ... + F_P g_P = C_1 h_1 + ... + C_N h_N

where ``C_n`` gathers column n of every ``F_p``.  Row indices are 0-based
inside the library; reports and files present them 1-based.
"""

from dataclasses import dataclass
import json

import numpy as np

from .linalg import pinv

FORMAT_NAME = "msso-problem"
FORMAT_VERSION = 1


def _frozen(a):
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


def _real_if_possible(a):
    if np.iscomplexobj(a) and not np.any(a.imag):
        return np.ascontiguousarray(a.real)
    return a


@dataclass(frozen=True, eq=False)
class MssoProblem:
    """Observation ``d`` plus the stack of system matrices.

    Parameters
    ----------
    d : array_like, shape (M,)
    systems : array_like, shape (P, M, N)
        ``systems[p]`` is ``F_p``.  A single 2-D matrix is treated as P=1.
    """

    d: np.ndarray
    systems: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.d)
        systems = np.asarray(self.systems)
        if systems.ndim == 2:
            systems = systems[np.newaxis]
        if d.ndim != 1:
            raise ValueError(f"d must be a vector, got shape {d.shape}")
        if systems.ndim != 3:
            raise ValueError(
                f"systems must have shape (P, M, N), got {systems.shape}")
        P, M, N = systems.shape
        if P < 1 or M < 1 or N < 1:
            raise ValueError(f"empty problem dimensions {(P, M, N)}")
        if d.shape[0] != M:
            raise ValueError(
                f"d has length {d.shape[0]} but systems have {M} rows")
        if not (np.all(np.isfinite(d)) and np.all(np.isfinite(systems))):
            raise ValueError("problem data must be finite")
        dtype = np.result_type(d.dtype, systems.dtype, np.float64)
        object.__setattr__(self, "d", _frozen(d.astype(dtype)))
        object.__setattr__(self, "systems", _frozen(systems.astype(dtype)))

    @property
    def P(self):
        return self.systems.shape[0]

    @property
    def M(self):
        return self.systems.shape[1]

    @property
    def N(self):
        return self.systems.shape[2]

    @property
    def is_complex(self):
        """True when any entry carries a nonzero imaginary part."""
        return bool(np.iscomplexobj(self.d)
                    and (np.any(self.d.imag) or np.any(self.systems.imag)))

    def as_real(self):
        """Return the same problem with real dtype; errors if truly complex."""
        if self.is_complex:
            raise ValueError("real-valued solver; apply stacking reduction")
        if not np.iscomplexobj(self.d):
            return self
        return MssoProblem(self.d.real, self.systems.real)

    @property
    def F_tot(self):
        """``[F_1, ..., F_P]``, shape (M, P*N); pairs with ``g_tot``."""
        return np.concatenate(list(self.systems), axis=1)

    @property
    def C_tot(self):
        """``[C_1, ..., C_N]``, shape (M, N*P); pairs with ``h_tot``."""
        return self.column_view().C_tot

    def column_view(self):
        return column_view(self)

    def zeros(self):
        """An all-zero solution of matching shape and dtype."""
        return np.zeros((self.N, self.P), dtype=self.d.dtype)


@dataclass(frozen=True, eq=False)
class ColumnView:
    """Per-row blocks ``C_n``; ``blocks[n]`` has shape (M, P)."""

    blocks: np.ndarray

    @property
    def C_tot(self):
        N, M, P = self.blocks.shape
        return self.blocks.transpose(1, 0, 2).reshape(M, N * P)

    def systems(self):
        """Invert the permutation back to the ``(P, M, N)`` system stack."""
        return np.ascontiguousarray(self.blocks.transpose(2, 1, 0))


def column_view(problem):
    """Gather column n of every ``F_p`` into ``C_n``."""
    return ColumnView(_frozen(problem.systems.transpose(2, 1, 0)))


def g_tot(G):
    """Stack the columns of G: ``[g_1; ...; g_P]``."""
    return np.asarray(G).T.reshape(-1)


def h_tot(G):
    """Stack the rows of G: ``[h_1; ...; h_N]``."""
    return np.asarray(G).reshape(-1)


def _check_solution(problem, G):
    G = np.asarray(G)
    if G.shape != (problem.N, problem.P):
        raise ValueError(
            f"solution has shape {G.shape}, expected {(problem.N, problem.P)}")
    return G


def row_norms(G):
    G = np.asarray(G)
    return np.sqrt(np.sum(np.abs(G) ** 2, axis=1))


def s_norm(G):
    """Sum over rows of the row l2 norms (the simultaneous-sparsity penalty)."""
    return float(np.sum(row_norms(G)))


def synthesize(problem, G):
    """``sum_p F_p g_p``."""
    G = _check_solution(problem, G)
    return np.einsum("pmn,np->m", problem.systems, G)


def residual(problem, G):
    """``d - sum_p F_p g_p``."""
    return problem.d - synthesize(problem, G)


def objective(problem, G, lam):
    """Relaxed objective ``0.5 ||d - F_tot g_tot||^2 + lam * ||G||_S``."""
    r = residual(problem, G)
    return 0.5 * float(np.vdot(r, r).real) + lam * s_norm(G)


def objective_columns(problem, G, lam):
    """Same objective evaluated through ``C_tot`` and the rows ``h_n``."""
    G = _check_solution(problem, G)
    r = problem.d - problem.C_tot @ h_tot(G)
    penalty = sum(float(np.linalg.norm(h)) for h in G)
    return 0.5 * float(np.vdot(r, r).real) + lam * penalty


@dataclass(frozen=True)
class SparsityProfile:
    """Strictly increasing tuple of 0-based row indices."""

    indices: tuple = ()

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if any(i < 0 for i in idx):
            raise ValueError(f"negative index in profile {idx}")
        if any(a >= b for a, b in zip(idx, idx[1:])):
            raise ValueError(f"profile indices must strictly increase: {idx}")
        object.__setattr__(self, "indices", idx)

    @classmethod
    def of(cls, indices):
        """Build from any iterable, sorting and de-duplicating."""
        return cls(tuple(sorted(set(int(i) for i in indices))))

    @classmethod
    def from_one_based(cls, indices):
        return cls.of(i - 1 for i in indices)

    def one_based(self):
        return [i + 1 for i in self.indices]

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __contains__(self, item):
        return item in self.indices


def profile_of(G, K):
    """Indices of the ``K`` largest-norm rows of ``G``.

    Rows with exactly zero norm are never selected, so the profile can hold
    fewer than ``K`` entries.  Ties go to the lowest index.
    """
    norms = row_norms(G)
    if not 1 <= K <= norms.shape[0]:
        raise ValueError(f"K must lie in [1, {norms.shape[0]}], got {K}")
    order = np.argsort(-norms, kind="stable")[:K]
    return SparsityProfile.of(i for i in order if norms[i] > 0)


def recovery_fraction(truth, estimate):
    """Fraction of the true profile present in the estimate."""
    truth = set(truth)
    if not truth:
        raise ValueError("true profile is empty")
    return len(truth & set(estimate)) / len(truth)


def retune(problem, profile):
    """Least-squares refit of ``d`` on the rows in ``profile``; zero elsewhere.

    The stacked matrix ``[C_q1, ..., C_qK]`` is pseudoinverted, so rank
    deficient subsets get the minimum-norm fit.
    """
    idx = list(profile)
    if not idx:
        raise ValueError("profile is empty")
    blocks = problem.column_view().blocks
    S = np.concatenate([blocks[q] for q in idx], axis=1)
    x = pinv(S) @ problem.d
    G = problem.zeros().astype(np.result_type(x.dtype, problem.d.dtype))
    G[idx] = x.reshape(len(idx), problem.P)
    return G


# complex -> real reductions ------------------------------------------------

def to_real_stacked(problem):
    """Real problem whose row blocks are ``[[Re C, -Im C], [Im C, Re C]]``.

    The real unknown row is ``[Re h_n; Im h_n]``; use :func:`stack_solution`
    and :func:`unstack_solution` to move between the two.
    """
    F = problem.systems
    d = problem.d
    top = np.concatenate([F.real, -F.imag], axis=0)
    bottom = np.concatenate([F.imag, F.real], axis=0)
    systems = np.concatenate([top, bottom], axis=1)
    d_real = np.concatenate([d.real, d.imag])
    return MssoProblem(d_real, systems)


def stack_solution(G):
    G = np.asarray(G)
    return np.concatenate([G.real, G.imag], axis=1)


def unstack_solution(G_real):
    G_real = np.asarray(G_real)
    P = G_real.shape[1] // 2
    return G_real[:, :P] + 1j * G_real[:, P:]


def to_real_split(problem):
    """Real problem with 2P systems ``[Re F; Im F]`` and ``[-Im F; Re F]``.

    Systems are interleaved as ``A_1, B_1, A_2, B_2, ...`` so that the real
    unknowns are ``Re g_1, Im g_1, Re g_2, ...``; see :func:`split_solution`.
    """
    F = problem.systems
    d = problem.d
    P, M, N = F.shape
    systems = np.empty((2 * P, 2 * M, N))
    systems[0::2] = np.concatenate([F.real, F.imag], axis=1)
    systems[1::2] = np.concatenate([-F.imag, F.real], axis=1)
    return MssoProblem(np.concatenate([d.real, d.imag]), systems)


def split_solution(G):
    G = np.asarray(G)
    N, P = G.shape
    out = np.empty((N, 2 * P))
    out[:, 0::2] = G.real
    out[:, 1::2] = G.imag
    return out


def merge_solution(G_split):
    G_split = np.asarray(G_split)
    return G_split[:, 0::2] + 1j * G_split[:, 1::2]


def complex_sparse_as_msso(F, d):
    """Recast one complex sparse system as two simultaneously sparse real ones."""
    F = np.asarray(F)
    if F.ndim != 2:
        raise ValueError(f"expected a single system matrix, got {F.shape}")
    return to_real_split(MssoProblem(d, F[np.newaxis]))


# serialization -------------------------------------------------------------

class ProblemFormatError(ValueError):
    """Raised when a serialized problem cannot be parsed."""


def _pairs(a):
    a = np.asarray(a)
    return [[float(z.real), float(z.imag)] for z in a.ravel()]


def problem_to_dict(problem):
    P, M, N = problem.systems.shape
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "M": M,
        "N": N,
        "P": P,
        "d": _pairs(problem.d),
        "systems": [
            [_pairs(row) for row in F] for F in problem.systems
        ],
    }


def problem_to_json(problem):
    return json.dumps(problem_to_dict(problem), indent=1)


def _complex_entries(value, count, field):
    if not isinstance(value, list) or len(value) != count:
        got = len(value) if isinstance(value, list) else type(value).__name__
        raise ProblemFormatError(
            f"field '{field}': expected {count} entries, got {got}")
    out = np.empty(count, dtype=complex)
    for i, pair in enumerate(value):
        if (not isinstance(pair, list) or len(pair) != 2
                or not all(isinstance(x, (int, float)) for x in pair)):
            raise ProblemFormatError(
                f"field '{field}[{i}]': expected a [re, im] number pair")
        out[i] = complex(pair[0], pair[1])
    return out


def problem_from_dict(obj):
    if not isinstance(obj, dict):
        raise ProblemFormatError("top level: expected a JSON object")
    if obj.get("format") != FORMAT_NAME:
        raise ProblemFormatError(
            f"field 'format': expected '{FORMAT_NAME}', got {obj.get('format')!r}")
    for key in ("M", "N", "P"):
        if not isinstance(obj.get(key), int) or obj[key] < 1:
            raise ProblemFormatError(
                f"field '{key}': expected a positive integer")
    M, N, P = obj["M"], obj["N"], obj["P"]
    d = _complex_entries(obj.get("d"), M, "d")
    systems_raw = obj.get("systems")
    if not isinstance(systems_raw, list) or len(systems_raw) != P:
        raise ProblemFormatError(f"field 'systems': expected {P} matrices")
    systems = np.empty((P, M, N), dtype=complex)
    for p, F in enumerate(systems_raw):
        if not isinstance(F, list) or len(F) != M:
            raise ProblemFormatError(
                f"field 'systems[{p}]': expected {M} rows")
        for m, row in enumerate(F):
            systems[p, m] = _complex_entries(row, N, f"systems[{p}][{m}]")
    try:
        return MssoProblem(_real_if_possible(d), _real_if_possible(systems))
    except ValueError as exc:
        raise ProblemFormatError(str(exc)) from exc


def problem_from_json(text):
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFormatError(
            f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return problem_from_dict(obj)


def load_problem(path):
    with open(path, encoding="utf-8") as fh:
        return problem_from_json(fh.read())


def save_problem(problem, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(problem_to_json(problem))
        fh.write("\n")
