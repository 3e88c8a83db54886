"""Second-order cone form of the relaxed objective and cone-solver adapters.

The program is ``min c^T x  s.t.  A x = b,  x in K`` where ``K`` is, in
order, a one-dimensional nonnegative orthant holding ``s``, the residual
cone ``||[z; u]|| <= v`` and one cone ``||g-entries of row n|| <= t_n`` per
row.  Every second-order cone block stores its bound *last*.

Variable layout::

    [ s | z_1 .. z_R, u, v | row_1 entries, t_1 | ... | row_N entries, t_N ]

``z`` is the real expansion of the residual (all real parts, then all
imaginary parts for complex data).  A row's entries are
``Re g_1[n], Im g_1[n], ..., Re g_P[n], Im g_P[n]`` for complex data and
``g_1[n], ..., g_P[n]`` for real data.

With ``u = (s - 1)/2`` and ``v = (s + 1)/2`` we have ``v^2 - u^2 = s``, so
the residual cone says ``||z||^2 <= s`` and the objective ``s/2 + lam sum t``
equals the relaxed objective at the optimum.

Solving is delegated to an adapter: any callable taking a
:class:`ConeProgram` and returning an :class:`AdapterResult`.
:func:`resolve_adapter` maps a name, an importable ``"module:attr"`` or the
path of an executable (driven through the JSON format of
:func:`program_to_dict`) to such a callable.  The environment variable
``MSSO_CONE_ADAPTER`` supplies the default.
"""

from dataclasses import dataclass, field
import importlib
import json
import os
import subprocess
import tempfile
import time

import numpy as np

from .greedy import SolveReport
from .problem import objective

ADAPTER_ENV = "MSSO_CONE_ADAPTER"
PROGRAM_FORMAT = "msso-cone-program"
PROGRAM_VERSION = 1


@dataclass(frozen=True)
class VariableMap:
    """Where each named quantity lives inside the variable vector.

    ``g_re`` and ``g_im`` are integer arrays of shape (N, P); ``g_im`` is
    ``None`` for real problems.  ``z`` and ``t`` are index arrays too.
    """

    N: int
    P: int
    complex_data: bool
    s: int
    z: np.ndarray
    u: int
    v: int
    t: np.ndarray
    g_re: np.ndarray
    g_im: np.ndarray = None

    def to_dict(self):
        return {
            "N": self.N, "P": self.P, "complex": self.complex_data,
            "s": self.s, "u": self.u, "v": self.v,
            "z": self.z.tolist(), "t": self.t.tolist(),
            "g_re": self.g_re.tolist(),
            "g_im": None if self.g_im is None else self.g_im.tolist(),
        }

    @classmethod
    def from_dict(cls, obj):
        g_im = obj.get("g_im")
        return cls(
            N=int(obj["N"]), P=int(obj["P"]), complex_data=bool(obj["complex"]),
            s=int(obj["s"]), u=int(obj["u"]), v=int(obj["v"]),
            z=np.asarray(obj["z"], dtype=int), t=np.asarray(obj["t"], dtype=int),
            g_re=np.asarray(obj["g_re"], dtype=int).reshape(obj["N"], obj["P"]),
            g_im=None if g_im is None else np.asarray(g_im, dtype=int).reshape(
                obj["N"], obj["P"]),
        )


@dataclass(frozen=True, eq=False)
class ConeProgram:
    """``min c^T x`` subject to ``A x = b`` and ``x`` in the product cone.

    ``cones`` is a tuple of ``(kind, size)`` pairs with kind ``"nonneg"`` or
    ``"soc"``; the blocks tile the variable vector in order.
    """

    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    cones: tuple
    variable_map: VariableMap

    def __post_init__(self):
        n = self.c.shape[0]
        if self.A.shape[1] != n or self.A.shape[0] != self.b.shape[0]:
            raise ValueError("inconsistent program dimensions")
        if sum(size for _, size in self.cones) != n:
            raise ValueError("cone sizes do not cover the variable vector")

    @property
    def n_vars(self):
        return self.c.shape[0]

    def cone_slices(self):
        """``(kind, slice)`` for each cone block in order."""
        out, start = [], 0
        for kind, size in self.cones:
            out.append((kind, slice(start, start + size)))
            start += size
        return out

    def cone_names(self):
        names = []
        for i, (kind, _) in enumerate(self.cones):
            if kind == "nonneg":
                names.append("orthant")
            elif i == 1:
                names.append("residual cone")
            else:
                names.append(f"row cone {i - 1}")
        return names


def build_socp(problem, lam):
    """Second-order cone program whose optimum is the relaxed objective's.

    Parameters
    ----------
    problem : MssoProblem
    lam : float
        Nonnegative penalty weight.

    Returns
    -------
    ConeProgram
    """
    if lam < 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    cplx = problem.is_complex
    P, M, N = problem.systems.shape
    F = problem.systems
    R = 2 * M if cplx else M
    row_dim = 2 * P if cplx else P

    s = 0
    z = np.arange(1, 1 + R)
    u, v = 1 + R, 2 + R
    base = 3 + R
    rows = base + np.arange(N)[:, None] * (row_dim + 1)
    if cplx:
        g_re = rows + 2 * np.arange(P)[None, :]
        g_im = g_re + 1
    else:
        g_re = rows + np.arange(P)[None, :]
        g_im = None
    t = rows[:, 0] + row_dim
    n_vars = base + N * (row_dim + 1)
    vmap = VariableMap(N, P, cplx, s, z, u, v, t, g_re, g_im)

    A = np.zeros((R + 2, n_vars))
    b = np.zeros(R + 2)
    # z + F_tot g_tot = d, expanded to real rows
    A[np.arange(R), z] = 1.0
    if cplx:
        for p in range(P):
            A[:M, g_re[:, p]] += F[p].real
            A[:M, g_im[:, p]] -= F[p].imag
            A[M:R, g_re[:, p]] += F[p].imag
            A[M:R, g_im[:, p]] += F[p].real
        b[:M] = problem.d.real
        b[M:R] = problem.d.imag
    else:
        for p in range(P):
            A[:M, g_re[:, p]] += F[p].real
        b[:M] = problem.d.real
    # u - s/2 = -1/2 and v - s/2 = 1/2
    A[R, u], A[R, s], b[R] = 1.0, -0.5, -0.5
    A[R + 1, v], A[R + 1, s], b[R + 1] = 1.0, -0.5, 0.5

    c = np.zeros(n_vars)
    c[s] = 0.5
    c[t] = lam
    cones = (("nonneg", 1), ("soc", R + 2)) + (("soc", row_dim + 1),) * N
    return ConeProgram(c, A, b, cones, vmap)


def embed_point(problem, G):
    """Feasible program point carrying ``G`` with tight auxiliaries."""
    G = np.asarray(G)
    if G.shape != (problem.N, problem.P):
        raise ValueError(
            f"G has shape {G.shape}, expected {(problem.N, problem.P)}")
    prog_map = build_socp(problem, 0.0).variable_map
    return _embed(problem, G, prog_map)


def _embed(problem, G, vm):
    x = np.zeros(_n_vars(vm))
    r = problem.d - np.einsum("pmn,np->m", problem.systems, G)
    if vm.complex_data:
        z = np.concatenate([r.real, r.imag])
        x[vm.g_re] = G.real
        x[vm.g_im] = G.imag
    else:
        z = np.real(r)
        x[vm.g_re] = np.real(G)
    s_val = float(z @ z)
    x[vm.z] = z
    x[vm.s] = s_val
    x[vm.u] = (s_val - 1.0) / 2.0
    x[vm.v] = (s_val + 1.0) / 2.0
    x[vm.t] = np.sqrt(np.sum(np.abs(G) ** 2, axis=1))
    return x


def _n_vars(vm):
    return int(vm.t[-1]) + 1


def extract_solution(prog, x):
    """Solution matrix ``G`` stored in the variable vector ``x``."""
    x = np.asarray(x, dtype=float)
    vm = prog.variable_map
    if x.shape != (prog.n_vars,):
        raise ValueError(
            f"variable vector has length {x.size}, program has {prog.n_vars}")
    if vm.complex_data:
        return x[vm.g_re] + 1j * x[vm.g_im]
    return x[vm.g_re].copy()


def program_objective(prog, x):
    return float(prog.c @ np.asarray(x, dtype=float))


@dataclass
class FeasibilityReport:
    """Equality violation and per-cone margins of a candidate point.

    A cone margin is ``||head|| - bound`` for a second-order cone and
    ``-min(x)`` for the orthant; positive values are violations.
    """

    eq_violation: float
    cone_margins: list
    cone_names: list
    tol: float

    @property
    def worst_margin(self):
        return max(self.cone_margins)

    @property
    def violated(self):
        return [name for name, m in zip(self.cone_names, self.cone_margins)
                if m > self.tol]

    @property
    def passed(self):
        return self.eq_violation <= self.tol and self.worst_margin <= self.tol

    def summary(self):
        status = "feasible" if self.passed else "infeasible"
        msg = (f"{status}: equality violation {self.eq_violation:.3e}, "
               f"worst cone margin {self.worst_margin:.3e}")
        if self.violated:
            msg += "; violated: " + ", ".join(self.violated)
        return msg


def check_feasible(prog, x, tol=1e-9):
    """Measure how far ``x`` is from satisfying the program's constraints."""
    x = np.asarray(x, dtype=float)
    if x.shape != (prog.n_vars,):
        raise ValueError(
            f"variable vector has length {x.size}, program has {prog.n_vars}")
    eq = float(np.max(np.abs(prog.A @ x - prog.b), initial=0.0))
    margins = []
    for kind, sl in prog.cone_slices():
        block = x[sl]
        if kind == "nonneg":
            margins.append(float(-block.min()))
        else:
            margins.append(float(np.linalg.norm(block[:-1]) - block[-1]))
    return FeasibilityReport(eq, margins, prog.cone_names(), tol)


# serialization -------------------------------------------------------------

def program_to_dict(prog):
    """Plain-data form of a program.

    The equality matrix is stored as ``(row, col, value)`` triplets of its
    nonzero entries.  Each cone is ``{"type": "nonneg"|"soc", "size": k}``;
    a ``"soc"`` block of size k constrains ``||x[0:k-1]|| <= x[k-1]``.
    """
    rows, cols = np.nonzero(prog.A)
    return {
        "format": PROGRAM_FORMAT,
        "version": PROGRAM_VERSION,
        "n_vars": prog.n_vars,
        "objective": prog.c.tolist(),
        "eq_matrix": {
            "shape": list(prog.A.shape),
            "rows": rows.tolist(),
            "cols": cols.tolist(),
            "vals": prog.A[rows, cols].tolist(),
        },
        "eq_rhs": prog.b.tolist(),
        "cones": [{"type": k, "size": s} for k, s in prog.cones],
        "variable_map": prog.variable_map.to_dict(),
    }


def program_from_dict(obj):
    if obj.get("format") != PROGRAM_FORMAT:
        raise ValueError(f"not a {PROGRAM_FORMAT} document")
    if obj.get("version") != PROGRAM_VERSION:
        raise ValueError(f"unsupported version {obj.get('version')!r}")
    eq = obj["eq_matrix"]
    A = np.zeros(tuple(eq["shape"]))
    A[eq["rows"], eq["cols"]] = eq["vals"]
    return ConeProgram(
        c=np.asarray(obj["objective"], dtype=float),
        A=A,
        b=np.asarray(obj["eq_rhs"], dtype=float),
        cones=tuple((c["type"], int(c["size"])) for c in obj["cones"]),
        variable_map=VariableMap.from_dict(obj["variable_map"]),
    )


def program_to_json(prog):
    return json.dumps(program_to_dict(prog))


def program_from_json(text):
    return program_from_dict(json.loads(text))


# adapters ------------------------------------------------------------------

@dataclass
class AdapterResult:
    """Outcome of one adapter call; ``x`` is ``None`` unless it succeeded."""

    status: str
    x: np.ndarray = None
    info: dict = field(default_factory=dict)

    @property
    def ok(self):
        return self.status == "optimal" and self.x is not None


class AdapterError(RuntimeError):
    """The cone solver is unavailable or did not return a usable point."""


def clarabel_adapter(prog, tol=1e-10, max_iter=200):
    """Solve ``prog`` with the Clarabel interior-point solver.

    Clarabel works with ``A x + slack = b, slack in K`` and puts the bound of
    a second-order cone first, so the cone blocks are written as
    ``-x_perm + slack = 0`` with each block rotated accordingly.
    """
    import clarabel
    from scipy import sparse

    n = prog.n_vars
    perm = []
    cones = [clarabel.ZeroConeT(prog.A.shape[0])]
    for kind, sl in prog.cone_slices():
        idx = list(range(sl.start, sl.stop))
        if kind == "nonneg":
            cones.append(clarabel.NonnegativeConeT(len(idx)))
        else:
            idx = [idx[-1]] + idx[:-1]
            cones.append(clarabel.SecondOrderConeT(len(idx)))
        perm.extend(idx)
    sel = sparse.csc_matrix(
        (-np.ones(n), (np.arange(n), np.asarray(perm))), shape=(n, n))
    A = sparse.vstack([sparse.csc_matrix(prog.A), sel]).tocsc()
    b = np.concatenate([prog.b, np.zeros(n)])
    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.tol_gap_abs = tol
    settings.tol_gap_rel = tol
    settings.tol_feas = tol
    settings.max_iter = max_iter
    solver = clarabel.DefaultSolver(
        sparse.csc_matrix((n, n)), prog.c, A, b, cones, settings)
    sol = solver.solve()
    status = str(sol.status)
    info = {"solver": "clarabel", "status": status,
            "iterations": int(sol.iterations)}
    if status in ("Solved", "AlmostSolved"):
        return AdapterResult("optimal", np.asarray(sol.x), info)
    return AdapterResult("failed", None, info)


def executable_adapter(path, timeout=600):
    """Adapter that runs ``path IN.json OUT.json`` out of process.

    ``IN.json`` holds :func:`program_to_dict`; the executable must write
    ``{"status": "optimal", "x": [...]}`` (any other status is a failure).
    """
    def run(prog):
        with tempfile.TemporaryDirectory() as tmp:
            src = os.path.join(tmp, "program.json")
            dst = os.path.join(tmp, "solution.json")
            with open(src, "w") as fh:
                json.dump(program_to_dict(prog), fh)
            proc = subprocess.run([path, src, dst], capture_output=True,
                                  text=True, timeout=timeout)
            if proc.returncode != 0:
                return AdapterResult("failed", None, {
                    "returncode": proc.returncode, "stderr": proc.stderr})
            with open(dst) as fh:
                out = json.load(fh)
        x = out.get("x")
        return AdapterResult(out.get("status", "failed"),
                             None if x is None else np.asarray(x, dtype=float),
                             {k: v for k, v in out.items() if k != "x"})
    return run


BUILTIN_ADAPTERS = {"clarabel": clarabel_adapter}


def resolve_adapter(spec=None):
    """Turn an adapter spec into a callable.

    ``spec`` may be a callable, a built-in name (``"clarabel"``), an
    importable ``"module:attr"`` or the path of an executable.  ``None``
    reads ``MSSO_CONE_ADAPTER``.
    """
    if callable(spec):
        return spec
    if spec is None:
        spec = os.environ.get(ADAPTER_ENV)
        if not spec:
            raise AdapterError(
                f"cone adapter missing: pass one explicitly or set {ADAPTER_ENV}")
    if spec in BUILTIN_ADAPTERS:
        return BUILTIN_ADAPTERS[spec]
    if os.path.isfile(spec) and os.access(spec, os.X_OK):
        return executable_adapter(spec)
    if ":" in spec:
        module, _, attr = spec.partition(":")
        try:
            return getattr(importlib.import_module(module), attr)
        except (ImportError, AttributeError) as exc:
            raise AdapterError(f"cone adapter {spec!r} not importable: {exc}")
    raise AdapterError(f"cone adapter {spec!r} not found")


def adapter_available(spec=None):
    try:
        resolve_adapter(spec)
    except AdapterError:
        return False
    return True


def solve_socp(problem, lam, adapter=None, feas_tol=1e-6):
    """Minimise the relaxed objective through the cone program.

    Returns ``(G, report)`` like the other relaxation solvers.  The adapter's
    point is checked with :func:`check_feasible` at ``feas_tol`` scaled by
    ``1 + ||d||^2``.
    """
    run = resolve_adapter(adapter)
    start = time.perf_counter()
    prog = build_socp(problem, lam)
    result = run(prog)
    if not isinstance(result, AdapterResult):
        result = AdapterResult("optimal", np.asarray(result, dtype=float))
    if not result.ok:
        raise AdapterError(f"cone solver failed: {result.info}")
    scale = 1.0 + float(np.vdot(problem.d, problem.d).real)
    feas = check_feasible(prog, result.x, tol=feas_tol * scale)
    if not feas.passed:
        raise AdapterError("cone solver returned an infeasible point: "
                           + feas.summary())
    G = extract_solution(prog, result.x)
    f = objective(problem, G, lam)
    report = SolveReport("socp", [f], iterations=int(result.info.get(
        "iterations", 1)), converged=True,
        wall_time=time.perf_counter() - start, lam=lam)
    return G, report
