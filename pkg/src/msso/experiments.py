"""Monte Carlo recovery experiments and the MRI pulse-design benchmark.

Randomness
----------
Every trial owns a 64-bit seed obtained from
``SeedSequence(base_seed, spawn_key=(experiment_id, *cell_keys, trial))``
where string or negative cell values are first mapped to integers with
CRC-32 of their ``repr``.  The seed drives a Philox counter-based generator,
so a trial's data do not depend on which other trials run, in what order,
or in which worker process.

Output rows
-----------
Results are flat :class:`Row` records with the CSV columns ``experiment,
algorithm, M, N, P, K, snr_db, lambda, trial, metric_name, metric_value``.
Per-trial rows come first, ordered by cell, algorithm and trial; the
per-cell means follow with ``trial == "all"``.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
import csv
import hashlib
import io
import json
import platform
import zlib
from importlib import resources

import numpy as np
from threadpoolctl import threadpool_limits

from .convex import RelaxParams
from .problem import (MssoProblem, SparsityProfile, profile_of,
                      recovery_fraction, retune)
from .solvers import ALGORITHMS, is_greedy, run_solver

EXPERIMENT_IDS = {"noiseless": 1, "noisy": 2, "mri": 3, "noisy-tune": 4}
DEFAULT_ALGORITHMS = ("mp", "lsmp", "irls", "rbrs", "cbcs")
NOISELESS_GRID = tuple(np.linspace(0.0, 2.0, 70))
MRI_GRID = tuple(np.linspace(0.0, 0.25, 14))
CSV_COLUMNS = ("experiment", "algorithm", "M", "N", "P", "K", "snr_db",
               "lambda", "trial", "metric_name", "metric_value")


# seeds ---------------------------------------------------------------------

def _key_int(value):
    if isinstance(value, (int, np.integer)) and value >= 0:
        return int(value)
    return zlib.crc32(repr(value).encode())


def trial_seed(base_seed, experiment, cell=(), trial=0):
    """Derived 64-bit seed of one trial; see the module docstring."""
    key = (EXPERIMENT_IDS[experiment],) + tuple(_key_int(c) for c in cell) + (
        int(trial),)
    ss = np.random.SeedSequence(int(base_seed), spawn_key=key)
    return int(ss.generate_state(1, np.uint64)[0])


def make_rng(seed, stream=0):
    """Philox generator for one numbered stream of a trial seed."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.Philox(ss))


# trial generation ----------------------------------------------------------

@dataclass(frozen=True)
class TrialSpec:
    """Dimensions, seed and algorithm settings of one random trial."""

    N: int
    M: int
    P: int
    K: int
    seed: int = 0
    snr_db: float = None
    algorithms: tuple = DEFAULT_ALGORITHMS
    lambda_grid: tuple = NOISELESS_GRID

    def __post_init__(self):
        for name in ("N", "M", "P"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if not 1 <= self.K <= self.N:
            raise ValueError(f"K must lie in [1, N], got K={self.K}")
        for alg in self.algorithms:
            if alg not in ALGORITHMS:
                raise ValueError(f"unknown algorithm {alg!r}")
        if len(self.lambda_grid) == 0:
            raise ValueError("lambda grid is empty")


def gen_noiseless_trial(spec):
    """Planted simultaneously sparse instance.

    Returns
    -------
    problem : MssoProblem
    truth : SparsityProfile
    G : ndarray, shape (N, P)
    """
    rng = make_rng(spec.seed, 0)
    idx = np.sort(rng.choice(spec.N, size=spec.K, replace=False))
    G = np.zeros((spec.N, spec.P))
    G[idx] = rng.standard_normal((spec.K, spec.P))
    F = rng.standard_normal((spec.P, spec.M, spec.N))
    F /= np.linalg.norm(F, axis=1, keepdims=True)
    d = np.einsum("pmn,np->m", F, G)
    return MssoProblem(d, F), SparsityProfile.of(idx), G


def noise_variance(d_true, snr_db):
    d_true = np.asarray(d_true)
    energy = float(np.vdot(d_true, d_true).real)
    if energy == 0.0:
        raise ValueError("d_true is zero; the SNR is undefined")
    return energy / d_true.shape[0] * 10.0 ** (-snr_db / 10.0)


def add_noise(d_true, snr_db, seed):
    """``d_true`` plus white Gaussian noise at the requested SNR (dB).

    ``seed`` may be an integer or a ``numpy.random.Generator``.  An infinite
    SNR returns a copy of ``d_true``.
    """
    d_true = np.asarray(d_true, dtype=float)
    sigma2 = noise_variance(d_true, snr_db)
    if sigma2 == 0.0:
        return d_true.copy()
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed, 1)
    return d_true + np.sqrt(sigma2) * rng.standard_normal(d_true.shape)


def mse(est, truth):
    """Mean squared entry error ``||est - truth||_F^2 / (N P)``."""
    est, truth = np.asarray(est), np.asarray(truth)
    if est.shape != truth.shape:
        raise ValueError(f"shape mismatch: {est.shape} vs {truth.shape}")
    return float(np.sum(np.abs(est - truth) ** 2) / truth.size)


# single-trial scoring ------------------------------------------------------

def estimated_profile(algorithm, G, report, K):
    """Greedy runs keep their selections; relaxations take the top-K rows."""
    if is_greedy(algorithm):
        return report.selected
    return profile_of(G, K)


def lambda_oracle_sweep(problem, algorithm, grid, truth, params=None,
                        adapter=None, stop_at_full=True):
    """Best recovery fraction over a lambda grid.

    Parameters
    ----------
    problem : MssoProblem
    algorithm : str
        A relaxation method.
    grid : sequence of float
    truth : SparsityProfile
        Its size is the K used for ``profile_of``.
    params : RelaxParams, optional
        Template; its ``lam`` is replaced per grid point.
    stop_at_full : bool
        Stop once a grid point recovers the whole profile; later points
        cannot raise the maximum.

    Returns
    -------
    best : float
    best_lam : float
    """
    grid = list(grid)
    if not grid:
        raise ValueError("lambda grid is empty")
    template = params or RelaxParams()
    K = len(truth)
    best, best_lam = -1.0, None
    for lam in grid:
        p = RelaxParams(**{**asdict(template), "lam": float(lam)})
        G, report = run_solver(problem, algorithm, params=p, adapter=adapter)
        frac = recovery_fraction(truth, profile_of(G, K))
        if frac > best:
            best, best_lam = frac, float(lam)
        if stop_at_full and best >= 1.0:
            break
    return best, best_lam


# result rows and CSV -------------------------------------------------------

@dataclass(frozen=True)
class Row:
    experiment: str
    algorithm: str
    M: int
    N: int
    P: int
    K: int
    snr_db: float
    lam: float
    trial: object
    metric_name: str
    metric_value: float

    def values(self):
        return (self.experiment, self.algorithm, self.M, self.N, self.P,
                self.K, self.snr_db, self.lam, self.trial, self.metric_name,
                self.metric_value)


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def rows_to_csv(rows):
    """CSV text with a header; floats use ``repr`` so output is exact."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([_fmt(v) for v in row.values()])
    return buf.getvalue()


def read_csv_rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def mean_rows(rows):
    """One ``trial == "all"`` row per (cell, algorithm, metric)."""
    groups = {}
    for row in rows:
        key = (row.experiment, row.algorithm, row.M, row.N, row.P, row.K,
               row.snr_db, row.metric_name)
        groups.setdefault(key, []).append(row)
    out = []
    for key, members in groups.items():
        lams = {m.lam for m in members}
        lam = lams.pop() if len(lams) == 1 else None
        value = float(np.mean([m.metric_value for m in members]))
        exp, alg, M, N, P, K, snr, name = key
        out.append(Row(exp, alg, M, N, P, K, snr, lam, "all", name, value))
    return out


def manifest(experiment, config, base_seed, rows_csv):
    """Run description written next to a CSV."""
    from . import __version__
    return {
        "experiment": experiment,
        "config": config,
        "base_seed": int(base_seed),
        "msso_version": __version__,
        "numpy_version": np.__version__,
        "python_version": platform.python_version(),
        "csv_sha256": hashlib.sha256(rows_csv.encode()).hexdigest(),
    }


# worker pool ---------------------------------------------------------------

def _call(job):
    fn, args = job
    with threadpool_limits(limits=1):
        return fn(*args)


def map_jobs(fn, arg_list, jobs=1):
    """``[fn(*args) for args in arg_list]``, optionally across processes.

    Results come back in input order whatever the worker count.
    """
    work = [(fn, args) for args in arg_list]
    if jobs is None or jobs <= 1 or len(work) <= 1:
        return [_call(w) for w in work]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_call, work, chunksize=1))


# noiseless recovery --------------------------------------------------------

@dataclass(frozen=True)
class RecoveryConfig:
    """A grid of cells for :func:`run_recovery_experiment`.

    For ``experiment="noiseless"`` the cells are ``(M, P)`` pairs with fixed
    ``K``; for ``"noisy"`` they are ``(snr_db, K)`` pairs with fixed ``M`` and
    ``P`` and one lambda per cell from ``noisy_lambdas``.
    """

    experiment: str = "noiseless"
    N: int = 30
    M_values: tuple = (10, 15, 20, 25, 30, 35, 40)
    P_values: tuple = tuple(range(1, 9))
    K: int = 3
    M: int = 25
    P: int = 3
    snr_values: tuple = (-10, -5, 0, 5, 10, 15, 20, 25, 30)
    K_values: tuple = (1, 3, 5, 7, 9)
    trials: int = 50
    algorithms: tuple = DEFAULT_ALGORITHMS
    lambda_grid: tuple = NOISELESS_GRID
    noisy_lambdas: dict = field(default=None, hash=False, compare=False)
    fixed_lambda: float = None
    params: RelaxParams = field(default_factory=RelaxParams)
    adapter: str = None

    def cells(self):
        if self.experiment == "noiseless":
            return [(M, P) for P in self.P_values for M in self.M_values]
        return [(snr, K) for snr in self.snr_values for K in self.K_values]

    def validate(self):
        if self.experiment not in ("noiseless", "noisy"):
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        for alg in self.algorithms:
            if alg not in ALGORITHMS:
                raise ValueError(f"unknown algorithm {alg!r}")
        for cell in self.cells():
            if self.experiment == "noiseless":
                M, P = cell
                TrialSpec(self.N, M, P, self.K)
            else:
                TrialSpec(self.N, self.M, self.P, cell[1])

    def to_dict(self):
        out = asdict(self)
        out["lambda_grid"] = [float(v) for v in self.lambda_grid]
        out["noisy_lambdas"] = None
        return out


def _noiseless_trial(cfg, base_seed, cell, trial):
    M, P = cell
    seed = trial_seed(base_seed, "noiseless", cell, trial)
    spec = TrialSpec(cfg.N, M, P, cfg.K, seed=seed,
                     algorithms=cfg.algorithms, lambda_grid=cfg.lambda_grid)
    problem, truth, _ = gen_noiseless_trial(spec)
    rows = []
    for alg in cfg.algorithms:
        if is_greedy(alg):
            G, report = run_solver(problem, alg, K=cfg.K)
            frac, lam = recovery_fraction(truth, report.selected), None
        else:
            frac, lam = lambda_oracle_sweep(problem, alg, cfg.lambda_grid,
                                            truth, cfg.params, cfg.adapter)
        rows.append(Row("noiseless", alg, M, cfg.N, P, cfg.K, None, lam,
                        trial, "recovery", float(frac)))
    return rows


def _noisy_trial(cfg, base_seed, cell, trial, lam):
    snr, K = cell
    seed = trial_seed(base_seed, "noisy", cell, trial)
    spec = TrialSpec(cfg.N, cfg.M, cfg.P, K, seed=seed, snr_db=snr,
                     algorithms=cfg.algorithms)
    clean, truth, G_true = gen_noiseless_trial(spec)
    d = add_noise(clean.d, snr, make_rng(seed, 1))
    problem = MssoProblem(d, clean.systems)
    rows = []
    for alg in cfg.algorithms:
        params = RelaxParams(**{**asdict(cfg.params), "lam": lam})
        G, report = run_solver(problem, alg, K=K, params=params,
                               adapter=cfg.adapter)
        est = estimated_profile(alg, G, report, K)
        G_retuned = retune(problem, est) if len(est) else problem.zeros()
        used = None if is_greedy(alg) else lam
        for name, value in (("recovery", recovery_fraction(truth, est)),
                            ("mse", mse(G, G_true)),
                            ("mse_retuned", mse(G_retuned, G_true))):
            rows.append(Row("noisy", alg, cfg.M, cfg.N, cfg.P, K, snr, used,
                            trial, name, float(value)))
    return rows


def run_recovery_experiment(cfg, base_seed=0, jobs=1):
    """Per-trial and per-cell mean rows for a noiseless or noisy grid."""
    cfg.validate()
    cells = cfg.cells()
    if cfg.experiment == "noiseless":
        args = [(cfg, base_seed, cell, t) for cell in cells
                for t in range(cfg.trials)]
        results = map_jobs(_noiseless_trial, args, jobs)
    else:
        lams = {}
        for cell in cells:
            if cfg.fixed_lambda is not None:
                lams[cell] = float(cfg.fixed_lambda)
            else:
                lams[cell] = noisy_lambda(cell[0], cell[1], cfg.noisy_lambdas)
        args = [(cfg, base_seed, cell, t, lams[cell]) for cell in cells
                for t in range(cfg.trials)]
        results = map_jobs(_noisy_trial, args, jobs)
    rows = [r for chunk in results for r in chunk]
    order = {alg: i for i, alg in enumerate(cfg.algorithms)}
    cell_pos = {}
    for r in rows:
        cell = (r.M, r.P) if cfg.experiment == "noiseless" else (r.snr_db, r.K)
        cell_pos.setdefault(cell, len(cell_pos))
    rows.sort(key=lambda r: (
        cell_pos[(r.M, r.P) if cfg.experiment == "noiseless"
                 else (r.snr_db, r.K)], order[r.algorithm], r.trial))
    return rows + mean_rows(rows)


# noisy lambdas ---------------------------------------------------------------

def load_noisy_lambdas(path=None):
    """``{(snr_db, K): lambda}`` from the bundled table or a JSON file."""
    if path is None:
        text = resources.files("msso").joinpath(
            "data/noisy_lambdas.json").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    obj = json.loads(text)
    return {(float(e["snr_db"]), int(e["K"])): float(e["lambda"])
            for e in obj["entries"]}


def noisy_lambda(snr_db, K, table=None):
    table = load_noisy_lambdas() if table is None else table
    try:
        return table[(float(snr_db), int(K))]
    except KeyError:
        raise ValueError(
            f"no tuned lambda for SNR {snr_db} dB and K={K}; "
            "pass one explicitly") from None


def tune_noisy_lambdas(N=30, M=25, P=3, snr_values=(-10, -5, 0, 5, 10, 15,
                       20, 25, 30), K_values=(1, 3, 5, 7, 9), grid=None,
                       observations=3, base_seed=20240601, algorithm="rbrs",
                       jobs=1):
    """Pick one lambda per (SNR, K) by mean recovery on tuning draws.

    The draws use the separate ``"noisy-tune"`` seed family, so they never
    coincide with evaluation trials.  Ties go to the smallest lambda.
    """
    grid = tuple(np.linspace(0.0, 2.0, 41)) if grid is None else tuple(grid)
    args = [(N, M, P, snr, K, grid, observations, base_seed, algorithm)
            for snr in snr_values for K in K_values]
    picks = map_jobs(_tune_cell, args, jobs)
    return [{"snr_db": a[3], "K": a[4], "lambda": lam}
            for a, lam in zip(args, picks)]


def _tune_cell(N, M, P, snr, K, grid, observations, base_seed, algorithm):
    scores = np.zeros(len(grid))
    for t in range(observations):
        seed = trial_seed(base_seed, "noisy-tune", (snr, K), t)
        clean, truth, _ = gen_noiseless_trial(TrialSpec(N, M, P, K, seed=seed))
        problem = MssoProblem(add_noise(clean.d, snr, make_rng(seed, 1)),
                              clean.systems)
        for i, lam in enumerate(grid):
            G, _ = run_solver(problem, algorithm,
                              params=RelaxParams(lam=float(lam)))
            scores[i] += recovery_fraction(truth, profile_of(G, K))
    return float(grid[int(np.argmax(scores))])


# MRI pulse design ------------------------------------------------------------

@dataclass(frozen=True)
class MriConfig:
    """Geometry of the synthetic parallel-excitation scene.

    Lengths are in cm and k-space spacing in cycles/cm.
    """

    fox_diameter: float = 17.0
    spacing: float = 0.8
    grid_size: int = 15
    k_spacing: float = 1.0 / 20.0
    P: int = 8
    gain: float = 1.0
    lobe_width: float = 0.6
    phase_slope: float = 0.05
    rect_width: float = 8.0
    rect_height: float = 4.0
    image_phase_span: float = np.pi / 2

    def validate(self):
        if self.fox_diameter <= 0 or self.spacing <= 0 or self.k_spacing <= 0:
            raise ValueError("diameter and spacings must be positive")
        if self.grid_size < 1 or self.P < 1:
            raise ValueError("grid_size and P must be at least 1")
        if self.lobe_width <= 0 or self.gain == 0:
            raise ValueError("lobe_width must be positive and gain nonzero")
        if self.rect_width <= 0 or self.rect_height <= 0:
            raise ValueError("rectangle sides must be positive")


@dataclass(frozen=True, eq=False)
class MriScene:
    """Sampled scene: positions, k-grid, profiles, Fourier matrix, target.

    ``k`` holds angular frequencies (radians/cm), ``2 pi`` times the grid in
    cycles/cm, so that ``A[m, n] = 1j * gain * exp(1j * r[m] @ k[n])``.
    """

    r: np.ndarray
    k: np.ndarray
    profiles: np.ndarray
    gain: float
    A: np.ndarray
    d: np.ndarray
    radius: float

    @property
    def M(self):
        return self.r.shape[0]

    @property
    def N(self):
        return self.k.shape[0]

    @property
    def origin_index(self):
        return int(np.argmin(np.sum(self.k ** 2, axis=1)))

    def problem(self):
        systems = self.profiles[:, :, None] * self.A[None, :, :]
        return MssoProblem(self.d, systems)


def fourier_matrix(r, k, gain):
    return 1j * gain * np.exp(1j * (r @ k.T))


def build_mri_scene(config=None):
    """Synthetic scene with Gaussian-lobe coil profiles on the FOX rim."""
    cfg = config or MriConfig()
    cfg.validate()
    R = cfg.fox_diameter / 2.0
    n = int(np.floor(R / cfg.spacing))
    axis = cfg.spacing * np.arange(-n, n + 1)
    X, Y = np.meshgrid(axis, axis, indexing="xy")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    r = pts[np.sum(pts ** 2, axis=1) <= R * R + 1e-9]

    half = cfg.grid_size // 2
    cyc = cfg.k_spacing * (np.arange(cfg.grid_size) - half)
    KX, KY = np.meshgrid(cyc, cyc, indexing="xy")
    k = 2.0 * np.pi * np.column_stack([KX.ravel(), KY.ravel()])

    angles = 2.0 * np.pi * np.arange(cfg.P) / cfg.P
    dirs = np.column_stack([np.cos(angles), np.sin(angles)])
    centers = R * dirs
    w = cfg.lobe_width * R
    dist2 = np.sum((r[None, :, :] - centers[:, None, :]) ** 2, axis=2)
    phase = angles[:, None] + cfg.phase_slope * (dirs @ r.T)
    profiles = np.exp(-dist2 / (2.0 * w * w)) * np.exp(1j * phase)

    inside = ((np.abs(r[:, 0]) <= cfg.rect_width / 2)
              & (np.abs(r[:, 1]) <= cfg.rect_height / 2))
    ramp = cfg.image_phase_span * r[:, 0] / cfg.rect_width
    d = np.where(inside, np.exp(1j * ramp), 0.0)
    A = fourier_matrix(r, k, cfg.gain)
    return MriScene(r, k, profiles, cfg.gain, A, d, R)


def fourier_baseline(scene, K):
    """Indices of the K largest ``|A^H d|`` entries, largest first.

    Returned as ``(profile, order)``; ties keep the lower index first.
    """
    if not 1 <= K <= scene.N:
        raise ValueError(f"K must lie in [1, {scene.N}], got {K}")
    coeff = np.abs(scene.A.conj().T @ scene.d)
    order = np.argsort(-coeff, kind="stable")[:K]
    return SparsityProfile.of(order), tuple(int(i) for i in order)


def residual_norm(problem, G):
    r = problem.d - np.einsum("pmn,np->m", problem.systems, G)
    return float(np.linalg.norm(r))


def _retuned_error(problem, profile):
    if len(profile) == 0:
        return float(np.linalg.norm(problem.d))
    return residual_norm(problem, retune(problem, profile))


def _prefix_errors(problem, order, K_values):
    return [_retuned_error(problem, SparsityProfile.of(order[:K]))
            for K in K_values]


def _mri_lambda(problem, algorithm, lam, params, adapter, K_values):
    p = RelaxParams(**{**asdict(params), "lam": float(lam)})
    G, report = run_solver(problem, algorithm, params=p, adapter=adapter)
    errors = [_retuned_error(problem, profile_of(G, K)) for K in K_values]
    return errors, report


def _mri_greedy(problem, algorithm, K_values):
    _, report = run_solver(problem, algorithm, K=max(K_values))
    return _prefix_errors(problem, list(report.order), K_values)


def run_pulse_design(scene, algorithms=("mp", "lsmp", "irls", "rbrs", "cbcs"),
                     K_values=tuple(range(1, 21)), lambda_grid=MRI_GRID,
                     params=None, adapter=None, jobs=1,
                     include_fourier=True, shrink_init="zeros"):
    """Residual norm after retuning, per algorithm and K.

    Greedy methods run once to ``max(K_values)`` and retune each prefix of
    their selection order.  Relaxations are solved once per lambda; every K
    keeps the lambda with the smallest retuned error.  RBRS and CBCS start
    from ``shrink_init``: from the pseudoinverse start their many large,
    cancelling rows take thousands of sweeps to unwind on this system.

    Returns a list of :class:`Row` with ``metric_name == "l2_error"``.
    """
    K_values = tuple(int(K) for K in K_values)
    if not K_values or min(K_values) < 1 or max(K_values) > min(30, scene.N):
        raise ValueError("K values must lie in [1, 30]")
    params = params or RelaxParams(max_outer=500)
    shrink = replace(params, init=shrink_init)
    problem = scene.problem()
    jobs_list, tags = [], []
    for alg in algorithms:
        if is_greedy(alg):
            jobs_list.append((_mri_greedy, (problem, alg, K_values)))
            tags.append((alg, None))
        else:
            for lam in lambda_grid:
                prm = shrink if alg in ("rbrs", "cbcs") else params
                jobs_list.append((_mri_lambda, (problem, alg, lam, prm,
                                                adapter, K_values)))
                tags.append((alg, float(lam)))
    results = map_jobs(_dispatch, jobs_list, jobs)

    best = {}
    for (alg, lam), res in zip(tags, results):
        errors = res if lam is None else res[0]
        if alg not in best:
            best[alg] = [(e, lam) for e in errors]
        else:
            best[alg] = [min(cur, (e, lam), key=lambda t: t[0])
                         for cur, e in zip(best[alg], errors)]
    if include_fourier:
        _, order = fourier_baseline(scene, max(K_values))
        best["fourier"] = [(e, None) for e in
                           _prefix_errors(problem, list(order), K_values)]

    rows = []
    for alg, per_K in best.items():
        for K, (err, lam) in zip(K_values, per_K):
            rows.append(Row("mri", alg, scene.M, scene.N, problem.P, K, None,
                            lam, 0, "l2_error", float(err)))
    return rows


def _dispatch(fn, args):
    return fn(*args)


def gnuplot_script(csv_name, metric, x_column, title, trial="all"):
    """Plain gnuplot script plotting ``metric`` against ``x_column`` per
    algorithm, using the rows of ``csv_name`` whose trial column equals
    ``trial``."""
    col = {name: i + 1 for i, name in enumerate(CSV_COLUMNS)}
    return "\n".join([
        "set datafile separator ','",
        f"set title '{title}'",
        f"set xlabel '{x_column}'",
        f"set ylabel '{metric}'",
        "set key outside",
        f"algs = system(\"awk -F, 'NR>1 && $10==\\\"{metric}\\\" && "
        f"$9==\\\"{trial}\\\" {{print $2}}' {csv_name} | sort -u\")",
        f"plot for [a in algs] '< awk -F, -v A='.a.' \"NR>1 && $2==A && "
        f"$10==\\\"{metric}\\\" && $9==\\\"{trial}\\\"\" {csv_name}' "
        f"using {col[x_column]}:{col['metric_value']} with linespoints "
        "title a",
        "",
    ])
