"""Command-line front end: ``msso {solve,noiseless,noisy,mri,verify}``.

Every option can also come from a JSON object passed with ``--config``;
its keys are the option names with dashes replaced by underscores, and
options given on the command line take precedence.  Exit status is 0 only
when all requested runs finished and every written file re-reads cleanly.
"""

import argparse
import csv
import json
import os
import sys

import numpy as np

from .cone import ADAPTER_ENV, AdapterError, resolve_adapter
from .convex import RelaxParams
from .experiments import (CSV_COLUMNS, DEFAULT_ALGORITHMS, MriConfig,
                          RecoveryConfig,
                          build_mri_scene, gnuplot_script,
                          load_noisy_lambdas, manifest, rows_to_csv,
                          run_pulse_design, run_recovery_experiment)
from .problem import ProblemFormatError, load_problem, objective, profile_of
from .solvers import ALGORITHMS, is_greedy, run_solver


class CliError(Exception):
    """A user-facing failure; the message is printed and the exit is 2."""


# argument helpers ------------------------------------------------------------

def parse_grid(text):
    """``"a:b:n"`` for n points from a to b, or a comma-separated list."""
    if isinstance(text, (list, tuple)):
        return tuple(float(v) for v in text)
    text = str(text).strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise CliError(f"bad lambda grid {text!r}; use start:stop:count")
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 1:
            raise CliError("lambda grid needs at least one point")
        return tuple(float(v) for v in np.linspace(start, stop, count))
    try:
        values = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise CliError(f"bad lambda grid {text!r}") from None
    if not values:
        raise CliError("lambda grid is empty")
    return values


def parse_ints(text):
    if isinstance(text, (list, tuple)):
        return tuple(int(v) for v in text)
    try:
        return tuple(int(v) for v in str(text).split(",") if v.strip())
    except ValueError:
        raise CliError(f"expected comma-separated integers, got {text!r}") \
            from None


def parse_algorithms(text, include_omp=False):
    if text is None:
        algs = list(DEFAULT_ALGORITHMS)
    elif isinstance(text, (list, tuple)):
        algs = list(text)
    else:
        algs = [a.strip() for a in str(text).split(",") if a.strip()]
    for a in algs:
        if a not in ALGORITHMS:
            raise CliError(
                f"unknown algorithm {a!r}; choose from {', '.join(ALGORITHMS)}")
    if include_omp and "omp" not in algs:
        algs.insert(algs.index("mp") + 1 if "mp" in algs else 0, "omp")
    return tuple(algs)


def _merge_config(args, parser_defaults):
    """Fill options not given on the command line from ``--config``."""
    if not getattr(args, "config", None):
        return args
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read config {args.config}: {exc}") from None
    if not isinstance(cfg, dict):
        raise CliError("config file must hold a JSON object")
    aliases = {"lambda": "lam" if hasattr(args, "lam") else "lambda_"}
    for key, value in cfg.items():
        key = aliases.get(key, key.replace("-", "_"))
        if not hasattr(args, key):
            raise CliError(f"unknown config key {key!r}")
        if getattr(args, key) == parser_defaults.get(key):
            setattr(args, key, value)
    return args


def _prepare_out(path):
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create output directory {path}: {exc}") \
            from None
    if not os.access(path, os.W_OK):
        raise CliError(f"output directory {path} is not writable")
    return path


def _write(path, text):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def validate_rows_csv(path):
    """Re-read an experiment CSV and check its schema."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != CSV_COLUMNS:
            raise CliError(f"{path}: unexpected header {header}")
        for i, row in enumerate(reader, start=2):
            if len(row) != len(CSV_COLUMNS):
                raise CliError(f"{path}: line {i} has {len(row)} fields")
            float(row[-1])


def validate_json(path):
    with open(path) as fh:
        json.load(fh)


# solve -----------------------------------------------------------------------

def solution_csv(G):
    lines = ["row,system,real,imag"]
    for n in range(G.shape[0]):
        for p in range(G.shape[1]):
            z = complex(G[n, p])
            lines.append(f"{n + 1},{p + 1},{z.real!r},{z.imag!r}")
    return "\n".join(lines) + "\n"


def cmd_solve(args):
    try:
        problem = load_problem(args.problem)
    except ProblemFormatError as exc:
        raise CliError(f"{args.problem}: {exc}") from None
    except OSError as exc:
        raise CliError(f"cannot read {args.problem}: {exc}") from None
    alg = parse_algorithms(args.alg)
    if len(alg) != 1:
        raise CliError("solve takes exactly one --alg")
    alg = alg[0]
    if is_greedy(alg) and args.k is None:
        raise CliError(f"{alg} needs --k")
    adapter = None
    if alg == "socp":
        try:
            adapter = resolve_adapter(args.adapter)
        except AdapterError as exc:
            raise CliError(f"adapter missing: {exc}") from None
    params = RelaxParams(lam=float(args.lam), max_outer=args.max_outer)
    try:
        G, report = run_solver(problem, alg, K=args.k, params=params,
                               adapter=adapter)
    except AdapterError as exc:
        raise CliError(str(exc)) from None
    if is_greedy(alg):
        profile = report.selected
    else:
        profile = profile_of(G, args.k if args.k else problem.N)

    out = _prepare_out(args.out)
    report_obj = report.to_dict()
    report_obj["final_objective"] = objective(
        problem, G, 0.0 if is_greedy(alg) else float(args.lam))
    files = {
        "solution.csv": solution_csv(G),
        "report.json": json.dumps(report_obj, indent=2) + "\n",
        "profile.json": json.dumps({"K": args.k, "indices": profile.one_based()})
        + "\n",
    }
    for name, text in files.items():
        _write(os.path.join(out, name), text)
    validate_json(os.path.join(out, "report.json"))
    validate_json(os.path.join(out, "profile.json"))
    print(f"{alg}: objective {report_obj['final_objective']:.6g}, "
          f"support {profile.one_based()}, written to {out}")
    return 0


# experiments -----------------------------------------------------------------

def _emit(args, experiment, rows, config, metric, x_column):
    out = _prepare_out(args.out)
    text = rows_to_csv(rows)
    if args.format == "csv":
        data_path = os.path.join(out, f"{experiment}.csv")
        _write(data_path, text)
        validate_rows_csv(data_path)
    else:
        data_path = os.path.join(out, f"{experiment}.json")
        payload = [dict(zip(CSV_COLUMNS, r.values())) for r in rows]
        _write(data_path, json.dumps(payload, indent=1) + "\n")
        validate_json(data_path)
    man_path = os.path.join(out, f"{experiment}_manifest.json")
    _write(man_path, json.dumps(manifest(experiment, config, args.seed, text),
                                indent=2) + "\n")
    validate_json(man_path)
    if args.gnuplot and args.format == "csv":
        trial = "0" if experiment == "mri" else "all"
        _write(os.path.join(out, f"{experiment}.gp"),
               gnuplot_script(f"{experiment}.csv", metric, x_column,
                              experiment, trial=trial))
    print(f"{experiment}: {len(rows)} rows written to {data_path}")
    return 0


def _relax_params(args):
    return RelaxParams(max_outer=args.max_outer)


def _adapter_for(algs, args):
    if "socp" not in algs:
        return None
    try:
        resolve_adapter(args.adapter)
    except AdapterError as exc:
        raise CliError(f"adapter missing: {exc}") from None
    return args.adapter or os.environ.get(ADAPTER_ENV)


def cmd_noiseless(args):
    algs = parse_algorithms(args.alg, args.include_omp)
    cfg = RecoveryConfig(
        experiment="noiseless", N=args.N, M_values=parse_ints(args.M),
        P_values=parse_ints(args.P), K=args.k or 3, trials=args.trials,
        algorithms=algs, lambda_grid=parse_grid(args.lambda_grid),
        params=_relax_params(args), adapter=_adapter_for(algs, args))
    try:
        cfg.validate()
    except ValueError as exc:
        raise CliError(str(exc)) from None
    rows = run_recovery_experiment(cfg, base_seed=args.seed, jobs=args.jobs)
    return _emit(args, "noiseless", rows, cfg.to_dict(), "recovery", "M")


def cmd_noisy(args):
    algs = parse_algorithms(args.alg, args.include_omp)
    table = load_noisy_lambdas(args.lambdas_file) if args.lambda_ is None \
        else None
    cfg = RecoveryConfig(
        experiment="noisy", N=args.N, M=args.M, P=args.P,
        snr_values=tuple(float(v) if float(v) != int(float(v)) else int(
            float(v)) for v in parse_grid(args.snr)),
        K_values=parse_ints(args.K), trials=args.trials, algorithms=algs,
        noisy_lambdas=table, fixed_lambda=args.lambda_,
        params=_relax_params(args), adapter=_adapter_for(algs, args))
    try:
        cfg.validate()
        rows = run_recovery_experiment(cfg, base_seed=args.seed,
                                       jobs=args.jobs)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    return _emit(args, "noisy", rows, cfg.to_dict(), "recovery", "snr_db")


def cmd_mri(args):
    algs = parse_algorithms(args.alg, args.include_omp)
    try:
        scene_cfg = MriConfig(fox_diameter=args.fox_diameter, P=args.P)
        scene = build_mri_scene(scene_cfg)
        K_values = tuple(range(1, args.k_max + 1))
        rows = run_pulse_design(
            scene, algorithms=algs, K_values=K_values,
            lambda_grid=parse_grid(args.lambda_grid),
            params=_relax_params(args), adapter=_adapter_for(algs, args),
            jobs=args.jobs, include_fourier=not args.no_fourier)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    config = {"scene": {k: float(v) if isinstance(v, float) else v
                        for k, v in scene_cfg.__dict__.items()},
              "algorithms": list(algs), "k_max": args.k_max,
              "lambda_grid": list(parse_grid(args.lambda_grid)),
              "max_outer": args.max_outer, "M": scene.M, "N": scene.N}
    return _emit(args, "mri", rows, config, "l2_error", "K")


def cmd_verify(args):
    from .selftest import run_selftest
    results = run_selftest(adapter=args.adapter)
    labels = {True: "PASS", False: "FAIL", None: "SKIP"}
    for name, ok, detail in results:
        print(f"{labels[ok]}  {name}: {detail}")
    failed = sum(ok is False for _, ok, _ in results)
    ran = sum(ok is not None for _, ok, _ in results)
    print(f"{ran - failed}/{ran} checks passed"
          + (f", {len(results) - ran} skipped" if ran < len(results) else ""))
    return 0 if failed == 0 else 1


# parser ------------------------------------------------------------------------

def _common(p, seed=True):
    p.add_argument("--config", help="JSON file with option values")
    p.add_argument("--out", default="msso-out", help="output directory")
    p.add_argument("--alg", help="comma-separated algorithm names")
    p.add_argument("--k", type=int, help="sparsity level K")
    p.add_argument("--max-outer", type=int, default=500,
                   help="outer iteration cap of the relaxation solvers")
    p.add_argument("--adapter",
                   help=f"cone solver for socp (default: ${ADAPTER_ENV})")
    if seed:
        p.add_argument("--seed", type=int, default=0, help="base seed")
        p.add_argument("--jobs", type=int, default=1, help="worker processes")
        p.add_argument("--format", choices=("csv", "json"), default="csv",
                       help="result table format")
        p.add_argument("--include-omp", action="store_true",
                       help="add OMP to the algorithm set")
        p.add_argument("--gnuplot", action="store_true",
                       help="also write a gnuplot script")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="msso", description="Simultaneous sparse approximation tools")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one serialized problem")
    p.add_argument("problem", help="problem JSON file")
    _common(p, seed=False)
    p.add_argument("--lambda", dest="lam", type=float, default=0.0)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("noiseless", help="noiseless recovery experiment")
    _common(p)
    p.add_argument("--N", type=int, default=30, help="candidate rows")
    p.add_argument("--M", default="10,15,20,25,30,35,40",
                   help="comma-separated observation counts")
    p.add_argument("--P", default="1,2,3,4,5,6,7,8",
                   help="comma-separated system counts")
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--lambda-grid", default="0:2:70",
                   help="start:stop:count or a comma-separated list")
    p.set_defaults(func=cmd_noiseless)

    p = sub.add_parser("noisy", help="noisy recovery experiment")
    _common(p)
    p.add_argument("--N", type=int, default=30, help="candidate rows")
    p.add_argument("--M", type=int, default=25, help="observations")
    p.add_argument("--P", type=int, default=3, help="systems")
    p.add_argument("--snr", default="-10,-5,0,5,10,15,20,25,30",
                   help="comma-separated SNR values in dB")
    p.add_argument("--K", default="1,3,5,7,9",
                   help="comma-separated sparsity levels")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--lambda", dest="lambda_", type=float,
                   help="one lambda for every cell instead of the tuned table")
    p.add_argument("--lambdas-file", help="JSON table of tuned lambdas")
    p.set_defaults(func=cmd_noisy)

    p = sub.add_parser("mri", help="MRI pulse-design benchmark")
    _common(p)
    p.add_argument("--k-max", type=int, default=20,
                   help="largest number of k-space points")
    p.add_argument("--lambda-grid", default="0:0.25:14",
                   help="start:stop:count or a comma-separated list")
    p.add_argument("--fox-diameter", type=float, default=17.0,
                   help="field of excitation diameter in cm")
    p.add_argument("--P", type=int, default=8, help="transmit coils")
    p.add_argument("--no-fourier", action="store_true",
                   help="omit the Fourier baseline rows")
    p.set_defaults(func=cmd_mri)

    p = sub.add_parser("verify", help="self-test on bundled fixtures")
    p.add_argument("--adapter",
                   help=f"cone solver to include (default: ${ADAPTER_ENV})")
    p.add_argument("--config", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    defaults = {a.dest: a.default for a in sub._actions}
    try:
        args = _merge_config(args, defaults)
        return args.func(args)
    except CliError as exc:
        print(f"msso {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
