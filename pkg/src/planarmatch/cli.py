"""Command-line entry point.

    planarmatch solve max-size   --input inst.csv --L 2 [--witness w.csv]
    planarmatch solve min-weight --input inst.csv --tau 3 [--witness w.csv]
    planarmatch oracle-check --n-max 4 --trials 200 --seed 1 [--out dir]
    planarmatch experiment --config run.json --out results/ [--threads 4]

Exit codes: 0 success, 1 internal error (including oracle mismatches and
violated deterministic bounds), 2 invalid input or config.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import jsonschema

from . import experiments as ex
from . import oracle
from .bounds import write_reports_csv, write_reports_jsonl
from .core import read_instance, write_witness
from .errors import ConfigError, NoTrials, PlanarMatchError
from .solvers import max_size_planar, min_weight_planar
from .stochastic import EdgeProbabilityModel, WeightDistribution

log = logging.getLogger("planarmatch")

EXIT_OK, EXIT_INTERNAL, EXIT_INVALID = 0, 1, 2

_int_list = {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1}
_num_list = {"type": "array", "items": {"type": "number"}, "minItems": 1}

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["experiment", "master_seed"],
    "properties": {
        "experiment": {"enum": ["theorem21", "theorem31", "theta", "appendix", "chernoff",
                                "saturation", "superadd"]},
        "master_seed": {"type": "integer"},
        "trials": {"type": "integer"},
        "n": {"type": "integer", "minimum": 1},
        "n_grid": _int_list,
        "L": {"type": "integer", "minimum": 0},
        "tau": {"type": "integer", "minimum": 1},
        "tau_grid": _int_list,
        "rho": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "rho_grid": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0,
                                                "maximum": 1}, "minItems": 1},
        "p": {"type": "number", "minimum": 0, "maximum": 1},
        "states": {"type": "object", "required": ["kind"]},
        "weights": {"type": "object", "required": ["family"]},
        "slack_sigma": {"type": "number", "minimum": 0},
        "r_grid": _int_list,
        "p_grid": _num_list,
        "gamma_grid": _num_list,
        "configs": {"oneOf": [
            {"type": "integer", "minimum": 1},
            {"type": "array", "items": {"type": "array", "minItems": 4, "maxItems": 4}},
        ]},
        "min_edge_r": _int_list,
        "slope_tolerance": {"type": "number", "exclusiveMinimum": 0},
        "stability_factor": {"type": "number", "exclusiveMinimum": 1},
        "conflict_graph": {"type": "boolean"},
    },
}

REQUIRED_KEYS = {
    "theorem21": ("n", "L", "states", "trials"),
    "theorem31": ("n_grid", "weights", "trials"),
    "theta": ("rho_grid", "n_grid", "weights", "trials"),
    "appendix": ("n", "p", "trials"),
    "chernoff": ("r_grid", "p_grid", "gamma_grid"),
    "saturation": ("n", "tau_grid", "weights", "trials"),
    "superadd": ("configs", "weights", "trials"),
}


def package_version() -> str:
    try:
        return version("planarmatch")
    except PackageNotFoundError:
        return "0+unknown"


def load_config(path: str | Path) -> dict:
    try:
        config = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    try:
        jsonschema.validate(config, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"{path}: {exc.message}") from None
    missing = [k for k in REQUIRED_KEYS[config["experiment"]] if k not in config]
    if missing:
        raise ConfigError(f"{path}: experiment {config['experiment']!r} needs {missing}")
    if "trials" in config and config["trials"] < 1:
        raise NoTrials(f"{path}: trials must be at least 1")
    if config["experiment"] == "theorem31" and "rho" not in config and "tau" not in config:
        raise ConfigError(f"{path}: theorem31 needs 'rho' or 'tau'")
    return config


def run_experiment(config: dict, threads: int, base_dir: Path) -> ex.StudyResult:
    kind = config["experiment"]
    seed = config["master_seed"]
    trials = config.get("trials", 0)
    slack = float(config.get("slack_sigma", ex.DEFAULT_SLACK))
    dist = WeightDistribution.from_spec(config["weights"]) if "weights" in config else None
    if kind == "theorem21":
        model = EdgeProbabilityModel.from_spec(config["states"], config["n"], base_dir)
        return ex.theorem21_study(model, config["L"], trials, seed, threads, slack,
                                  config.get("conflict_graph", True))
    if kind == "theorem31":
        return ex.theorem31_study(config["n_grid"], dist, trials, seed, rho=config.get("rho"),
                                  tau=config.get("tau"), threads=threads,
                                  stability_factor=config.get("stability_factor", 2.0))
    if kind == "theta":
        return ex.theta_study(config["rho_grid"], config["n_grid"], dist, trials, seed,
                              threads, slack)
    if kind == "appendix":
        return ex.appendix_study(config["n"], config["p"], trials, seed, threads, slack)
    if kind == "chernoff":
        return ex.chernoff_study(config["r_grid"], config["p_grid"], config["gamma_grid"],
                                 trials, seed)
    if kind == "saturation":
        return ex.saturation_study(config["n"], config["tau_grid"], dist, trials, seed, threads,
                                   config.get("min_edge_r", ()),
                                   config.get("slope_tolerance", 0.4))
    configs = config["configs"]
    if isinstance(configs, int):
        configs = ex.random_superadditivity_configs(configs, seed)
    else:
        configs = [(int(a), int(b), float(c), float(d)) for a, b, c, d in configs]
    return ex.superadd_study(configs, dist, trials, seed, threads, slack)


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, float) else str(v)


def write_outputs(result: ex.StudyResult, config: dict, out: Path) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    files = {}
    with open(out / "results.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["point", "statistic", "value"])
        for point, stat, value in result.rows:
            w.writerow([point, stat, _fmt(value)])
    files["results"] = "results.csv"
    if result.trial_rows:
        with open(out / "trials.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(result.trial_header)
            for row in result.trial_rows:
                w.writerow([_fmt(v) for v in row])
        files["trials"] = "trials.csv"
    write_reports_csv(result.reports, out / "bounds.csv")
    write_reports_jsonl(result.reports, out / "bounds.jsonl")
    files["bounds_csv"] = "bounds.csv"
    files["bounds_jsonl"] = "bounds.jsonl"
    digests = {name: hashlib.sha256((out / f).read_bytes()).hexdigest()
               for name, f in files.items()}
    manifest = {
        "tool": "planarmatch",
        "version": package_version(),
        "experiment": config["experiment"],
        "master_seed": config["master_seed"],
        "config": config,
        "files": files,
        "sha256": digests,
        "rerun": "planarmatch experiment --config <this manifest's config saved as JSON> --out <dir>",
        "deterministic_violations": sum(r.violated and r.deterministic for r in result.reports),
        "probabilistic_failures": sum(r.violated and not r.deterministic for r in result.reports),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


# --------------------------------------------------------------- commands


def cmd_solve(args) -> int:
    inst = read_instance(args.input)
    if args.problem == "max-size":
        if inst.states is None:
            raise PlanarMatchError("max-size needs a states instance")
        res = max_size_planar(inst, args.L)
        print(res.size)
    else:
        if inst.weights is None:
            raise PlanarMatchError("min-weight needs a weights instance")
        res = min_weight_planar(inst, args.tau)
        print(repr(res.weight))
    if args.witness:
        write_witness(res.witness, args.witness)
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    if not 1 <= args.n_max <= 8:
        raise PlanarMatchError("--n-max must be between 1 and 8")
    if args.trials < 0:
        raise PlanarMatchError("--trials must be nonnegative")
    mismatches = oracle.oracle_check(args.n_max, args.trials, args.seed,
                                     max_size=max_size_planar, min_weight=min_weight_planar,
                                     progress=log.info)
    if mismatches:
        oracle.dump_mismatches(mismatches, args.out)
        print(f"{len(mismatches)} mismatches; reproducers in {args.out}")
        return EXIT_INTERNAL
    print("0 mismatches")
    return EXIT_OK


def cmd_experiment(args) -> int:
    config = load_config(args.config)
    threads = args.threads or ex.default_threads()
    result = run_experiment(config, threads, Path(args.config).resolve().parent)
    manifest = write_outputs(result, config, Path(args.out))
    for r in result.reports:
        if r.violated:
            tag = "VIOLATED" if r.deterministic else "warning"
            print(f"{tag}: {r.bound_id} lhs={r.lhs!r} rhs={r.rhs!r} {json.dumps(r.params, sort_keys=True)}",
                  file=sys.stderr)
    print(f"{len(result.reports)} bound reports, "
          f"{manifest['deterministic_violations']} deterministic violations, "
          f"{manifest['probabilistic_failures']} warnings; outputs in {args.out}")
    return EXIT_INTERNAL if manifest["deterministic_violations"] else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="planarmatch", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="solve one instance file")
    solve_sub = solve.add_subparsers(dest="problem", required=True)
    ms = solve_sub.add_parser("max-size", help="maximum L-constrained planar matching")
    ms.add_argument("--input", required=True)
    ms.add_argument("--L", type=int, required=True)
    ms.add_argument("--witness")
    mw = solve_sub.add_parser("min-weight", help="minimum weight planar matching with >= tau edges")
    mw.add_argument("--input", required=True)
    mw.add_argument("--tau", type=int, required=True)
    mw.add_argument("--witness")
    for p in (ms, mw):
        p.set_defaults(func=cmd_solve)

    oc = sub.add_parser("oracle-check", help="compare solvers with brute force")
    oc.add_argument("--n-max", type=int, required=True)
    oc.add_argument("--trials", type=int, default=100)
    oc.add_argument("--seed", type=int, default=0)
    oc.add_argument("--out", default="oracle-mismatches")
    oc.set_defaults(func=cmd_oracle_check)

    exp = sub.add_parser("experiment", help="run a Monte Carlo experiment from a JSON config")
    exp.add_argument("--config", required=True)
    exp.add_argument("--out", required=True)
    exp.add_argument("--threads", type=int, default=None,
                     help="worker cap (default $PLANARMATCH_THREADS or CPU count)")
    exp.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (PlanarMatchError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception:
        log.exception("internal error")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
