"""Command-line front end: ``starris run|validate|list-experiments``.

Exit status is 0 on success, 2 when the scenario fails validation and 3 when
the computation itself fails.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from .errors import StarRisError
from .experiments import run_experiment
from .fileio import atomic_write
from .scenario import EXPERIMENTS, ScenarioInvalid, parse_scenario

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_RUNTIME = 3


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="starris", description="RIS and STAR-RIS channel experiments.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a scenario file and write its outputs")
    run.add_argument("scenario")
    run.add_argument("--out", default=".", help="output directory (default: current directory)")
    run.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    run.add_argument("--quadrature-density", type=float, default=None, metavar="SAMPLES_PER_WAVELENGTH",
                     help="override the quadrature density")
    run.add_argument("--beta-magnitude", type=float, default=None, metavar="VALUE",
                     help="override the magnitude of the Green's-function prefactor")
    val = sub.add_parser("validate", help="check a scenario file without running it")
    val.add_argument("scenario")
    sub.add_parser("list-experiments", help="list the experiment kinds a scenario may name")
    return ap


def _load(path, args=None):
    cfg = parse_scenario(path)
    if args is not None:
        cfg = cfg.with_overrides(args.seed, args.quadrature_density, args.beta_magnitude)
    return cfg


def _report_invalid(path, exc: ScenarioInvalid):
    print(f"{path}: {len(exc.issues)} problem(s)", file=sys.stderr)
    for issue in exc.issues:
        print(f"  {issue}", file=sys.stderr)


def cmd_run(args) -> int:
    try:
        cfg = _load(args.scenario, args)
    except ScenarioInvalid as exc:
        _report_invalid(args.scenario, exc)
        return EXIT_INVALID
    except OSError as exc:
        print(f"{args.scenario}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        files = run_experiment(cfg)
    except StarRisError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_RUNTIME
    try:
        os.makedirs(args.out, exist_ok=True)
        for name, text in files:
            atomic_write(os.path.join(args.out, name), text)
        manifest = {
            "experiment": cfg.experiment,
            "scenario": os.path.basename(cfg.source),
            "config_sha256": cfg.config_hash,
            "seed": cfg.seed,
            "samples_per_wavelength": cfg.samples_per_wavelength,
            "beta_magnitude": cfg.beta_magnitude,
            "version": __version__,
            "outputs": [name for name, _ in files],
        }
        atomic_write(os.path.join(args.out, "run-manifest.json"), json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        print(f"cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for name, _ in files:
        print(os.path.join(args.out, name))
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        cfg = _load(args.scenario)
    except ScenarioInvalid as exc:
        _report_invalid(args.scenario, exc)
        return EXIT_INVALID
    except OSError as exc:
        print(f"{args.scenario}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    print(f"{args.scenario}: ok ({cfg.experiment})")
    return EXIT_OK


def cmd_list(_args) -> int:
    width = max(len(k) for k in EXPERIMENTS)
    for name, desc in EXPERIMENTS.items():
        print(f"{name:<{width}}  {desc}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"run": cmd_run, "validate": cmd_validate, "list-experiments": cmd_list}[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
