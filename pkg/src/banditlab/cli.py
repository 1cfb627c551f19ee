"""Command-line front end.

Subcommands
-----------
simulate   run the configured estimator(s) once, write results and manifest
sweep      run the estimator over the configured grid, one CSV row per point
oracle     exact enumeration of a small instance (single behavior)
verify     run an acceptance suite and report one line per check

Exit codes: 0 success, 1 criterion failure (verify), 2 usage/config error,
3 I/O error.  ``BANDITLAB_PARALLELISM`` supplies the default worker count
when ``--parallelism`` is absent.

Output schemas (fixed column orders)
------------------------------------
simulate results.csv:  metric,point,ci_low,ci_high,trials,successes,master_seed
sweep results.csv:     grid_index,<one column per sweep axis>,point,ci_low,
                       ci_high,trials,wall_seconds,master_seed
                       (plus shape_<name> columns with --shapes)
oracle results.csv:    failure_threshold,failure_probability,expected_regret,
                       total_mass
verify report.csv:     criterion,check,observed,comparison,threshold,passed

The simulate CSV carries no timestamps or wall times, so identical
configurations produce byte-identical files; timing lives in manifest.json.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from pathlib import Path

import numba
import numpy as np

from . import __version__, acceptance
from .config import ConfigError, ExperimentConfig, load_config
from .montecarlo import estimate_failure_probability, estimate_regret, sweep
from .oracle import enumerate_exact
from .probtools import theorem_shapes

EXIT_OK = 0
EXIT_CRITERION_FAILURE = 1
EXIT_CONFIG_ERROR = 2
EXIT_IO_ERROR = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="banditlab",
        description="Monte Carlo laboratory for two-armed bandit social learning",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", required=True, help="path to a JSON config file")
        p.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override a config field by dotted path (repeatable)",
        )
        p.add_argument("--out", help="output directory (overrides output.dir)")
        p.add_argument("--seed", type=int, help="master seed (overrides estimator.master_seed)")
        p.add_argument(
            "--parallelism",
            type=int,
            help="worker processes (overrides estimator.parallelism; "
            "default from BANDITLAB_PARALLELISM)",
        )

    add_common(sub.add_parser("simulate", help="run the configured estimator once"))
    p_sweep = sub.add_parser("sweep", help="run the estimator over the configured grid")
    add_common(p_sweep)
    p_sweep.add_argument(
        "--resume",
        action="store_true",
        help="skip grid points already present in the output CSV",
    )
    p_sweep.add_argument(
        "--shapes",
        action="store_true",
        help="join evaluable bound-shape columns onto each row",
    )
    add_common(sub.add_parser("oracle", help="exact enumeration of a small instance"))

    p_verify = sub.add_parser("verify", help="run an acceptance suite")
    p_verify.add_argument("suite", help=f"one of: {', '.join(sorted(acceptance.SUITES))}")
    p_verify.add_argument("--out", help="directory for the machine-readable report")
    return parser


def _load(args: argparse.Namespace) -> ExperimentConfig:
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"estimator.master_seed={args.seed}")
    parallelism = args.parallelism
    if parallelism is None and os.environ.get("BANDITLAB_PARALLELISM"):
        parallelism = int(os.environ["BANDITLAB_PARALLELISM"])
    if parallelism is not None:
        overrides.append(f"estimator.parallelism={parallelism}")
    if args.out is not None:
        overrides.append(f'output.dir="{args.out}"')
    return load_config(args.config, overrides)


def _write_rows(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _write_manifest(config: ExperimentConfig, out_dir: Path, wall: float) -> None:
    manifest = {
        "config_hash": config.config_hash(),
        "master_seed": config.estimator.master_seed,
        "parallelism": config.estimator.parallelism,
        "versions": {
            "banditlab": __version__,
            "numpy": np.__version__,
            "numba": numba.__version__,
            "python": sys.version.split()[0],
        },
        "wall_seconds": wall,
        "command": sys.argv,
        "created_unix": time.time(),
    }
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _maybe_json_mirror(config: ExperimentConfig, out_dir: Path, name: str,
                       header: list[str], rows: list[list]) -> None:
    if config.output.format == "json":
        payload = [dict(zip(header, row)) for row in rows]
        with open(out_dir / f"{name}.json", "w") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")


def cmd_simulate(args: argparse.Namespace) -> int:
    config = _load(args)
    started = time.perf_counter()
    metrics = ["failure", "regret"] if config.metric == "both" else [config.metric]
    rows = []
    for metric in metrics:
        if metric == "failure":
            est = estimate_failure_probability(
                config.instance,
                config.population,
                n=config.estimator.failure_threshold,
                trials=config.estimator.trials,
                master_seed=config.estimator.master_seed,
                parallelism=config.estimator.parallelism,
                ci_level=config.estimator.ci_level,
                early_exit=config.estimator.early_exit,
                backend=config.estimator.backend,
            )
        else:
            est = estimate_regret(
                config.instance,
                config.population,
                trials=config.estimator.trials,
                master_seed=config.estimator.master_seed,
                parallelism=config.estimator.parallelism,
                ci_level=config.estimator.ci_level,
                backend=config.estimator.backend,
            )
        rows.append(
            [
                metric,
                repr(est.point),
                repr(est.ci_low),
                repr(est.ci_high),
                est.trials,
                "" if est.successes is None else est.successes,
                config.estimator.master_seed,
            ]
        )
        print(
            f"{metric}: point={est.point:.6g} ci=({est.ci_low:.6g}, {est.ci_high:.6g}) "
            f"trials={est.trials}"
        )
    out_dir = Path(config.output.directory)
    out_dir.mkdir(parents=True, exist_ok=True)
    header = ["metric", "point", "ci_low", "ci_high", "trials", "successes", "master_seed"]
    _write_rows(out_dir / "results.csv", header, rows)
    _maybe_json_mirror(config, out_dir, "results", header, rows)
    _write_manifest(config, out_dir, time.perf_counter() - started)
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    config = _load(args)
    if config.sweep is None:
        raise ConfigError("sweep: missing sweep block in config")
    out_dir = Path(config.output.directory)
    out_dir.mkdir(parents=True, exist_ok=True)
    out_path = out_dir / "results.csv"

    axis_names = [name for name, _ in config.sweep.axes]
    header = ["grid_index", *axis_names, "point", "ci_low", "ci_high",
              "trials", "wall_seconds", "master_seed"]
    shape_names: list[str] = []
    if args.shapes:
        probe = theorem_shapes(config.instance, eta=0.0)
        shape_names = sorted(probe.shapes)
        header += [f"shape_{name}" for name in shape_names]

    start_index = 0
    existing: list[str] = []
    if args.resume and out_path.exists():
        with open(out_path) as fh:
            existing = fh.read().splitlines()
        start_index = max(0, len(existing) - 1)  # minus header

    started = time.perf_counter()
    rows = sweep(
        config.instance,
        config.population,
        config.sweep,
        config.estimator,
        start_index=start_index,
    )
    out_rows = []
    for row in rows:
        record = [row.index]
        record += [row.params[name] for name in axis_names]
        record += [
            repr(row.estimate.point),
            repr(row.estimate.ci_low),
            repr(row.estimate.ci_high),
            row.estimate.trials,
            f"{row.wall_seconds:.3f}",
            row.seed,
        ]
        if args.shapes:
            from .montecarlo import apply_sweep_point

            inst, pop = apply_sweep_point(config.instance, config.population, row.params)
            eta = row.params.get("eta")
            if eta is None:
                eta = next(
                    (b.eta for b in pop.behaviors if hasattr(b, "eta")), 0.0
                )
            report = theorem_shapes(inst, eta=float(eta))
            record += [
                repr(report.shapes[name].value()) if name in report.shapes else ""
                for name in shape_names
            ]
        out_rows.append(record)

    with open(out_path, "a" if (args.resume and existing) else "w", newline="") as fh:
        writer = csv.writer(fh)
        if not (args.resume and existing):
            writer.writerow(header)
        writer.writerows(out_rows)
    _maybe_json_mirror(config, out_dir, "results_rows", header, out_rows)
    _write_manifest(config, out_dir, time.perf_counter() - started)
    print(f"wrote {len(out_rows)} rows (grid size {config.sweep.size}) to {out_path}")
    return EXIT_OK


def cmd_oracle(args: argparse.Namespace) -> int:
    config = _load(args)
    if not config.population.is_single:
        raise ConfigError("population: exact enumeration needs a single behavior")
    behavior = config.population.components[0][0]
    result = enumerate_exact(
        config.instance, behavior, failure_threshold=config.estimator.failure_threshold
    )
    print(f"failure_probability={result.failure_probability!r}")
    print(f"expected_regret={result.expected_regret!r}")
    print(f"total_mass={result.total_mass!r} (conserved within 1e-12: "
          f"{abs(result.total_mass - 1.0) <= 1e-12})")
    out_dir = Path(config.output.directory)
    out_dir.mkdir(parents=True, exist_ok=True)
    header = ["failure_threshold", "failure_probability", "expected_regret", "total_mass"]
    rows = [[
        result.failure_threshold,
        repr(result.failure_probability),
        repr(result.expected_regret),
        repr(result.total_mass),
    ]]
    _write_rows(out_dir / "results.csv", header, rows)
    _maybe_json_mirror(config, out_dir, "results", header, rows)
    _write_manifest(config, out_dir, 0.0)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    if args.suite not in acceptance.SUITES:
        print(
            f"unknown suite {args.suite!r}; valid: {', '.join(sorted(acceptance.SUITES))}",
            file=sys.stderr,
        )
        return EXIT_CONFIG_ERROR
    results = acceptance.run_suite(args.suite)
    all_passed = True
    report_rows = []
    for res in results:
        for line in res.lines():
            print(line)
        for check in res.checks:
            report_rows.append(
                [res.criterion, check.name, repr(check.observed), check.comparison,
                 repr(check.threshold), check.passed]
            )
        all_passed &= res.passed
        print(
            f"criterion {res.criterion} ({res.title}): "
            f"{'PASS' if res.passed else 'FAIL'} [{res.wall_seconds:.1f}s]"
        )
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        _write_rows(
            out_dir / "report.csv",
            ["criterion", "check", "observed", "comparison", "threshold", "passed"],
            report_rows,
        )
    return EXIT_OK if all_passed else EXIT_CRITERION_FAILURE


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "simulate": cmd_simulate,
        "sweep": cmd_sweep,
        "oracle": cmd_oracle,
        "verify": cmd_verify,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except FileNotFoundError as exc:
        if args.command != "verify" and getattr(args, "config", None) == getattr(
            exc, "filename", None
        ):
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG_ERROR
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO_ERROR
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO_ERROR


if __name__ == "__main__":
    sys.exit(main())
