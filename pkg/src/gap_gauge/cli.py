"""Command-line interface.

Four subcommands cover the library surface:

    analyze    gap, structure, and bound report for a model file
    simulate   seeded Monte Carlo error study for a sampler config
    sweep      p95/bound trajectories along one closeness-budget grid
    estimate   gaps and bounds from a records CSV, optionally bootstrapped

Exit codes are total: 0 success, 2 input or validation problems, 3 undefined
quantities (zero-mass conditions, empty inputs), 4 sampler budget exhaustion.
Every run that writes files also writes a ``<out>.manifest.json`` recording
the resolved configuration, seed, input digests, and output paths; re-running
with that configuration and seed reproduces the outputs byte for byte.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import sys
import time
from dataclasses import dataclass

from . import __version__
from .bounds import independence_diagnostics, bound_report, structure_params
from .empirical import estimate_with_bootstrap, filter_ystar, read_records_csv
from .errors import (
    AllReplicatesDegenerate,
    EmptyInput,
    EmptySample,
    GapGaugeError,
    RejectionBudgetExhausted,
    ValidationError,
    ZeroMassCondition,
)
from .files import (
    bound_report_dict,
    diagnostics_dict,
    dumps_json,
    estimate_report_dict,
    gap_report_dict,
    load_model_file,
    load_sampler_config,
    sampler_config_to_dict,
    structure_params_dict,
    summary_dict,
    write_errors_csv,
    write_histogram_csv,
    write_json,
    write_sweep_csv,
)
from .model import FullJoint, compute_gaps, reduce
from .simulation import run_monte_carlo, sweep

__all__ = ["main", "RunManifest", "parse_grid"]

_DEFAULT_SEED = 42


@dataclass(frozen=True)
class RunManifest:
    """Provenance record written next to every file-producing run."""

    command: str
    config: dict
    seed: int
    version: str
    inputs: dict
    outputs: tuple
    duration_seconds: float

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "config": self.config,
            "seed": self.seed,
            "version": self.version,
            "inputs": self.inputs,
            "outputs": list(self.outputs),
            "duration_seconds": self.duration_seconds,
        }


def _digest(path: str) -> str:
    sha = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(1 << 16), b""):
            sha.update(block)
    return "sha256:" + sha.hexdigest()


def _write_manifest(
    command: str,
    out: str,
    config: dict,
    seed: int,
    inputs: list[str],
    outputs: list[str],
    started: float,
) -> None:
    manifest = RunManifest(
        command=command,
        config=config,
        seed=seed,
        version=__version__,
        inputs={path: _digest(path) for path in inputs},
        outputs=tuple(outputs),
        duration_seconds=time.monotonic() - started,
    )
    write_json(out + ".manifest.json", manifest.to_dict())


def parse_grid(spec: str) -> list[float]:
    """Parse ``start:stop:step`` into an inclusive, strictly increasing grid."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise ValidationError(f"grid must be start:stop:step, got {spec!r}")
    try:
        start, stop, step = (float(part) for part in parts)
    except ValueError:
        raise ValidationError(f"grid has non-numeric parts: {spec!r}") from None
    if step <= 0.0:
        raise ValidationError(f"grid step must be positive, got {step!r}")
    if stop < start:
        raise ValidationError(f"grid stop must be >= start, got {spec!r}")
    count = int((stop - start) / step + 1e-9) + 1
    # normalize accumulated float error so grid values print cleanly
    values = [round(start + k * step, 12) for k in range(count)]
    for value in values:
        if not (0.0 <= value <= 1.0):
            raise ValidationError(f"grid values must lie in [0, 1], got {value!r}")
    return values


def _flat_rows(obj, prefix: str = "") -> list[tuple[str, str]]:
    rows: list[tuple[str, str]] = []
    if isinstance(obj, dict):
        for key in obj:
            path = f"{prefix}.{key}" if prefix else str(key)
            rows.extend(_flat_rows(obj[key], path))
    elif isinstance(obj, (list, tuple)):
        for i, item in enumerate(obj):
            rows.extend(_flat_rows(item, f"{prefix}[{i}]"))
    else:
        rows.append((prefix, "" if obj is None else repr(obj) if isinstance(obj, float) else str(obj)))
    return rows


def _render(report: dict, fmt: str) -> str:
    if fmt == "csv":
        lines = ["field,value"]
        lines += [f"{field},{value}" for field, value in _flat_rows(report)]
        return "\n".join(lines) + "\n"
    return dumps_json(report)


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)


def _cmd_analyze(args, seed: int) -> int:
    started = time.monotonic()
    model = load_model_file(args.model)
    independence = None
    if isinstance(model, FullJoint):
        joint = model
        reduced = reduce(joint)
        table = joint.table()
        # the reduction guarantees positive mass everywhere except the
        # (v=0, vhat=0) cells, which only the diagnostics condition on
        if all(float(table[l, 0, 0, :].sum()) > 0.0 for l in (0, 1)):
            independence = diagnostics_dict(independence_diagnostics(joint, tol=args.tol))
    else:
        reduced = model
    report = {
        "gap": gap_report_dict(compute_gaps(reduced)),
        "structure": structure_params_dict(structure_params(reduced)),
        "bounds": bound_report_dict(bound_report(reduced)),
        "independence": independence,
    }
    _emit(_render(report, args.format), args.out)
    if args.out is not None:
        config = {"model": args.model, "tol": args.tol, "format": args.format}
        _write_manifest(
            "analyze", args.out, config, seed, [args.model], [args.out], started
        )
    return 0


def _cmd_simulate(args, seed: int) -> int:
    started = time.monotonic()
    config = load_sampler_config(args.config)
    result = run_monte_carlo(
        config, args.trials, seed, bins=args.bins, workers=args.workers
    )
    outputs = {
        "summary": args.out + ".summary.json",
        "errors": args.out + ".errors.csv",
        "histogram": args.out + ".hist.csv",
    }
    write_json(outputs["summary"], summary_dict(result))
    write_errors_csv(outputs["errors"], result.errors)
    write_histogram_csv(outputs["histogram"], result.histogram)
    manifest_config = {
        "config_file": args.config,
        "sampler": sampler_config_to_dict(config),
        "trials": args.trials,
        "bins": args.bins,
        "workers": args.workers,
    }
    _write_manifest(
        "simulate", args.out, manifest_config, seed,
        [args.config], sorted(outputs.values()), started,
    )
    return 0


def _cmd_sweep(args, seed: int) -> int:
    started = time.monotonic()
    config = load_sampler_config(args.config)
    grid = parse_grid(args.grid)
    result = sweep(
        config, args.varied, grid, args.trials, seed,
        bins=args.bins, workers=args.workers,
    )
    write_sweep_csv(args.out, result)
    manifest_config = {
        "config_file": args.config,
        "sampler": sampler_config_to_dict(config),
        "varied": args.varied,
        "grid": args.grid,
        "trials": args.trials,
        "bins": args.bins,
        "workers": args.workers,
    }
    _write_manifest(
        "sweep", args.out, manifest_config, seed, [args.config], [args.out], started
    )
    return 0


def _cmd_estimate(args, seed: int) -> int:
    started = time.monotonic()
    dataset = read_records_csv(args.data)
    if args.condition_ystar:
        dataset = filter_ystar(dataset)
    report = estimate_with_bootstrap(
        dataset,
        smoothing=args.smoothing,
        replicates=args.bootstrap,
        level=args.level,
        seed=seed,
    )
    _emit(_render(estimate_report_dict(report), args.format), args.out)
    if args.out is not None:
        config = {
            "data": args.data,
            "smoothing": args.smoothing,
            "bootstrap": args.bootstrap,
            "level": args.level,
            "condition_ystar": args.condition_ystar,
            "format": args.format,
        }
        _write_manifest(
            "estimate", args.out, config, seed, [args.data], [args.out], started
        )
    return 0


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--seed", type=int, default=None,
        help="64-bit master seed (default 42; GAPGAUGE_SEED overrides the default)",
    )
    common.add_argument(
        "--workers", type=int, default=None,
        help="worker processes (default: available parallelism); never affects results",
    )
    common.add_argument(
        "--format", choices=("json", "csv"), default="json",
        help="report format for analyze/estimate (default json)",
    )

    parser = argparse.ArgumentParser(
        prog="gap-gauge",
        description="Quantify the error of measuring a conditional gap through a noisy proxy.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_analyze = sub.add_parser(
        "analyze", parents=[common], help="report gaps, structure, and bounds for a model file"
    )
    p_analyze.add_argument("model", help="model file (JSON, 'reduced' or 'joint')")
    p_analyze.add_argument("--tol", type=float, default=1e-9,
                           help="independence tolerance for full-joint inputs")
    p_analyze.add_argument("--out", default=None, help="output path (default: stdout)")
    p_analyze.set_defaults(func=_cmd_analyze)

    p_sim = sub.add_parser(
        "simulate", parents=[common], help="Monte Carlo error study for a sampler config"
    )
    p_sim.add_argument("config", help="sampler config (JSON)")
    p_sim.add_argument("--trials", type=int, default=100000)
    p_sim.add_argument("--bins", type=int, default=50)
    p_sim.add_argument("--out", required=True,
                       help="output prefix for .summary.json/.errors.csv/.hist.csv")
    p_sim.set_defaults(func=_cmd_simulate)

    p_sweep = sub.add_parser(
        "sweep", parents=[common], help="rerun the study along one eps grid"
    )
    p_sweep.add_argument("config", help="constrained sampler config (JSON)")
    p_sweep.add_argument("--varied", required=True, choices=("eps_b1", "eps_b2"))
    p_sweep.add_argument("--grid", required=True, help="inclusive grid start:stop:step")
    p_sweep.add_argument("--trials", type=int, default=100000)
    p_sweep.add_argument("--bins", type=int, default=50)
    p_sweep.add_argument("--out", required=True, help="output CSV path")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_est = sub.add_parser(
        "estimate", parents=[common], help="estimate gaps and bounds from records CSV"
    )
    p_est.add_argument("data", help="records CSV (header l,v,vhat,y[,ystar])")
    p_est.add_argument("--smoothing", type=float, default=0.0)
    p_est.add_argument("--bootstrap", type=int, default=0,
                       help="bootstrap replicates (default 0: no intervals)")
    p_est.add_argument("--level", type=float, default=0.95)
    p_est.add_argument("--condition-ystar", action="store_true",
                       help="restrict to rows with ystar = 1 first")
    p_est.add_argument("--out", default=None, help="output path (default: stdout)")
    p_est.set_defaults(func=_cmd_estimate)
    return parser


def _resolve_seed(args) -> int:
    if args.seed is not None:
        seed = args.seed
    else:
        env = os.environ.get("GAPGAUGE_SEED")
        if env is not None:
            try:
                seed = int(env)
            except ValueError:
                raise ValidationError(
                    f"GAPGAUGE_SEED must be an integer, got {env!r}"
                ) from None
        else:
            seed = _DEFAULT_SEED
    if not (0 <= seed < (1 << 64)):
        raise ValidationError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "workers", None) is None:
        args.workers = os.cpu_count() or 1
    try:
        seed = _resolve_seed(args)
        return args.func(args, seed)
    except RejectionBudgetExhausted as exc:
        print(f"gap-gauge: {exc}", file=sys.stderr)
        return 4
    except (ZeroMassCondition, EmptyInput, EmptySample, AllReplicatesDegenerate) as exc:
        print(f"gap-gauge: {exc}", file=sys.stderr)
        return 3
    except (ValidationError, GapGaugeError, OSError) as exc:
        print(f"gap-gauge: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
