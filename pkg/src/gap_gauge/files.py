"""File interchange: model files, sampler configs, and result files.

All JSON written here is deterministic (sorted keys, fixed indentation,
shortest round-trip float repr) and all CSV uses LF line endings, so a rerun
with identical inputs produces byte-identical files. Every writer has a
matching reader to keep outputs verifiable.
"""

from __future__ import annotations

import csv
import json
from typing import Any

import numpy as np

from .bounds import BoundReport, IndependenceDiagnostics, StructureParams
from .empirical import BootstrapResult, EstimateReport
from .errors import ValidationError
from .model import FullJoint, GapReport, ReducedModel, SliceParams
from .simulation import Histogram, SamplerConfig, SimulationResult, SweepResult

__all__ = [
    "dumps_json",
    "write_json",
    "model_from_dict",
    "load_model_file",
    "model_to_dict",
    "sampler_config_from_dict",
    "load_sampler_config",
    "gap_report_dict",
    "structure_params_dict",
    "bound_report_dict",
    "diagnostics_dict",
    "estimate_report_dict",
    "summary_dict",
    "write_errors_csv",
    "write_histogram_csv",
    "write_sweep_csv",
    "read_summary_json",
    "read_errors_csv",
    "read_histogram_csv",
    "read_sweep_csv",
]

SWEEP_HEADER = ("grid_value", "p95", "bound_a", "bound_combined_stated",
                "bound_combined_proof")


def dumps_json(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_json(path, obj: Any) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(dumps_json(obj))


def _load_json(path) -> Any:
    with open(path, "r", encoding="utf-8") as handle:
        try:
            return json.load(handle)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: not valid JSON ({exc})") from exc


def _require_mapping(obj: Any, where: str) -> dict:
    if not isinstance(obj, dict):
        raise ValidationError(f"{where} must be a JSON object")
    return obj


def _check_keys(obj: dict, required: tuple, optional: tuple, where: str) -> None:
    for key in required:
        if key not in obj:
            raise ValidationError(f"{where} is missing required field {key!r}")
    for key in obj:
        if key not in required and key not in optional:
            raise ValidationError(f"{where} has unknown field {key!r}")


def _require_number(obj: dict, key: str, where: str) -> float:
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{where}.{key} must be a number, got {value!r}")
    return float(value)


def _slice_from_dict(obj: Any, where: str) -> SliceParams:
    obj = _require_mapping(obj, where)
    _check_keys(obj, ("p", "r", "a", "b", "c"), ("d",), where)
    kwargs = {key: _require_number(obj, key, where) for key in ("p", "r", "a", "b", "c")}
    if "d" in obj and obj["d"] is not None:
        kwargs["d"] = _require_number(obj, "d", where)
    try:
        return SliceParams(**kwargs)
    except ValidationError as exc:
        raise ValidationError(f"{where}: {exc}") from exc


def model_from_dict(obj: Any) -> FullJoint | ReducedModel:
    """Parse the model-file payload: exactly one of ``reduced``/``joint``."""
    obj = _require_mapping(obj, "model file")
    keys = set(obj)
    if keys == {"reduced"}:
        body = _require_mapping(obj["reduced"], "reduced")
        _check_keys(body, ("slice0", "slice1"), (), "reduced")
        return ReducedModel(
            slice0=_slice_from_dict(body["slice0"], "reduced.slice0"),
            slice1=_slice_from_dict(body["slice1"], "reduced.slice1"),
        )
    if keys == {"joint"}:
        body = _require_mapping(obj["joint"], "joint")
        _check_keys(body, ("cells",), (), "joint")
        cells = body["cells"]
        if not isinstance(cells, list):
            raise ValidationError("joint.cells must be a list of 16 numbers")
        for i, value in enumerate(cells):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ValidationError(f"joint.cells[{i}] must be a number, got {value!r}")
        return FullJoint(cells=np.array(cells, dtype=float))
    raise ValidationError(
        "model file must have exactly one of the fields 'reduced' or 'joint', "
        f"got {sorted(keys)}"
    )


def load_model_file(path) -> FullJoint | ReducedModel:
    try:
        return model_from_dict(_load_json(path))
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from exc


def _slice_to_dict(params: SliceParams) -> dict:
    out = {"p": params.p, "r": params.r, "a": params.a, "b": params.b, "c": params.c}
    if params.d is not None:
        out["d"] = params.d
    return out


def model_to_dict(model: FullJoint | ReducedModel) -> dict:
    if isinstance(model, FullJoint):
        return {"joint": {"cells": [float(x) for x in model.cells]}}
    return {
        "reduced": {
            "slice0": _slice_to_dict(model.slice0),
            "slice1": _slice_to_dict(model.slice1),
        }
    }


def sampler_config_from_dict(obj: Any) -> SamplerConfig:
    obj = _require_mapping(obj, "sampler config")
    _check_keys(
        obj,
        ("p0", "r0", "p1", "r1", "mode"),
        ("eps_b1", "eps_b2", "max_rejections"),
        "sampler config",
    )
    if not isinstance(obj["mode"], str):
        raise ValidationError(f"sampler config mode must be a string, got {obj['mode']!r}")
    kwargs: dict[str, Any] = {
        key: _require_number(obj, key, "sampler config") for key in ("p0", "r0", "p1", "r1")
    }
    kwargs["mode"] = obj["mode"]
    for key in ("eps_b1", "eps_b2"):
        if key in obj:
            kwargs[key] = _require_number(obj, key, "sampler config")
    if "max_rejections" in obj:
        value = obj["max_rejections"]
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValidationError(
                f"sampler config max_rejections must be an integer, got {value!r}"
            )
        kwargs["max_rejections"] = value
    return SamplerConfig(**kwargs)


def load_sampler_config(path) -> SamplerConfig:
    try:
        return sampler_config_from_dict(_load_json(path))
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from exc


def sampler_config_to_dict(config: SamplerConfig) -> dict:
    out: dict[str, Any] = {
        "p0": config.p0,
        "r0": config.r0,
        "p1": config.p1,
        "r1": config.r1,
        "mode": config.mode,
        "max_rejections": config.max_rejections,
    }
    if config.mode == "constrained":
        out["eps_b1"] = config.eps_b1
        out["eps_b2"] = config.eps_b2
    return out


def gap_report_dict(gap: GapReport) -> dict:
    return {
        "G": gap.G,
        "G_hat": gap.G_hat,
        "delta0": gap.delta0,
        "delta1": gap.delta1,
        "error": gap.error,
    }


def structure_params_dict(params: StructureParams) -> dict:
    return {
        "gamma_A": params.gamma_A,
        "gamma_B1": params.gamma_B1,
        "gamma_B2": params.gamma_B2,
        "eps_B1": params.eps_B1,
        "eps_B2": params.eps_B2,
        "g_star": params.g_star,
    }


def bound_report_dict(report: BoundReport) -> dict:
    return {
        "bound_A": report.bound_A,
        "bound_B1": report.bound_B1,
        "bound_B2": report.bound_B2,
        "bound_combined_stated": report.bound_combined_stated,
        "bound_combined_proof": report.bound_combined_proof,
        "best": report.best,
    }


def diagnostics_dict(diag: IndependenceDiagnostics) -> dict:
    return {
        "tol": diag.tol,
        "case1_deviation": diag.case1_deviation,
        "case2_deviation": diag.case2_deviation,
        "case3_deviation": diag.case3_deviation,
        "case1_holds": diag.case1_holds,
        "case2_holds": diag.case2_holds,
        "case3_holds": diag.case3_holds,
        "bound_case2": diag.bound_case2,
        "bound_case3": diag.bound_case3,
        "gap_error": diag.gap_error,
    }


def _bootstrap_dict(result: BootstrapResult) -> dict:
    return {
        "intervals": {key: [lo, hi] for key, (lo, hi) in result.intervals.items()},
        "replicates": result.replicates,
        "skipped": result.skipped,
        "level": result.level,
        "seed": result.seed,
    }


def estimate_report_dict(report: EstimateReport) -> dict:
    return {
        "n": report.n,
        "counts": list(report.counts),
        "counts_index": report.counts_index,
        "g_hat": report.g_hat,
        "smoothing": report.smoothing,
        "gap": None if report.gap is None else gap_report_dict(report.gap),
        "structure": None if report.structure is None
        else structure_params_dict(report.structure),
        "bounds": None if report.bounds is None else bound_report_dict(report.bounds),
        "bootstrap_ci": None if report.bootstrap is None
        else _bootstrap_dict(report.bootstrap),
    }


def summary_dict(result: SimulationResult) -> dict:
    return {
        "n_trials": result.n_trials,
        "p95": result.p95,
        "bounds": bound_report_dict(result.bounds),
        "rejection_rate": result.rejection_rate,
        "seed": result.seed,
    }


def write_errors_csv(path, errors) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("error\n")
        for value in np.asarray(errors, dtype=float).reshape(-1):
            handle.write(repr(float(value)) + "\n")


def write_histogram_csv(path, histogram: Histogram) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("bin_lo,bin_hi,count\n")
        for lo, hi, count in zip(
            histogram.bin_edges, histogram.bin_edges[1:], histogram.counts
        ):
            handle.write(f"{lo!r},{hi!r},{count}\n")


def write_sweep_csv(path, result: SweepResult) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(",".join(SWEEP_HEADER) + "\n")
        for point in result.points:
            handle.write(
                f"{point.grid_value!r},{point.p95!r},{point.bound_a!r},"
                f"{point.bound_combined_stated!r},{point.bound_combined_proof!r}\n"
            )


def read_summary_json(path) -> dict:
    obj = _require_mapping(_load_json(path), "summary")
    _check_keys(obj, ("n_trials", "p95", "bounds", "rejection_rate", "seed"), (), "summary")
    return obj


def read_errors_csv(path) -> np.ndarray:
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != ["error"]:
            raise ValidationError(f"{path}: expected header 'error', got {header!r}")
        try:
            return np.array([float(row[0]) for row in reader], dtype=float)
        except (IndexError, ValueError) as exc:
            raise ValidationError(f"{path}: malformed error row ({exc})") from exc


def read_histogram_csv(path) -> Histogram:
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != list(("bin_lo", "bin_hi", "count")):
            raise ValidationError(
                f"{path}: expected header 'bin_lo,bin_hi,count', got {header!r}"
            )
        edges: list[float] = []
        counts: list[int] = []
        for row in reader:
            if len(row) != 3:
                raise ValidationError(f"{path}: histogram rows need 3 columns")
            lo, hi, count = float(row[0]), float(row[1]), int(row[2])
            if not edges:
                edges.append(lo)
            elif edges[-1] != lo:
                raise ValidationError(f"{path}: histogram bins are not contiguous")
            edges.append(hi)
            counts.append(count)
    return Histogram(bin_edges=tuple(edges), counts=tuple(counts))


def read_sweep_csv(path) -> list[dict[str, float]]:
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != list(SWEEP_HEADER):
            raise ValidationError(
                f"{path}: expected header {','.join(SWEEP_HEADER)!r}, got {header!r}"
            )
        rows = []
        for row in reader:
            if len(row) != len(SWEEP_HEADER):
                raise ValidationError(f"{path}: sweep rows need {len(SWEEP_HEADER)} columns")
            rows.append({key: float(value) for key, value in zip(SWEEP_HEADER, row)})
        return rows
