"""Seeded Monte Carlo studies of the gap measurement error.

Each trial draws a random reduced model for a fixed classifier (fixed per
slice error rates p and r), computes the exact measurement error, and the run
aggregates the error distribution against the theoretical bounds.

Reproducibility contract: trial i of a run with master seed s consumes the
dedicated stream ``derive_trial_stream(s, i)`` and nothing else, so results
are independent of execution order and of how trials are distributed across
worker processes, and identical runs are bit-identical.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .bounds import BoundReport, bound_report_from_params, classifier_structure_params
from .errors import (
    EmptySample,
    RejectionBudgetExhausted,
    ValidationError,
)
from .model import ReducedModel, SliceParams, compute_gaps

__all__ = [
    "SamplerConfig",
    "Histogram",
    "SimulationResult",
    "SweepPoint",
    "SweepResult",
    "derive_trial_stream",
    "derive_point_seed",
    "sample_unconstrained",
    "sample_constrained",
    "percentile",
    "config_bounds",
    "run_monte_carlo",
    "sweep",
]

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

#: Trials per unit of parallel work; fixed so chunking never affects results.
_CHUNK = 8192


def _splitmix64(z: int) -> int:
    """One output of the splitmix64 generator for state ``z`` (64-bit)."""
    z = (z + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def _mix64(a: int, b: int) -> int:
    """Mix two 64-bit words into one, splitmix64 over both."""
    return _splitmix64((a & _MASK64) ^ _splitmix64((b & _MASK64) + _GOLDEN))


def _require_seed(seed: int) -> int:
    if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool):
        raise ValidationError(f"seed must be an integer, got {seed!r}")
    seed = int(seed)
    if not (0 <= seed <= _MASK64):
        raise ValidationError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def derive_trial_stream(seed: int, trial_index: int) -> np.random.Generator:
    """Dedicated random stream for one trial of one run.

    The pair (seed, trial_index) is hashed through splitmix64 into a 128-bit
    Philox key: ``lo = mix(seed, index)``, ``hi = splitmix(lo)``. Distinct
    pairs yield distinct keys, and Philox guarantees independent streams for
    distinct keys, so trials never share randomness and the mapping is stable
    across runs, platforms, and worker counts.
    """
    seed = _require_seed(seed)
    if not isinstance(trial_index, (int, np.integer)) or int(trial_index) < 0:
        raise ValidationError(f"trial_index must be a non-negative integer, got {trial_index!r}")
    lo = _mix64(seed, int(trial_index))
    hi = _splitmix64(lo)
    return np.random.Generator(np.random.Philox(key=(hi << 64) | lo))


def derive_point_seed(seed: int, index: int) -> int:
    """Per-point master seed for sweeps: a 64-bit mix of (seed, index)."""
    return _mix64(_require_seed(seed), int(index))


_MODES = ("unconstrained", "constrained")


@dataclass(frozen=True, slots=True)
class SamplerConfig:
    """Fixed classifier error rates plus the sampling mode for trial models.

    In constrained mode the outcome-rate draws respect the closeness budgets
    ``eps_b1`` (within-slice diagonal closeness) and ``eps_b2`` (across-slice
    translation residual); both are required then and must be absent in
    unconstrained mode. ``max_rejections`` caps the attempts per constrained
    trial.
    """

    p0: float
    r0: float
    p1: float
    r1: float
    mode: str
    eps_b1: float | None = None
    eps_b2: float | None = None
    max_rejections: int = 10000

    def __post_init__(self) -> None:
        for field in ("p0", "r0", "p1", "r1"):
            value = float(getattr(self, field))
            if math.isnan(value) or not (0.0 <= value <= 1.0):
                raise ValidationError(f"{field} must lie in [0, 1], got {value!r}")
            object.__setattr__(self, field, value)
        if self.mode not in _MODES:
            raise ValidationError(
                f"mode must be one of {_MODES}, got {self.mode!r}"
            )
        if self.mode == "constrained":
            for field in ("eps_b1", "eps_b2"):
                value = getattr(self, field)
                if value is None:
                    raise ValidationError(f"constrained mode requires {field}")
                value = float(value)
                if math.isnan(value) or not (0.0 <= value <= 1.0):
                    raise ValidationError(f"{field} must lie in [0, 1], got {value!r}")
                object.__setattr__(self, field, value)
        else:
            for field in ("eps_b1", "eps_b2"):
                if getattr(self, field) is not None:
                    raise ValidationError(f"{field} only applies to constrained mode")
        if not isinstance(self.max_rejections, (int, np.integer)) or self.max_rejections < 1:
            raise ValidationError(
                f"max_rejections must be a positive integer, got {self.max_rejections!r}"
            )
        object.__setattr__(self, "max_rejections", int(self.max_rejections))


def sample_unconstrained(
    config: SamplerConfig, stream: np.random.Generator
) -> ReducedModel:
    """One trial model with outcome rates drawn independently uniform.

    Consumes exactly six uniforms in the order a0, b0, c0, a1, b1, c1.
    """
    a0, b0, c0, a1, b1, c1 = stream.random(6)
    return ReducedModel(
        slice0=SliceParams(p=config.p0, r=config.r0, a=a0, b=b0, c=c0),
        slice1=SliceParams(p=config.p1, r=config.r1, a=a1, b=b1, c=c1),
    )


def _constrained_attempt(
    stream: np.random.Generator, eps_b1: float, eps_b2: float
) -> tuple[float, tuple[float, float, float, float, float, float]]:
    """One constrained construction attempt; cells may land outside [0, 1].

    Draw order per attempt: the shift g uniform on [-1, 1]; a0 then b0
    uniform on the g-feasible range ([0, 1-g] for g >= 0, [-g, 1] otherwise);
    the diagonal residual for c0 uniform on [-eps_b1, eps_b1]; then the three
    translation residuals for a1, b1, c1 uniform on [-eps_b2, eps_b2] in one
    call, in that order.
    """
    g = stream.uniform(-1.0, 1.0)
    if g >= 0.0:
        lo, hi = 0.0, 1.0 - g
    else:
        lo, hi = -g, 1.0
    a0 = stream.uniform(lo, hi)
    b0 = stream.uniform(lo, hi)
    c0 = b0 + stream.uniform(-eps_b1, eps_b1)
    ea, eb, ec = stream.uniform(-eps_b2, eps_b2, size=3)
    return g, (a0, b0, c0, a0 + g + ea, b0 + g + eb, c0 + g + ec)


def sample_constrained(
    config: SamplerConfig, stream: np.random.Generator
) -> tuple[ReducedModel, int]:
    """One trial model respecting the closeness budgets, by rejection.

    Slice 0 rates are drawn in the shift-feasible range, slice 1 rates are
    the slice 0 rates translated by the shared shift plus independent
    residuals. Any cell outside [0, 1] discards the whole attempt; partial
    redraws would bias the accepted distribution. Returns the model and the
    number of attempts consumed (including the successful one). Raises
    :class:`RejectionBudgetExhausted` after ``max_rejections`` failed
    attempts.
    """
    if config.mode != "constrained":
        raise ValidationError("sample_constrained needs a constrained config")
    for attempt in range(1, config.max_rejections + 1):
        _, cells = _constrained_attempt(stream, config.eps_b1, config.eps_b2)
        if all(0.0 <= x <= 1.0 for x in cells):
            a0, b0, c0, a1, b1, c1 = cells
            model = ReducedModel(
                slice0=SliceParams(p=config.p0, r=config.r0, a=a0, b=b0, c=c0),
                slice1=SliceParams(p=config.p1, r=config.r1, a=a1, b=b1, c=c1),
            )
            return model, attempt
    raise RejectionBudgetExhausted(config.max_rejections)


def percentile(values, q: float) -> float:
    """Nearest-rank percentile: the ceil(q * N)-th smallest value.

    ``q`` must lie in (0, 1]; the collection must be non-empty
    (:class:`EmptySample` otherwise). The result is always an element of
    ``values``.
    """
    q = float(q)
    if math.isnan(q) or not (0.0 < q <= 1.0):
        raise ValidationError(f"q must lie in (0, 1], got {q!r}")
    arr = np.asarray(values, dtype=float).reshape(-1)
    if arr.size == 0:
        raise EmptySample("percentile of an empty collection")
    # round before ceil so float dust in q * N cannot shift the rank
    rank = max(1, math.ceil(round(q * arr.size, 9)))
    return float(np.sort(arr)[rank - 1])


@dataclass(frozen=True)
class Histogram:
    """Equal-width histogram of errors over [0, 1].

    When any value exceeds 1 an overflow bin [1, 2] is appended, so
    ``counts`` always sums to the number of values.
    """

    bin_edges: tuple[float, ...]
    counts: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.bin_edges) != len(self.counts) + 1:
            raise ValidationError("histogram needs one more edge than counts")
        for lo, hi in zip(self.bin_edges, self.bin_edges[1:]):
            if not lo < hi:
                raise ValidationError("histogram edges must strictly increase")
        if any(c < 0 for c in self.counts):
            raise ValidationError("histogram counts must be >= 0")


def _histogram(errors: np.ndarray, bins: int) -> Histogram:
    # values beyond the last edge fall out of np.histogram's counts and are
    # collected into the overflow bin instead
    edges = np.linspace(0.0, 1.0, bins + 1)
    counts, _ = np.histogram(errors, bins=edges)
    overflow = int((errors > 1.0).sum())
    if overflow:
        return Histogram(
            bin_edges=tuple(float(e) for e in edges) + (2.0,),
            counts=tuple(int(c) for c in counts) + (overflow,),
        )
    return Histogram(
        bin_edges=tuple(float(e) for e in edges),
        counts=tuple(int(c) for c in counts),
    )


def config_bounds(config: SamplerConfig) -> BoundReport:
    """Bounds implied by the configured classifier and closeness budgets.

    Unconstrained runs place no closeness structure on the draws, so both
    eps budgets are the vacuous 1.0 there.
    """
    if config.mode == "constrained":
        eps_b1, eps_b2 = config.eps_b1, config.eps_b2
    else:
        eps_b1, eps_b2 = 1.0, 1.0
    params = classifier_structure_params(
        config.p0, config.r0, config.p1, config.r1, eps_b1=eps_b1, eps_b2=eps_b2
    )
    return bound_report_from_params(params)


@dataclass(frozen=True)
class SimulationResult:
    """Aggregate of one Monte Carlo run; ``errors`` is in trial order."""

    n_trials: int
    errors: np.ndarray
    p95: float
    histogram: Histogram
    bounds: BoundReport
    rejection_rate: float
    seed: int

    def __post_init__(self) -> None:
        arr = np.asarray(self.errors, dtype=float).reshape(-1)
        arr.setflags(write=False)
        object.__setattr__(self, "errors", arr)


def _trial_error(config: SamplerConfig, seed: int, index: int) -> tuple[float, int]:
    stream = derive_trial_stream(seed, index)
    if config.mode == "constrained":
        model, attempts = sample_constrained(config, stream)
    else:
        model, attempts = sample_unconstrained(config, stream), 1
    return compute_gaps(model).error, attempts


def _run_chunk(args: tuple[SamplerConfig, int, int, int]):
    """Errors for trials [start, stop); picklable unit of parallel work."""
    config, seed, start, stop = args
    errors = []
    attempts = 0
    for i in range(start, stop):
        try:
            err, tries = _trial_error(config, seed, i)
        except RejectionBudgetExhausted:
            return ("exhausted", i)
        errors.append(err)
        attempts += tries
    return ("ok", errors, attempts)


def run_monte_carlo(
    config: SamplerConfig,
    n_trials: int,
    seed: int,
    bins: int = 50,
    workers: int = 1,
) -> SimulationResult:
    """Run ``n_trials`` independent trials and aggregate the error distribution.

    ``workers`` only distributes the work; any worker count produces the
    identical result. The rejection rate is the fraction of constrained
    attempts discarded (0.0 for unconstrained runs).
    """
    seed = _require_seed(seed)
    if not isinstance(n_trials, (int, np.integer)) or n_trials < 1:
        raise ValidationError(f"n_trials must be a positive integer, got {n_trials!r}")
    if not isinstance(bins, (int, np.integer)) or bins < 1:
        raise ValidationError(f"bins must be a positive integer, got {bins!r}")
    if not isinstance(workers, (int, np.integer)) or workers < 1:
        raise ValidationError(f"workers must be a positive integer, got {workers!r}")
    n_trials, bins, workers = int(n_trials), int(bins), int(workers)

    chunks = [
        (config, seed, start, min(start + _CHUNK, n_trials))
        for start in range(0, n_trials, _CHUNK)
    ]
    if workers == 1 or len(chunks) == 1:
        outcomes = [_run_chunk(spec) for spec in chunks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_chunk, chunks))

    exhausted = [out[1] for out in outcomes if out[0] == "exhausted"]
    if exhausted:
        # report the earliest failing trial regardless of scheduling
        raise RejectionBudgetExhausted(config.max_rejections, trial_index=min(exhausted))

    errors = np.array(
        [err for out in outcomes for err in out[1]], dtype=float
    )
    attempts = sum(out[2] for out in outcomes)
    rejection_rate = (attempts - n_trials) / attempts if attempts else 0.0
    return SimulationResult(
        n_trials=n_trials,
        errors=errors,
        p95=percentile(errors, 0.95),
        histogram=_histogram(errors, bins),
        bounds=config_bounds(config),
        rejection_rate=rejection_rate,
        seed=seed,
    )


@dataclass(frozen=True, slots=True)
class SweepPoint:
    """Summary of one grid point of a sweep."""

    grid_value: float
    p95: float
    bound_a: float
    bound_combined_stated: float
    bound_combined_proof: float


@dataclass(frozen=True)
class SweepResult:
    """p95 and bound trajectories along one closeness-budget grid."""

    varied: str
    fixed_value: float
    grid: tuple[float, ...]
    points: tuple[SweepPoint, ...]
    n_trials: int
    seed: int


def sweep(
    base: SamplerConfig,
    varied: str,
    grid,
    n_trials: int,
    seed: int,
    bins: int = 50,
    workers: int = 1,
) -> SweepResult:
    """Rerun the constrained study at each grid value of one eps budget.

    Grid point k runs with master seed ``derive_point_seed(seed, k)``, so
    points are mutually independent yet the whole sweep is reproducible from
    the single master seed.
    """
    if varied not in ("eps_b1", "eps_b2"):
        raise ValidationError(f"varied must be eps_b1 or eps_b2, got {varied!r}")
    if base.mode != "constrained":
        raise ValidationError("sweep requires a constrained base config")
    grid = [float(x) for x in grid]
    if not grid:
        raise ValidationError("grid must be non-empty")
    for x in grid:
        if math.isnan(x) or not (0.0 <= x <= 1.0):
            raise ValidationError(f"grid values must lie in [0, 1], got {x!r}")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValidationError("grid values must be strictly increasing")
    seed = _require_seed(seed)

    points = []
    for k, value in enumerate(grid):
        config = replace(base, **{varied: value})
        result = run_monte_carlo(
            config, n_trials, derive_point_seed(seed, k), bins=bins, workers=workers
        )
        points.append(
            SweepPoint(
                grid_value=value,
                p95=result.p95,
                bound_a=result.bounds.bound_A,
                bound_combined_stated=result.bounds.bound_combined_stated,
                bound_combined_proof=result.bounds.bound_combined_proof,
            )
        )
    fixed = base.eps_b2 if varied == "eps_b1" else base.eps_b1
    return SweepResult(
        varied=varied,
        fixed_value=float(fixed),
        grid=tuple(grid),
        points=tuple(points),
        n_trials=int(n_trials),
        seed=seed,
    )
