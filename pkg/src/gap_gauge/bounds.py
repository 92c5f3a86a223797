"""Structure parameters and worst-case bounds on the gap measurement error.

The error |G - G_hat| of measuring the gap through the proxy admits several
upper bounds, each valid under a different structural condition on the model:

* bound A uses only the worst proxy error rate across slices,
* bound B1 adds within-slice precision/recall closeness plus closeness of
  the off-diagonal outcome rates b and c (closeness of diagonals),
* bound B2 uses across-slice closeness of the error rates plus approximate
  translation of the outcome rates between slices (model closeness),
* the combined bound mixes all three families and is reported in two
  arithmetic variants that differ in one coefficient (see
  :func:`bound_combined`).

:func:`structure_params` extracts every one of these condition parameters at
its tightest value for a given model, so each bound is evaluated at the
smallest budget the model actually satisfies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ValidationError
from .model import (
    FullJoint,
    ReducedModel,
    conditional_prob,
    gaps_from_joint,
)

__all__ = [
    "StructureParams",
    "BoundReport",
    "IndependenceDiagnostics",
    "structure_params",
    "classifier_structure_params",
    "bound_A",
    "bound_B1",
    "bound_B2",
    "bound_combined",
    "bound_report",
    "bound_report_from_params",
    "independence_diagnostics",
]


def _require_unit(value: float, field: str) -> float:
    value = float(value)
    if math.isnan(value) or not (0.0 <= value <= 1.0):
        raise ValidationError(f"{field} must lie in [0, 1], got {value!r}")
    return value


@dataclass(frozen=True, slots=True)
class StructureParams:
    """Tight structural-condition parameters of a reduced model.

    gamma_A   largest proxy error rate, max(p0, r0, p1, r1)
    gamma_B1  largest within-slice |p_l - r_l|
    gamma_B2  largest across-slice rate difference, max(|p1-p0|, |r1-r0|)
    eps_B1    largest within-slice |b_l - c_l| (closeness of diagonals)
    eps_B2    smallest uniform translation residual of (a, b, c) between
              slices (model closeness), with g_star the minimizing shift
    """

    gamma_A: float
    gamma_B1: float
    gamma_B2: float
    eps_B1: float
    eps_B2: float
    g_star: float

    def __post_init__(self) -> None:
        for field in ("gamma_A", "gamma_B1", "gamma_B2", "eps_B1", "eps_B2"):
            object.__setattr__(self, field, _require_unit(getattr(self, field), field))
        g = float(self.g_star)
        if math.isnan(g) or not (-1.0 <= g <= 1.0):
            raise ValidationError(f"g_star must lie in [-1, 1], got {g!r}")
        object.__setattr__(self, "g_star", g)


def structure_params(model: ReducedModel) -> StructureParams:
    """Extract every structure parameter at its tightest value.

    The translation parameters solve the minimax problem

        g_star = argmin_g max_{x in {a,b,c}} |(x_1 - x_0) - g|

    whose closed form is the midrange of the three differences; eps_B2 is
    half their range. No smaller eps_B2 admits any shift, and no other shift
    achieves eps_B2.
    """
    s0, s1 = model.slices()
    deltas = (s1.a - s0.a, s1.b - s0.b, s1.c - s0.c)
    hi, lo = max(deltas), min(deltas)
    return StructureParams(
        gamma_A=max(s0.p, s0.r, s1.p, s1.r),
        gamma_B1=max(abs(s0.p - s0.r), abs(s1.p - s1.r)),
        gamma_B2=max(abs(s1.p - s0.p), abs(s1.r - s0.r)),
        eps_B1=max(abs(s0.b - s0.c), abs(s1.b - s1.c)),
        eps_B2=(hi - lo) / 2.0,
        g_star=(hi + lo) / 2.0,
    )


def classifier_structure_params(
    p0: float,
    r0: float,
    p1: float,
    r1: float,
    eps_b1: float = 1.0,
    eps_b2: float = 1.0,
    g_star: float = 0.0,
) -> StructureParams:
    """Structure parameters for a known classifier and assumed closeness.

    Useful before any outcome data exists: the error rates pin down the gamma
    parameters while the closeness budgets are supplied (defaulting to the
    vacuous 1.0).
    """
    p0 = _require_unit(p0, "p0")
    r0 = _require_unit(r0, "r0")
    p1 = _require_unit(p1, "p1")
    r1 = _require_unit(r1, "r1")
    return StructureParams(
        gamma_A=max(p0, r0, p1, r1),
        gamma_B1=max(abs(p0 - r0), abs(p1 - r1)),
        gamma_B2=max(abs(p1 - p0), abs(r1 - r0)),
        eps_B1=eps_b1,
        eps_B2=eps_b2,
        g_star=g_star,
    )


def bound_A(params: StructureParams) -> float:
    """2 gamma_A: valid for every model."""
    return 2.0 * params.gamma_A


def bound_B1(params: StructureParams) -> float:
    """2 (gamma_B1 + eps_B1): valid for every model."""
    return 2.0 * (params.gamma_B1 + params.eps_B1)


def bound_B2(params: StructureParams) -> float:
    """2 gamma_B2 + 3 eps_B2: valid for every model."""
    return 2.0 * params.gamma_B2 + 3.0 * params.eps_B2


def bound_combined(params: StructureParams) -> tuple[float, float]:
    """The combined bound in its two arithmetic variants (stated, proof).

    Both share 2 min(gamma_A, gamma_B1, gamma_B2) + eps_B2 (2 gamma_A +
    gamma_B1) and differ in the final term: the stated variant adds
    eps_B1 * gamma_B1 while the derivation it summarizes supports
    eps_B1 * gamma_B2 (the diagonal-closeness substitution is weighted by the
    across-slice precision difference). Only the proof variant is sound for
    every model; the stated variant can be violated when gamma_B1 <
    gamma_B2. Both are reported so either convention can be compared.
    """
    shared = 2.0 * min(params.gamma_A, params.gamma_B1, params.gamma_B2)
    shared += params.eps_B2 * (2.0 * params.gamma_A + params.gamma_B1)
    return (
        shared + params.eps_B1 * params.gamma_B1,
        shared + params.eps_B1 * params.gamma_B2,
    )


@dataclass(frozen=True, slots=True)
class BoundReport:
    """All bound values for one parameter set, plus their minimum."""

    bound_A: float
    bound_B1: float
    bound_B2: float
    bound_combined_stated: float
    bound_combined_proof: float
    best: float

    def __post_init__(self) -> None:
        values = (
            self.bound_A,
            self.bound_B1,
            self.bound_B2,
            self.bound_combined_stated,
            self.bound_combined_proof,
        )
        for field, value in zip(
            ("bound_A", "bound_B1", "bound_B2", "bound_combined_stated",
             "bound_combined_proof", "best"),
            values + (self.best,),
        ):
            value = float(value)
            if math.isnan(value) or value < 0.0:
                raise ValidationError(f"{field} must be >= 0, got {value!r}")
            object.__setattr__(self, field, value)
        if abs(self.best - min(values)) > 1e-12:
            raise ValidationError("best must be the minimum of the five bounds")


def bound_report_from_params(params: StructureParams) -> BoundReport:
    """Evaluate every bound at the given parameters."""
    stated, proof = bound_combined(params)
    values = (bound_A(params), bound_B1(params), bound_B2(params), stated, proof)
    return BoundReport(
        bound_A=values[0],
        bound_B1=values[1],
        bound_B2=values[2],
        bound_combined_stated=stated,
        bound_combined_proof=proof,
        best=min(values),
    )


def bound_report(model: ReducedModel) -> BoundReport:
    """Evaluate every bound at the model's tight structure parameters."""
    return bound_report_from_params(structure_params(model))


@dataclass(frozen=True, slots=True)
class IndependenceDiagnostics:
    """Deviation of a joint from three conditional-independence cases.

    case1  y independent of (v, vhat) given l        -> gaps coincide
    case2  y independent of vhat given (v, l)        -> error <= 2 max(p0, p1)
    case3  y independent of v given (vhat, l)        -> error <= 2 max(r0, r1)

    Each deviation is the largest absolute difference between the fully
    conditioned outcome rate and the corresponding coarser rate; a case holds
    when its deviation is within ``tol``. ``bound_case2``/``bound_case3``
    carry the implied error bound when their case holds (None otherwise).
    ``gap_error`` is |G - G_hat| computed directly from the joint; when case 1
    holds it is guaranteed within ``4 * tol``.
    """

    tol: float
    case1_deviation: float
    case2_deviation: float
    case3_deviation: float
    case1_holds: bool
    case2_holds: bool
    case3_holds: bool
    bound_case2: float | None
    bound_case3: float | None
    gap_error: float


def independence_diagnostics(
    joint: FullJoint, tol: float = 1e-9
) -> IndependenceDiagnostics:
    """Measure how far a joint is from each independence case.

    Requires positive mass on every (v, vhat, l) conditioning event;
    :class:`ZeroMassCondition` propagates from the underlying queries
    otherwise. ``tol`` defaults to a float-rounding allowance appropriate for
    exactly constructed joints; fitted joints warrant a larger value.
    """
    tol = float(tol)
    if math.isnan(tol) or not (0.0 <= tol <= 1.0):
        raise ValidationError(f"tol must lie in [0, 1], got {tol!r}")

    fine = {
        (v, vhat, l): conditional_prob(joint, {"y": 1}, {"v": v, "vhat": vhat, "l": l})
        for v in (0, 1)
        for vhat in (0, 1)
        for l in (0, 1)
    }
    by_l = {l: conditional_prob(joint, {"y": 1}, {"l": l}) for l in (0, 1)}
    by_v = {
        (v, l): conditional_prob(joint, {"y": 1}, {"v": v, "l": l})
        for v in (0, 1)
        for l in (0, 1)
    }
    by_vhat = {
        (vhat, l): conditional_prob(joint, {"y": 1}, {"vhat": vhat, "l": l})
        for vhat in (0, 1)
        for l in (0, 1)
    }

    dev1 = max(abs(q - by_l[l]) for (_, _, l), q in fine.items())
    dev2 = max(abs(q - by_v[(v, l)]) for (v, _, l), q in fine.items())
    dev3 = max(abs(q - by_vhat[(vhat, l)]) for (_, vhat, l), q in fine.items())
    holds1, holds2, holds3 = dev1 <= tol, dev2 <= tol, dev3 <= tol

    bound2 = bound3 = None
    if holds2:
        bound2 = 2.0 * max(
            conditional_prob(joint, {"v": 0}, {"vhat": 1, "l": l}) for l in (0, 1)
        )
    if holds3:
        bound3 = 2.0 * max(
            conditional_prob(joint, {"vhat": 0}, {"v": 1, "l": l}) for l in (0, 1)
        )

    gap_error = gaps_from_joint(joint).error
    if holds1 and gap_error > 4.0 * tol + 1e-12:
        raise ValidationError(
            f"internal inconsistency: case 1 holds at tol {tol!r} but the gaps "
            f"differ by {gap_error!r}"
        )
    return IndependenceDiagnostics(
        tol=tol,
        case1_deviation=dev1,
        case2_deviation=dev2,
        case3_deviation=dev3,
        case1_holds=holds1,
        case2_holds=holds2,
        case3_holds=holds3,
        bound_case2=bound2,
        bound_case3=bound3,
        gap_error=gap_error,
    )
