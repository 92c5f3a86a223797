"""Exception types raised by gap-gauge.

Every error the library raises deliberately derives from :class:`GapGaugeError`.
The CLI maps these onto its exit-code contract: validation and schema problems
exit 2, undefined quantities exit 3, sampler budget exhaustion exits 4.
"""

from __future__ import annotations

__all__ = [
    "GapGaugeError",
    "ValidationError",
    "ZeroMassCondition",
    "InconsistentMarginals",
    "MissingCell",
    "MissingColumn",
    "MalformedRow",
    "MixedSchema",
    "EmptyInput",
    "EmptySample",
    "RejectionBudgetExhausted",
    "AllReplicatesDegenerate",
]


class GapGaugeError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(GapGaugeError, ValueError):
    """A value, field, or file violates its declared contract.

    The message names the offending field or value so callers can report it.
    """


class ZeroMassCondition(GapGaugeError):
    """A conditional quantity is undefined because its conditioning event has
    probability (or count) zero.

    Carries the event description so the first undefined quantity can be named.
    """

    def __init__(self, event: str):
        self.event = event
        super().__init__(f"conditioning event has zero mass: {event}")


class InconsistentMarginals(ValidationError):
    """Supplied v/v-hat marginals disagree with a model's precision/recall
    parameters beyond tolerance, or cannot express them at all."""


class MissingCell(ValidationError):
    """An operation needs a confusion cell the model does not carry
    (the fourth outcome probability is optional and may be omitted)."""


class MissingColumn(ValidationError):
    """A dataset lacks a column the requested computation needs."""


class MalformedRow(ValidationError):
    """A data file row (or its header) cannot be parsed.

    ``line`` is the 1-based physical line number in the input.
    """

    def __init__(self, line: int, reason: str):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


class MixedSchema(ValidationError):
    """Optional columns must be uniformly present or uniformly empty; this
    file mixes both."""

    def __init__(self, line: int, reason: str):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


class EmptyInput(GapGaugeError):
    """A dataset or filter result contains no rows."""


class EmptySample(GapGaugeError):
    """A percentile was requested from an empty collection."""


class RejectionBudgetExhausted(GapGaugeError):
    """The constrained sampler failed to produce a valid model within its
    attempt budget.

    ``trial_index`` identifies the failing trial when raised from a Monte
    Carlo run (None when raised from a direct sampler call).
    """

    def __init__(self, max_rejections: int, trial_index: int | None = None):
        self.max_rejections = max_rejections
        self.trial_index = trial_index
        where = f" at trial {trial_index}" if trial_index is not None else ""
        super().__init__(
            f"no valid sample after {max_rejections} attempts{where}"
        )


class AllReplicatesDegenerate(GapGaugeError):
    """Every bootstrap replicate failed to produce an estimate."""
