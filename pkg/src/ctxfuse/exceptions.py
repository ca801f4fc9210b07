"""Exception hierarchy shared across the package."""

from __future__ import annotations


class CtxFuseError(Exception):
    """Base class for all errors raised by ctxfuse."""


class InputError(CtxFuseError, ValueError):
    """An argument violates a documented precondition."""


class ModelConfigError(CtxFuseError, ValueError):
    """Model parameters are malformed (non-stochastic rows, bad shapes, ...)."""


class UndefinedFusionError(InputError):
    """The normalized fusion weights are undefined (alpha == -1)."""


class UnsupportedModeError(InputError):
    """The requested decoding mode cannot run with the given arguments."""


class BudgetExceededError(CtxFuseError, ValueError):
    """An exhaustive search would exceed its tractability budget."""


class EvaluationSetupError(CtxFuseError, ValueError):
    """A metric cannot be computed from the given corpus (e.g. no reference entities)."""


class DatasetError(CtxFuseError, ValueError):
    """A dataset line failed to parse or validate.

    ``line`` is 1-based; ``field`` names the offending record field when known.
    """

    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class DecodeError(CtxFuseError, RuntimeError):
    """A model query failed during decoding; ``step`` is the 0-based decode step."""

    def __init__(self, message: str, step: int, record_id: str | None = None):
        self.message = message
        self.step = step
        self.record_id = record_id
        tag = f"record {record_id!r}, " if record_id is not None else ""
        super().__init__(f"{tag}step {step}: {message}")
