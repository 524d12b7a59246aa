"""Exception types shared across the package."""


class CqmKitError(Exception):
    """Base class for all library errors."""


class UnknownVariableError(CqmKitError, KeyError):
    """An assignment or expression references a variable that is not declared."""

    def __init__(self, variable_id):
        super().__init__(variable_id)
        self.variable_id = variable_id

    def __str__(self):
        return f"unknown variable {self.variable_id!r}"


class ModelValidationError(CqmKitError, ValueError):
    """A model violates a structural invariant (duplicate ids, bad bounds, ...)."""


class ModelFormatError(CqmKitError, ValueError):
    """A model document could not be parsed; the message carries line/field context."""


class UnsupportedEncodingError(CqmKitError, ValueError):
    """A constraint cannot be slack-encoded (e.g. non-integral coefficients)."""


class InfeasibleConstraintError(CqmKitError, ValueError):
    """A constraint admits no satisfying assignment over the declared domains."""


class MustBinarizeError(CqmKitError, ValueError):
    """An operation requires binary variables but got integer/continuous ones."""


class SizeLimitError(CqmKitError, ValueError):
    """An exhaustive operation exceeded its hard-coded size bound."""


class InvalidScheduleError(CqmKitError, ValueError):
    """An anneal schedule violates the weight or monotonicity contract."""


class GenerationError(CqmKitError, ValueError):
    """A problem generator could not satisfy its own feasibility guarantee."""


class UnsupportedOracleError(CqmKitError, ValueError):
    """An analytic oracle does not cover the requested instance class."""
