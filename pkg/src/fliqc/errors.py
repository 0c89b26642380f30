"""Exception types shared across the toolkit."""


class FliqcError(Exception):
    """Base class for toolkit errors."""


class RankDeficiencyError(FliqcError):
    """Undamped pseudo-inverse requested for a rank-deficient Jacobian."""


class DegenerateNormalError(FliqcError):
    """Witness point coincides with an obstacle center; no normal exists."""


class NonConvexError(FliqcError):
    """A matrix required to be symmetric positive definite is not."""


class ProtocolError(FliqcError):
    """A wire message failed schema validation or carried an unknown tag."""


class ScenarioValidationError(FliqcError):
    """A scenario or model file failed validation.

    The offending field path is kept in ``field`` for error reporting.
    """

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")
