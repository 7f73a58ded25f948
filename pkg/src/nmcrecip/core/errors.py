"""Exception types. The CLI maps these onto exit codes."""


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class ModelError(ValueError):
    """Invalid model parameters (nonpositive rates, malformed tables)."""


class InputError(ValueError):
    """Unusable input data (empty path source, malformed files)."""


class InsufficientDataError(InputError):
    """Too few matching samples for an estimator."""


class TieError(ValueError):
    """Two jump streams share a jump instant."""


class NumericError(ArithmeticError):
    """A numerical procedure failed (solver, bisection, underflow)."""


class SimulationError(NumericError):
    """A simulated path left the state window of its model."""


class AcceptanceError(NumericError):
    """Rejection sampling ran out of tries."""


class DegenerateConditioningError(NumericError):
    """An h-transform was evaluated where the harmonic function vanishes."""
