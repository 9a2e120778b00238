"""Exception hierarchy. Each family carries the CLI exit code it maps to."""


class QuditRCError(Exception):
    exit_code = 1


class ConfigError(QuditRCError, ValueError):
    exit_code = 2


class InvalidDimensionError(ConfigError):
    pass


class SolverError(QuditRCError, RuntimeError):
    exit_code = 3


class StiffnessError(SolverError):
    """Adaptive step size dropped below the minimum step."""


class DivergenceError(SolverError):
    """The integrated state became non-finite."""


class StateValidityError(SolverError):
    """A density matrix left the physical set beyond tolerance."""


class RidgeError(QuditRCError, ArithmeticError):
    exit_code = 4


class SingularSystemError(RidgeError):
    pass


class TaskFailure(RidgeError):
    """Every ridge parameter in a sweep failed."""


class SweepError(QuditRCError, RuntimeError):
    exit_code = 3


class ExportError(QuditRCError, OSError):
    exit_code = 5


class ExportKindError(QuditRCError, ValueError):
    """Requested plot kind or format does not fit the given result."""

    exit_code = 2
