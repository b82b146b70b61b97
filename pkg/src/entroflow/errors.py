"""Exception hierarchy shared by the solver modules and the CLI."""


class EntroflowError(Exception):
    """Base class for all errors raised by entroflow."""


class SolverFailure(EntroflowError, RuntimeError):
    """An inner iteration (root find, Newton, CG) hit its iteration cap."""


class StepFailure(SolverFailure):
    """A time step could not be completed, even after the retry protocol."""


class InvariantViolation(EntroflowError, AssertionError):
    """A proven discrete property failed numerically; indicates a bug."""


class PreconditionError(EntroflowError, ValueError):
    """An operation was called with inputs outside its documented domain."""


class ConfigError(EntroflowError, ValueError):
    """A run configuration is malformed or violates the data assumptions."""
