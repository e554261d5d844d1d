"""Exception types shared across the solver."""


class SolverError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(SolverError):
    """Malformed instance or solution file; message carries the line number."""


class ConfigError(SolverError):
    """Invalid configuration value or combination."""


class InfeasibleInstanceError(SolverError):
    """A customer cannot be served even alone in a fresh route."""


class InfeasibleActionError(SolverError):
    """An action violating the feasibility mask was applied to a state."""


class RepairLimitError(SolverError):
    """A partial solution has more open routes than the repair operator accepts."""


class CheckpointError(SolverError):
    """Checkpoint file is corrupt or does not match the model configuration."""


class TrainingError(SolverError):
    """Non-finite loss or gradient encountered during training."""
