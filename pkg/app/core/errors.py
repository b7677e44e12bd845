"""Exception hierarchy shared by the sampler, harness and command line."""


class PndaError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class ConfigError(PndaError, ValueError):
    """Configuration file missing, unparsable or failing validation."""

    exit_code = 2


class ShapeError(PndaError, ValueError):
    """Array or tensor with a shape the operation cannot accept."""

    exit_code = 2


class NumericalError(PndaError):
    """Training produced a non-finite loss."""

    exit_code = 3

    def __init__(self, message: str, diagnostics: dict = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class TuningCriterionError(PndaError):
    """Rotation accuracy after Step 2 drifted away from the Step 1 accuracy."""

    exit_code = 4
