"""Exception hierarchy shared by the library and the CLI."""


class MFLDError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class DimensionError(MFLDError, ValueError):
    pass


class NonFiniteError(MFLDError, ValueError):
    pass


class ConfigError(MFLDError, ValueError):
    exit_code = 2


class SolverError(MFLDError, ArithmeticError):
    pass


class DivergenceError(MFLDError, ArithmeticError):
    """Particle cloud blew up (bad step size or non-finite update)."""

    exit_code = 3

    def __init__(self, message, step=None, mean_w_sq=None):
        super().__init__(message)
        self.step = step
        self.mean_w_sq = mean_w_sq


class UndefinedAlignmentError(MFLDError, ValueError):
    """Alignment requested for a zero target or a zero kernel."""


class SnapshotFormatError(MFLDError, ValueError):
    exit_code = 4
