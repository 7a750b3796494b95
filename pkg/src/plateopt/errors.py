"""Exception types shared across the package."""


class InvalidArgument(ValueError):
    """Raised when an input violates a documented precondition."""


class GridMismatch(InvalidArgument):
    """Raised when two fields defined on different grids are combined."""


class NumericFailure(RuntimeError):
    """Raised when a linear or eigenvalue solve fails to reach its tolerance.

    Attributes
    ----------
    residual : float
        Last residual norm observed before giving up.
    """

    def __init__(self, message, residual=float("nan")):
        super().__init__(f"{message} (residual={residual:.3e})")
        self.residual = residual
