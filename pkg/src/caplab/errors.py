"""Exception types shared across caplab."""


class CaplabError(ValueError):
    pass


class LayoutError(CaplabError):
    """Unknown factor label or mismatched dimensions."""


class InvalidDimensionError(CaplabError):
    pass


class NumericalValidityError(CaplabError):
    """An input fails a numerical validity check (hermiticity, unitarity, norm)."""


class InvalidCutError(CaplabError):
    pass


class UnsupportedDimensionError(CaplabError):
    pass


class InvalidEnsembleError(CaplabError):
    pass


class PreconditionError(CaplabError):
    """A construction's algebraic precondition does not hold.

    The offending residual is kept on ``residual`` so callers can report it.
    """

    def __init__(self, message, residual):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual
