"""Exception hierarchy shared by all solver layers."""


class SiraError(Exception):
    """Base class for library errors."""


class MalformedInputError(SiraError):
    """A Matrix Market file could not be parsed."""

    def __init__(self, msg, line=None):
        self.line = line
        if line is not None:
            msg = f"line {line}: {msg}"
        super().__init__(msg)


class DimensionError(SiraError, ValueError):
    """Operand shapes do not agree."""


class ConvergenceError(SiraError):
    """An iteration failed to converge within its budget."""


class SubspaceBreakdown(SiraError):
    """The expansion vector lies in the current subspace.

    The caller should treat the subspace as invariant and stop expanding.
    """

    def __init__(self, msg, norm_after=0.0):
        self.norm_after = norm_after
        super().__init__(msg)


class ZeroPivotError(SiraError):
    """Incomplete factorization hit an exactly zero pivot."""

    def __init__(self, row):
        self.row = row
        super().__init__(f"zero pivot in row {row}; retry with a smaller droptol")


class NearSingularProjection(SiraError):
    """``y^H M^{-1} y`` is numerically zero, so the projected preconditioner is undefined."""


class ConfigError(SiraError, ValueError):
    """Invalid solver or experiment configuration."""
