"""Exception taxonomy shared by all solver and analysis modules."""


class FrontrelaxError(Exception):
    """Base class for all library errors."""


class InputError(FrontrelaxError):
    """Invalid argument: dimension mismatch, out-of-range parameter, bad shape."""


class ConvergenceError(FrontrelaxError):
    """An iterative solver failed to converge.

    Carries the last residual, and for column-wise solvers the failing column.
    """

    def __init__(self, msg, residual=None, column=None):
        super().__init__(msg)
        self.residual = residual
        self.column = column


class AssumptionError(FrontrelaxError):
    """A spectral standing assumption fails for this model/grid.

    Raised e.g. when the discrete eigenvalue at zero is not simple.
    """


class DegenerateDenominatorError(FrontrelaxError):
    """The modulation denominator <psi, phi'(. - sigma)> dropped near zero."""


class SingularityError(FrontrelaxError):
    """A linear solve hit a (near-)singular matrix."""


class StabilityError(FrontrelaxError):
    """Time integration detected blow-up."""


class ValidityError(FrontrelaxError):
    """A quantity left its trusted window (torus wrap-around, dilated samples)."""


class ConfigError(FrontrelaxError):
    """Experiment configuration failed validation.

    ``path`` locates the offending field, e.g. ``"evolution.dt"``.
    """

    def __init__(self, msg, path=""):
        super().__init__(f"{path}: {msg}" if path else msg)
        self.path = path


class ReportError(FrontrelaxError):
    """Report assembly failed (missing or inconsistent artifacts)."""
