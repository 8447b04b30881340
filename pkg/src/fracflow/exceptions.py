"""Exception and warning types shared across the package."""


class GeometryError(ValueError):
    """Input geometry violates a structural requirement (non-simple curve,
    inconsistent indicator, impossible construction, ...)."""


class CurveTooSmallError(GeometryError):
    """Curve is below the resolvable size; callers treat this as extinction."""


class AccuracyError(RuntimeError):
    """A quadrature did not reach the requested tolerance.

    Carries the best available partial result in ``partial`` when one exists.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class InfeasibleParamsError(ValueError):
    """Parameter search could not satisfy every constraint.

    ``violations`` lists the constraints that failed, most binding first.
    """

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class CornerWarning(UserWarning):
    """Curvature was requested at a node that looks like an intentional corner."""
