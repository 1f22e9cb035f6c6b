"""Exception hierarchy shared by all mixfem modules."""


class MixfemError(Exception):
    """Base class for library errors."""


class InvalidArgumentError(MixfemError, ValueError):
    pass


class EmptySelectionError(MixfemError):
    pass


class UnsupportedCodimensionError(MixfemError):
    pass


class NestingDepthError(MixfemError):
    pass


class NoCommonParentError(MixfemError):
    pass


class AbsentMappingError(MixfemError):
    pass


class InconsistentViewError(MixfemError):
    pass


class UnsupportedElementError(MixfemError):
    pass


class UnsupportedDegreeError(MixfemError):
    pass


class DegenerateCellError(MixfemError):
    pass


class InvalidMeasureError(MixfemError):
    pass


class DimensionMismatchError(MixfemError, ValueError):
    pass


class SingularMatrixError(MixfemError):
    pass


class SolverError(MixfemError):
    pass


class FormError(MixfemError):
    """A single form defect.

    ``code`` is a stable identifier (see ``mixfem.forms.ErrorCode``) and
    ``integral`` the index of the offending integral, if any.
    """

    def __init__(self, code, message, integral=None):
        self.code = code
        self.message = message
        self.integral = integral
        where = "" if integral is None else f" (integral {integral})"
        super().__init__(f"[{code}]{where} {message}")


class FormValidationError(MixfemError):
    """Raised by :func:`mixfem.forms.check` with every defect found."""

    def __init__(self, errors):
        self.errors = list(errors)
        lines = "\n".join(f"  {e}" for e in self.errors)
        super().__init__(f"invalid form:\n{lines}")
