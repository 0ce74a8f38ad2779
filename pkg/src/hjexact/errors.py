"""Exception hierarchy shared by all modules."""


class HJExactError(Exception):
    """Base class for every error raised by the package."""


class DimensionMismatch(HJExactError, ValueError):
    pass


class SingularPoint(HJExactError, ValueError):
    pass


class NonFinite(HJExactError, ArithmeticError):
    pass


class GridTooSmall(HJExactError, ValueError):
    pass


class EmptyInterior(HJExactError, ValueError):
    pass


class InconsistentGrids(HJExactError, ValueError):
    pass


class QuadratureTooCoarse(HJExactError, ValueError):
    pass


class BoundaryLeak(HJExactError, RuntimeError):
    pass


class ConfigParse(HJExactError, ValueError):
    """Invalid run configuration; the message names the offending key path."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


class JobFailure(HJExactError, RuntimeError):
    pass
