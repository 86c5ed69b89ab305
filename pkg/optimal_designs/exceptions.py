"""
Errors raised by optimal_designs.
"""


class OptimalDesignError(ValueError):
    """
    Base class for every error raised by this package.
    """


class DimensionOutOfRange(OptimalDesignError):
    pass


class DimensionMismatch(OptimalDesignError):
    pass


class InvalidRegion(OptimalDesignError):
    pass


class GridTooSmall(OptimalDesignError):
    pass


class GridTooLarge(OptimalDesignError):
    pass


class SingularInformation(OptimalDesignError):
    """
    The information matrix is not numerically positive definite.

    Usually the model's regressors do not span R^p on the support of the density.
    """


class KLUndefined(OptimalDesignError):
    pass


class MonotonicityViolation(OptimalDesignError):
    pass


class DegenerateRing(OptimalDesignError):
    pass


class UnknownPreset(OptimalDesignError):
    pass


class ConfigurationError(OptimalDesignError):
    """
    A run configuration could not be read or is inconsistent.
    """

    def __init__(self, message, filename=None, line=None):
        """
        Keep the file and line the problem was found at, when known.
        """
        self.filename = filename
        self.line = line
        if filename and line:
            message = f'{filename}:{line}: {message}'
        elif filename:
            message = f'{filename}: {message}'
        super().__init__(message)
