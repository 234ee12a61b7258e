"""Exception hierarchy shared by all modules."""


class FbmPitmanError(Exception):
    """Base class for errors raised by this package."""


class ConfigInvalid(FbmPitmanError, ValueError):
    """A run configuration or argument violates a precondition."""


class ParameterOutOfRange(ConfigInvalid):
    """A numeric parameter lies outside its admissible domain."""


class NumericalError(FbmPitmanError, ArithmeticError):
    """A numerical routine failed an internal consistency check."""


class EigenvalueNegative(NumericalError):
    pass


class CovarianceNotPSD(NumericalError):
    pass


class GridTooLarge(ConfigInvalid):
    pass


class DegenerateMass(NumericalError):
    pass


class QuadratureNotConverged(NumericalError):
    pass


class BracketFailure(NumericalError):
    pass
