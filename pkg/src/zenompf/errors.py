"""Exception hierarchy.

Each family carries the process exit code the command line maps it to.
"""


class ZenoError(Exception):
    exit_code = 1


# -- parse / validation (exit 2) ---------------------------------------------

class ValidationError(ZenoError, ValueError):
    exit_code = 2


class DimensionError(ValidationError):
    pass


class ParseError(ValidationError):
    def __init__(self, message, lineno=None, path=None):
        self.lineno = lineno
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if lineno is not None:
            where += f"{lineno}:"
        super().__init__(f"{where} {message}" if where else message)


class TruncationError(ValidationError):
    pass


class DegenerateStateError(ValidationError):
    pass


class ConditioningError(ValidationError):
    pass


# -- spectral (exit 3) -------------------------------------------------------

class SpectralError(ZenoError):
    exit_code = 3


class GapViolationError(SpectralError):
    pass


class NonDiagonalizablePeripheryError(SpectralError):
    pass


class IrrationalPhaseError(SpectralError):
    pass


class NonErgodicError(SpectralError):
    pass


class ContourHitsSpectrumError(SpectralError):
    pass


class EpsilonExceededError(SpectralError):
    pass


# -- numerical (exit 4) ------------------------------------------------------

class NumericalError(ZenoError, ArithmeticError):
    exit_code = 4


class NumericalInstabilityError(NumericalError):
    pass


class FitDegenerateError(NumericalError):
    pass


class InsufficientDataError(NumericalError):
    pass


# -- acceptance (exit 5) -----------------------------------------------------

class AcceptanceFailure(ZenoError):
    exit_code = 5
