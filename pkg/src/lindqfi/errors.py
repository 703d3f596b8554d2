"""Exception hierarchy.

Everything raised on purpose derives from ``LindqfiError``.  Numeric guards
(``NumericGuard``) map to CLI exit status 3, configuration problems to 2.
"""


class LindqfiError(Exception):
    pass


class ConfigError(LindqfiError):
    pass


class NumericGuard(LindqfiError):
    pass


# operator-core
class NotHermitian(NumericGuard):
    pass


class NotPSD(NumericGuard):
    pass


class NotState(NumericGuard):
    pass


class UnsupportedRHS(NumericGuard):
    pass


class BadSubsystem(LindqfiError):
    pass


# dissipation-model
class ModelEvaluation(NumericGuard):
    pass


class DegenerateSpectrum(NumericGuard):
    pass


class GaugeAlignment(NumericGuard):
    pass


class StepTooLarge(NumericGuard):
    pass


class NotHermitianJumps(LindqfiError):
    pass


# qfi-engine
class KernelMismatch(NumericGuard):
    pass


class DimensionMismatch(LindqfiError):
    pass


class NotRateOnly(LindqfiError):
    pass


class ZeroRate(NumericGuard):
    pass


# collisional-oracle / scenarios
class DimensionGuard(NumericGuard):
    pass


# rpm-protocol
class NotDistinguishable(NumericGuard):
    def __init__(self, message, offending=None):
        super().__init__(message)
        self.offending = offending if offending is not None else []


class NotShortTime(NumericGuard):
    pass


class DarkChannel(LindqfiError):
    pass


# uhlmann-gap
class BudgetExceeded(NumericGuard):
    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


# scenarios
class BadIndex(LindqfiError):
    pass


class OddN(LindqfiError):
    pass


class GridTooCoarse(NumericGuard):
    pass


class FitDegenerate(NumericGuard):
    pass
