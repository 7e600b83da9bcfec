"""Exception types raised across the package."""


class ZdcError(Exception):
    """Base class for all package errors."""


class NonStochasticRow(ZdcError, ValueError):
    pass


class Reducible(ZdcError, ValueError):
    pass


class Periodic(ZdcError, ValueError):
    pass


class NoConvergence(ZdcError, RuntimeError):
    pass


class InvalidCorrelation(ZdcError, ValueError):
    pass


class ZeroMassBin(ZdcError, ArithmeticError):
    """The realized channel symbol carries (numerically) zero belief mass."""

    def __init__(self, message, step=None):
        super().__init__(message if step is None else f"{message} (step {step})")
        self.step = step


class DimensionMismatch(ZdcError, ValueError):
    pass


class BudgetExceeded(ZdcError, ValueError):
    pass


class LatticeOverflow(ZdcError, OverflowError):
    pass


class ModeMismatch(ZdcError, ValueError):
    pass


class SymbolOutOfRange(ZdcError, IndexError):
    pass


class EmptyTable(ZdcError, ValueError):
    pass


class ConfigMismatch(ZdcError, ValueError):
    pass


class PolicyConfigMismatch(ZdcError, ValueError):
    pass


class NonPositiveInput(ZdcError, ValueError):
    pass


class InsufficientSupport(ZdcError, ValueError):
    pass


class ConfigParse(ZdcError, ValueError):
    pass


class SchemaError(ZdcError, ValueError):
    pass


class MissingMethod(ZdcError, KeyError):
    pass
