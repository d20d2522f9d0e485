"""Exception hierarchy shared by the simulator modules."""


class TermSimError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(TermSimError, ValueError):
    """An engine, precision or CLI configuration is invalid."""


class MalformedInputError(TermSimError, ValueError):
    """A datapath input violates the PE's operand contract."""


class ValidationError(TermSimError, ValueError):
    """Layer geometry or tensor shapes are inconsistent."""


class AccumulatorOverflowError(TermSimError, ArithmeticError):
    """The PE accumulator exceeded its dimensioned width."""


class ExactnessError(TermSimError, AssertionError):
    """An engine produced outputs that disagree with the reference convolution."""


class TraceFormatError(TermSimError, ValueError):
    """Base class for trace file parse errors."""


class MalformedHeaderError(TraceFormatError):
    pass


class ElementCountError(TraceFormatError):
    pass


class ElementRangeError(TraceFormatError):
    pass
