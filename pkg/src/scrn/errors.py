"""Exception types raised by the simulator."""


class SCRNError(Exception):
    """Base class for all simulator errors."""


class ConfigInvalid(SCRNError, ValueError):
    pass


class ParseError(SCRNError, ValueError):
    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class NonBracketable(SCRNError, ValueError):
    """Target mean is outside the range the distribution family can reach."""


class InternalSamplingFailure(SCRNError, RuntimeError):
    pass


class RepairExhausted(SCRNError, RuntimeError):
    """Degree sums of two tiers could not be equalized within the redraw cap."""


class RejectionExhausted(SCRNError, RuntimeError):
    """Too many consecutive samples failed the mean-gap filter."""


class LengthMismatch(SCRNError, ValueError):
    pass


class ZeroDemand(SCRNError, ValueError):
    pass


class EmptyInput(SCRNError, ValueError):
    pass
