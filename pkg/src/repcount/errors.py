"""Exception types raised by repcount."""


class RepCountError(Exception):
    """Base class for all repcount errors."""


class FlowFormatError(RepCountError, ValueError):
    pass


class BadMagic(FlowFormatError):
    pass


class Truncated(FlowFormatError):
    pass


class NonFinite(FlowFormatError):
    pass


class MaskFormatError(RepCountError, ValueError):
    pass


class InvalidKernelSpec(RepCountError, ValueError):
    pass


class FieldTooSmall(RepCountError, ValueError):
    pass


class EmptyMask(RepCountError, ValueError):
    pass


class DimensionMismatch(RepCountError, ValueError):
    pass


class EmptySequence(RepCountError, ValueError):
    pass


class InvalidParams(RepCountError, ValueError):
    pass


class BadAnnotation(RepCountError, ValueError):
    pass


class WindowTooLarge(RepCountError, ValueError):
    pass


class SignalTooShort(RepCountError, ValueError):
    pass


class DegeneratePower(RepCountError, ValueError):
    pass


class AllChannelsDegenerate(RepCountError, ValueError):
    pass


class LengthMismatch(RepCountError, ValueError):
    pass


class ZeroTruth(RepCountError, ValueError):
    pass


class CorpusFormat(RepCountError, ValueError):
    pass


class ConfigError(RepCountError, ValueError):
    pass
