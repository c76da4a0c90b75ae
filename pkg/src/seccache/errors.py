"""Exception hierarchy for seccache."""


class SecCacheError(Exception):
    """Base class for all errors raised by this package."""


class FieldError(SecCacheError):
    pass


class ZeroInversion(FieldError, ZeroDivisionError):
    pass


class FieldTooSmall(FieldError):
    pass


class Singular(FieldError):
    pass


class ShapeMismatch(SecCacheError, ValueError):
    pass


class IndexOutOfRange(SecCacheError, IndexError):
    pass


class InvalidParams(SecCacheError, ValueError):
    """Scheme parameters outside the admissible range."""


class InvalidT(InvalidParams):
    pass


class InvalidCollusion(InvalidParams):
    pass


class AlignmentError(InvalidParams):
    pass


class InvalidDemand(SecCacheError, ValueError):
    pass


class DecodeFailure(SecCacheError):
    pass


class MissingDemand(SecCacheError, ValueError):
    pass


class TooManySets(SecCacheError):
    pass


class TooLarge(SecCacheError):
    pass


class DomainError(SecCacheError, ValueError):
    pass


class ContainerError(SecCacheError):
    """Malformed or corrupted scheme container."""
