"""Exception hierarchy.

Input errors (bad data, bad files, bad arguments) derive from ``InputError``
so the CLI can map them to exit code 2; everything else is a ``EffectError``.
"""


class EffectError(Exception):
    """Base class for all errors raised by this package."""


class InputError(EffectError, ValueError):
    """Malformed user input."""


# core
class LengthMismatchError(InputError):
    pass


class NegativeMassError(InputError):
    pass


class BadTotalError(InputError):
    pass


class BadPermutationError(InputError):
    pass


class SingularMatrixError(EffectError):
    pass


class InfeasibleMatrixError(EffectError):
    pass


# binary
class IdenticalDistributionsError(EffectError):
    pass


class DegenerateBoundsError(EffectError):
    pass


# solver
class EmptySupportError(InputError):
    pass


class SingularDError(EffectError):
    pass


# oracle
class SizeOverflowError(EffectError):
    pass


class NoFeasiblePointError(EffectError):
    pass


# synth
class RejectionExhaustedError(EffectError):
    pass


# ingest
class ParseError(InputError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnknownHeaderError(InputError):
    pass


class EmptyDatasetError(InputError):
    pass


class EmptyVariantError(InputError):
    pass


class DegenerateBinsError(InputError):
    pass


class DuplicateAssignmentError(InputError):
    pass


# serialization / cli
class SchemaError(InputError):
    def __init__(self, message: str, pointer: str = ""):
        self.pointer = pointer
        super().__init__(f"{pointer or '/'}: {message}")


class SupportMismatchError(InputError):
    pass
