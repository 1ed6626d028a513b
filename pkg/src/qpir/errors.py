"""Exception hierarchy shared by every qpir module."""


class QPIRError(ValueError):
    """Base class for all errors raised by qpir."""


class InvalidDimensionError(QPIRError):
    pass


class DegenerateInputError(QPIRError):
    pass


class DimensionMismatchError(QPIRError):
    pass


class UnknownLabelError(QPIRError):
    pass


class NonUnitaryError(QPIRError):
    pass


class InvalidStateError(QPIRError):
    """A vector or matrix that should be a quantum state is not one."""


class NoSolutionError(QPIRError):
    pass


class PreconditionError(QPIRError):
    pass


class IndexRangeError(QPIRError):
    pass


class MessageFileError(QPIRError):
    """Malformed message file; ``position`` locates the offending entry."""

    def __init__(self, position: str, reason: str):
        self.position = position
        self.reason = reason
        super().__init__(f"{position}: {reason}")


class EnumerationBoundError(QPIRError):
    pass
