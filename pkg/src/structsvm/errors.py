"""Exception types shared across the package."""


class StructSVMError(Exception):
    """Base class for library errors."""


class DegenerateSegment(StructSVMError):
    pass


class DuplicateLabel(StructSVMError):
    pass


class NonFiniteLoss(StructSVMError):
    pass


class ZeroGradient(StructSVMError):
    pass


class DomainError(StructSVMError, ValueError):
    pass


class InvalidParams(StructSVMError, ValueError):
    pass


class EmptyTruth(StructSVMError, ValueError):
    pass


class UnsupportedBackend(StructSVMError):
    pass


class Exhausted(StructSVMError):
    pass


class InconsistentQuery(StructSVMError, ValueError):
    pass


class NonPositiveLambda(StructSVMError, ValueError):
    pass


class InferenceFailure(StructSVMError):
    def __init__(self, index: int, cause: Exception):
        super().__init__(f"inference failed on example {index}: {cause}")
        self.index = index
        self.cause = cause


class LengthMismatch(StructSVMError, ValueError):
    pass


class InvalidLabel(StructSVMError, ValueError):
    pass


class InvalidNode(StructSVMError, ValueError):
    pass


class NotATree(StructSVMError, ValueError):
    pass


class UnsupportedDAG(StructSVMError, ValueError):
    pass


class InvalidHierarchy(StructSVMError, ValueError):
    pass
