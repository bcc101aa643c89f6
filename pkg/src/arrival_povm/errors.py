"""Exception hierarchy shared by all modules."""


class ArrivalPOVMError(Exception):
    pass


class ZeroVector(ArrivalPOVMError, ValueError):
    pass


class NonHermitianInput(ArrivalPOVMError, ValueError):
    pass


class GridMismatch(ArrivalPOVMError, ValueError):
    pass


class DirectionNotFound(ArrivalPOVMError, KeyError):
    pass


class InvalidPOVM(ArrivalPOVMError, ValueError):
    pass


class TooFewDirections(ArrivalPOVMError, ValueError):
    pass


class MissingAxis(ArrivalPOVMError, ValueError):
    pass


class MissingPerpendicularDirection(ArrivalPOVMError, ValueError):
    pass


class InfeasibleGrid(ArrivalPOVMError, ValueError):
    pass


class ProblemTooLarge(ArrivalPOVMError, ValueError):
    pass


class NodeProximity(ArrivalPOVMError, RuntimeError):
    """Too many trajectories came within the near-node guard of the density."""

    def __init__(self, message, counts=None):
        super().__init__(message)
        self.counts = counts or {}


class DidNotConverge(ArrivalPOVMError, RuntimeError):
    """Raised by strict fits; the partial result is kept on ``.result``."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result
