"""Exception types shared across the package."""


class RaildeskError(Exception):
    """Base class for all raildesk errors."""


class MalformedDocument(RaildeskError):
    """Scenario document violates the schema or an invariant."""


class DuplicateId(MalformedDocument):
    pass


class DanglingReference(MalformedDocument):
    pass


class NonPositiveLength(MalformedDocument):
    pass


class UnknownNode(RaildeskError):
    pass


class UnknownSection(RaildeskError):
    pass


class UnknownArea(RaildeskError):
    pass


class UnknownBoundaryNode(RaildeskError):
    pass


class NoFeasiblePath(RaildeskError):
    """A train's route is unavailable for the full horizon."""


class EmptyChain(RaildeskError):
    pass


class InfeasibleChain(RaildeskError):
    """No velocity profile fits the chain at all."""


class InfeasibleProfile(RaildeskError):
    """Profile cannot be driven on the given chain."""


class InfeasibleInput(RaildeskError):
    """A train has no route or profile alternative at all."""


class CycleDetected(RaildeskError):
    """Fixed order decisions are mutually inconsistent."""


class InvalidTransition(RaildeskError):
    pass


class FeedbackAlreadySet(RaildeskError):
    pass


class UnpartitionableNetwork(RaildeskError):
    pass
