"""Exception hierarchy shared by all simulator modules."""


class MimError(Exception):
    """Base class for every simulator-specific error."""


# scene
class UnknownPatch(MimError):
    pass


class OutOfBounds(MimError):
    pass


# interconnect
class UnknownPort(MimError):
    pass


class UnknownModule(MimError):
    pass


class PortBusy(MimError):
    pass


class SelfCoupling(MimError):
    pass


class NotCoupled(MimError):
    pass


class AlreadyFull(MimError):
    pass


class WouldDetachAssembly(MimError):
    pass


class FixtureOccupied(MimError):
    pass


class Unrecognized(MimError):
    pass


class UnanchoredAssembly(MimError):
    pass


# locomotion
class UnknownFixture(MimError):
    pass


class NoPath(MimError):
    pass


class InvalidStart(MimError):
    pass


class IllegalStep(MimError):
    pass


# sensors
class NonPositiveDistance(MimError):
    pass


class OutOfRange(MimError):
    pass


class NotInView(MimError):
    pass


# inspection
class EmptyCloud(MimError):
    pass


class NoReachableSurface(MimError):
    pass


# verification
class InvalidArguments(MimError):
    pass


# maintenance
class NoArmOnToolPort(MimError):
    pass


class EmptySlot(MimError):
    pass


class LidClosed(MimError):
    pass


class NothingHeld(MimError):
    pass


class SlotOccupied(MimError):
    pass


class HandsFull(MimError):
    pass


class WrongTool(MimError):
    pass


class NotObserved(MimError):
    pass


# cli
class ConfigError(MimError):
    pass


class IoError(MimError):
    pass
