"""Error types raised across the package, grouped by subsystem."""


class MedirelayError(Exception):
    """Base class for every error this package raises on purpose."""


# -- record model ------------------------------------------------------------

class RecordInvalid(MedirelayError):
    pass


class EmptyChiefComplaint(RecordInvalid):
    pass


class MissingProblemId(RecordInvalid):
    pass


class EmptyObjectiveItem(RecordInvalid):
    pass


class AttachmentClassMismatch(RecordInvalid):
    pass


class ChecksumMismatch(MedirelayError):
    pass


# -- tier store / archive volumes --------------------------------------------

class NotFound(MedirelayError):
    pass


class MissingBlob(MedirelayError):
    pass


class TierSealed(MedirelayError):
    pass


class CorruptPayload(MedirelayError):
    pass


class OverlappingVolume(MedirelayError):
    pass


# -- simulator ----------------------------------------------------------------

class MalformedScenario(MedirelayError):
    pass


# -- portal workflow ----------------------------------------------------------

class WorkflowError(MedirelayError):
    pass


class InvalidEmail(WorkflowError):
    pass


class EmailTaken(WorkflowError):
    pass


class TokenInvalid(WorkflowError):
    pass


class TokenExpired(WorkflowError):
    pass


class TokenUsed(WorkflowError):
    pass


class NotAdmin(WorkflowError):
    pass


class WrongState(WorkflowError):
    pass


class NotActive(WorkflowError):
    pass


class OverlappingOfferings(WorkflowError):
    pass


class ServiceDisabled(WorkflowError):
    pass


class SlotTaken(WorkflowError):
    pass


class InsufficientCredit(WorkflowError):
    pass


class IllegalTransition(WorkflowError):
    pass


class NotYourBooking(WorkflowError):
    pass


class WrongStatus(WorkflowError):
    pass


class UnknownCategory(WorkflowError):
    pass


class NonPositiveAmount(WorkflowError):
    pass


# -- service ------------------------------------------------------------------

class ConfigInvalid(MedirelayError):
    pass


class DataDirLocked(MedirelayError):
    pass


class PortUnavailable(MedirelayError):
    pass


class BadCredentials(MedirelayError):
    pass


class SessionInvalid(MedirelayError):
    pass


class ServiceUnavailable(MedirelayError):
    pass
