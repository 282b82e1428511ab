"""Exception hierarchy shared by every lakelet subsystem.

All domain errors derive from LakeError so the CLI can map any of them to
exit code 1; usage errors are left to argparse (exit code 2).
"""


class LakeError(Exception):
    """Base class for all domain errors."""


# storage
class AccessDenied(LakeError):
    pass


class NotFound(LakeError):
    pass


class StorageFull(LakeError):
    pass


# catalog
class DuplicateEntry(LakeError):
    pass


class UnknownEntity(LakeError):
    pass


class CycleDetected(LakeError):
    pass


# ingestion
class NegativeInterval(LakeError):
    pass


class IoFailure(LakeError):
    def __init__(self, path, cause=""):
        super().__init__(f"cannot read {path}: {cause}" if cause else f"cannot read {path}")
        self.path = str(path)


class BindFailure(LakeError):
    pass


# security
class InvalidPrincipal(LakeError):
    pass


class TicketExpired(LakeError):
    pass


class BadSignature(LakeError):
    pass


class InvalidPolicy(LakeError):
    pass


# scheduler
class UnknownJob(LakeError):
    pass


class IllegalState(LakeError):
    pass


class InvalidSpec(LakeError):
    pass


# analytics
class KTooLarge(LakeError):
    pass


class DimensionMismatch(LakeError):
    pass


class EmptyTable(LakeError):
    pass


class AllConstant(LakeError):
    pass


class ClusterTooSmall(LakeError):
    pass


class SingleClass(LakeError):
    pass


class EmptyHoldout(LakeError):
    pass


class ModelNotCertified(LakeError):
    pass


class NoCandidates(LakeError):
    pass
