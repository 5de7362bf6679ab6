"""Exception hierarchy.

Two families matter to the command line: input problems (exit code 2) and
detected property violations (exit code 3).
"""


class PmkError(Exception):
    pass


class InputError(PmkError):
    exit_code = 2


class PropertyViolation(PmkError):
    exit_code = 3


# planar-core
class MalformedRotation(InputError):
    pass


class GraphFormatError(InputError):
    pass


class InvalidParams(InputError):
    pass


class NonPlanarRotation(PropertyViolation):
    pass


# separator
class NotBiconnected(InputError):
    pass


class TreeNotSpanning(InputError):
    pass


class Disconnected(InputError):
    pass


# compression
class SourcesNotOnFace(InputError):
    pass


class UnknownTarget(InputError):
    pass


class InconsistentMembership(PropertyViolation):
    pass


# coreset
class NonpositiveParam(InputError):
    pass


class SourceGapExceeded(InputError):
    pass


class PairNeverCoClustered(PropertyViolation):
    pass


# fast tuples
class DriverViolation(PropertyViolation):
    pass


class HashCollisionDetected(PropertyViolation):
    pass


class RetriesExhausted(PropertyViolation):
    pass


# bdd
class SeparatorFailure(PropertyViolation):
    pass


# congest
class MessageOverflow(PropertyViolation):
    pass


class NonTermination(PropertyViolation):
    pass


class DisconnectedPart(InputError):
    pass


# cli
class SpecError(InputError):
    pass


class IoError(InputError):
    pass
