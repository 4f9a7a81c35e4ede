"""Exception types shared across the package."""


class FriIdsError(Exception):
    """Base class for all errors raised by friids."""


class RuleBaseError(FriIdsError, ValueError):
    """A rule base or partition violates its structural invariants."""


class RuleFileError(RuleBaseError):
    def __init__(self, message, line_no=None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class DimensionMismatch(FriIdsError, ValueError):
    pass


class OutOfUniverse(FriIdsError, ValueError):
    """Raised in strict mode when an observation falls outside a universe."""


class ZeroDistanceConflict(FriIdsError):
    """Two rules with different consequents both sit at distance zero."""


class AllZeroCounts(FriIdsError, ValueError):
    pass


class UnknownFeature(FriIdsError, KeyError):
    def __str__(self):
        return f"unknown feature: {self.args[0]!r}"


class EmptyTrainingSet(FriIdsError, ValueError):
    pass


class DegenerateTargets(UserWarning):
    """All training targets are equal; the learner falls back to one rule."""


class EmptyMatrix(FriIdsError, ValueError):
    pass


class MissingColumn(FriIdsError, ValueError):
    pass


class UnreadableFile(FriIdsError, OSError):
    pass


class ConfigError(FriIdsError, ValueError):
    pass
