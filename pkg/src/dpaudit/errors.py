"""Exception types shared across the toolkit."""


class AuditError(Exception):
    """Base class for all dpaudit errors."""


class ZeroQualifiedGroup(AuditError):
    """A group has no qualified members, so per-bin probabilities are undefined."""


class TooFewGroups(AuditError):
    """A fairness gap is only defined over two or more groups."""


class GroupCountMismatch(AuditError):
    """Per-group vectors disagree in length, or groups are missing/duplicated."""


class InvalidEpsilon(AuditError):
    """Privacy parameter must be strictly positive (and match the noise scale)."""


class InvalidParameter(AuditError):
    """A planner or experiment parameter is outside its valid range."""


class EpsilonTooSmall(InvalidParameter):
    """The private sample bound assumes epsilon > alpha / 2."""


class BudgetExhausted(AuditError):
    """Charging the requested epsilon would overspend the privacy budget."""

    def __init__(self, requested: float, remaining: float):
        self.requested = requested
        self.remaining = remaining
        super().__init__(
            f"requested epsilon {requested} exceeds remaining budget {remaining}"
        )


class InvalidMix(AuditError):
    """Group proportions or qualification rates do not form valid probabilities."""


class InsufficientPopulation(AuditError):
    """The requested audience is larger than the matching stratum."""

    def __init__(self, requested: int, available: int):
        self.requested = requested
        self.available = available
        super().__init__(
            f"requested {requested} users but only {available} are available"
        )


class EmptyAudience(AuditError):
    """Scoring needs at least one audience member."""


class MixedGroupAudience(AuditError):
    """An audience must be homogeneous in the sensitive attribute."""


class UnknownAudience(AuditError):
    """The referenced audience handle was never uploaded."""


class DuplicateAudienceHandle(AuditError):
    """Audience handles are unique per auditor."""


class InsufficientTrials(UserWarning):
    """Rate estimates below 100 trials are too noisy to interpret."""
