"""
Exceptions.

Every error raised by synthmatch derives from SMCError.
ValidationError covers bad inputs (usage errors); ComputationError covers
numerical failures on otherwise valid inputs.
"""
from typing import Any, Optional


class SMCError(Exception):
    """Base class for all synthmatch errors."""

    def __init__(self, message: str = '', payload: Optional[dict] = None, *args: Any):
        self.message = message
        self.payload = payload or {}
        super().__init__(message, *args)

    @property
    def name(self) -> str:
        return type(self).__name__

    def __str__(self) -> str:
        # single line, machine parsable: "<ErrorName>: <message>"
        msg = " ".join(str(self.message).split())
        return f"{self.name}: {msg}" if msg else self.name

    def __repr__(self) -> str:
        return f"<{self.name}({self.message!r})>"


## Input / usage errors
class ValidationError(SMCError):
    """Invalid input data or options."""


class MissingValue(ValidationError):
    """Empty, non-numeric or non-finite cell."""


class UnknownUnit(ValidationError):
    """A unit label (or index) that does not exist in the panel."""


class InvalidSplit(ValidationError):
    """Pre-period length outside 1 <= t0 < T."""


class DuplicateUnit(ValidationError):
    """Repeated unit label."""


class NegativeWeight(ValidationError):
    """Negative entry in a diagonal V."""


class LengthMismatch(ValidationError):
    """Inconsistent vector or matrix dimensions."""


class NoCovariates(ValidationError):
    """Covariate stacking requested on a panel without covariates."""


class ZeroVarianceCovariate(ValidationError):
    """A covariate is constant across units and cannot be rescaled."""


class InvalidKeepCount(ValidationError):
    """Screening keep-count below one."""


class ConfigError(ValidationError):
    """Invalid configuration file, environment or option."""


## Numerical errors
class ComputationError(SMCError):
    """A numerical step failed on valid input."""


class NotPsd(ComputationError):
    """Quadratic term has a negative curvature direction."""


class Diverged(ComputationError):
    """Solver produced a non-finite iterate."""


class RankDeficient(ComputationError):
    """Singular Gram matrix where a full-rank one is required."""


class InsufficientPeriods(ComputationError):
    """Not enough pre-treatment periods for the requested computation."""


class EmptyDonorPool(ComputationError):
    """No usable control unit left."""


class AllUnitsDegenerate(ComputationError):
    """Every control unit is constant over the pre-period."""


class TruthUnavailable(ComputationError):
    """Simulation ground truth required but not supplied."""
