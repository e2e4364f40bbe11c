"""
Unit matching.

One univariate least-squares regression of the centered treated path on each
centered control path: slope theta_j, intercept b_j = mean(y1) - theta_j mean(y_j).
"""
import logging

import numpy as np

from .exceptions import AllUnitsDegenerate
from .models import Model
from .panel import CenteredPanel

logger = logging.getLogger(__name__)


class MatchedControl(Model):
    """Matching fit of the treated unit on one control unit."""
    unit: int
    label: str
    theta: float
    intercept: float
    fitted_pre: np.ndarray
    residual_pre: np.ndarray
    excluded: bool = False

    class Meta:
        name = 'matched_control'


def match_unit(cp: CenteredPanel, j: int) -> MatchedControl:
    """match_unit.

    Fits theta_j = (y_j'y_j)^-1 y_j'y_1 on centered data for the control
    whose panel column index is ``j``. Degenerate controls come back with
    ``excluded=True``, ``theta=0`` and ``intercept=mean(y1)``.
    """
    pos = cp.position(j)
    label = cp.source.unit_labels[int(j)]
    yj = cp.y0c[:, pos]
    if cp.degenerate[pos]:
        return MatchedControl(
            unit=int(j),
            label=label,
            theta=0.0,
            intercept=cp.y1_mean,
            fitted_pre=np.zeros_like(cp.y1c),
            residual_pre=cp.y1c.copy(),
            excluded=True
        )
    theta = float(yj @ cp.y1c) / float(yj @ yj)
    fitted = theta * yj
    return MatchedControl(
        unit=int(j),
        label=label,
        theta=theta,
        intercept=cp.y1_mean - theta * float(cp.control_means[pos]),
        fitted_pre=fitted,
        residual_pre=cp.y1c - fitted,
        excluded=False
    )


def match_all(cp: CenteredPanel) -> list:
    """match_all.

    One MatchedControl per control unit, in unit order.

    Raises:
        AllUnitsDegenerate: every control is constant over the pre-period.
    """
    matched = [match_unit(cp, int(j)) for j in cp.controls]
    if matched and all(m.excluded for m in matched):
        raise AllUnitsDegenerate(
            "every control unit is constant over the pre-period"
        )
    return matched


def fitted_matrix(matched: list) -> np.ndarray:
    """Columns theta_j * y_jc of the matched controls (zero for excluded units)."""
    if not matched:
        return np.zeros((0, 0))
    return np.column_stack([m.fitted_pre for m in matched])


def thetas(matched: list) -> np.ndarray:
    return np.array([m.theta for m in matched], dtype=float)
