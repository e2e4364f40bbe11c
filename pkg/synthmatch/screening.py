"""
SIRS unit screening.

Ranks control units by a rank-indicator marginal statistic computed on the
raw pre-period outcomes and keeps the strongest ones when the donor pool is
too large for the pre-period length.
"""
import logging
import math
from typing import Union

import numpy as np

from .exceptions import InsufficientPeriods, InvalidKeepCount, ConfigError
from .fields import Field
from .models import Model
from .panel import PanelData

logger = logging.getLogger(__name__)

VARIANTS = ('paper_literal', 'standard_sirs')


class ScreeningReport(Model):
    """Screening statistics and the kept controls (column indices, strongest first)."""
    eta: np.ndarray
    kept: tuple
    kept_labels: tuple
    d: int
    variant: str = Field(default='paper_literal', choices=VARIANTS)

    class Meta:
        name = 'screening_report'


def sirs_statistics(panel: PanelData, variant: str = 'paper_literal') -> np.ndarray:
    """sirs_statistics.

    eta_j = mean_t [ (1/T0) sum_l X_j(t, l) 1{Y1_l < Y1_t} ]^2 over the
    pre-period, with X_j(t, l) = Y_jt for ``paper_literal`` and Y_jl for
    ``standard_sirs``. Returns one value per control, in panel order.
    """
    if variant not in VARIANTS:
        raise ConfigError(f"unknown screening variant {variant!r}, expected one of {VARIANTS}")
    t0 = panel.t0
    if t0 < 2:
        raise InsufficientPeriods(f"screening needs at least 2 pre-periods, got {t0}")
    y1 = panel.outcomes[:t0, panel.treated]
    y0 = panel.outcomes[:t0, panel.controls]
    # below[l, t] = 1{Y1_l < Y1_t}
    below = (y1[:, None] < y1[None, :]).astype(float)
    if variant == 'paper_literal':
        share = below.sum(axis=0) / t0
        inner = y0 * share[:, None]
    else:
        inner = below.T @ y0 / t0
    return np.mean(inner ** 2, axis=0)


def auto_keep(n_controls: int, t0: int) -> int:
    """Default keep-count min(J, floor(T0 / ln T0), T0 - 2), at least one."""
    d = n_controls
    if t0 > 1:
        d = min(d, int(math.floor(t0 / math.log(t0))))
    d = min(d, t0 - 2)
    return max(1, d)


def screen_units(
    panel: PanelData,
    d: Union[int, str] = 'auto',
    variant: str = 'paper_literal'
) -> ScreeningReport:
    """screen_units.

    Keeps the ``d`` controls with the largest statistics; ties go to the
    lower unit index.

    Raises:
        InvalidKeepCount: d < 1.
    """
    if d == 'auto' or d is None:
        keep = auto_keep(panel.n_controls, panel.t0)
    else:
        try:
            keep = int(d)
        except (TypeError, ValueError) as ex:
            raise InvalidKeepCount(f"keep count must be an integer or 'auto', got {d!r}") from ex
        if keep < 1:
            raise InvalidKeepCount(f"keep count must be at least 1, got {keep}")
    eta = sirs_statistics(panel, variant)
    controls = panel.controls
    # descending statistic, ascending index on ties
    order = np.lexsort((controls, -eta))
    keep = min(keep, controls.shape[0])
    kept = tuple(int(controls[k]) for k in order[:keep])
    report = ScreeningReport(
        eta=eta,
        kept=kept,
        kept_labels=tuple(panel.unit_labels[j] for j in kept),
        d=keep,
        variant=variant
    )
    logger.info(
        f"Screening kept {keep} of {controls.shape[0]} control units ({variant})"
    )
    return report
