"""
Placebo studies and report tables.
"""
import logging
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from ..baselines import fit_method
from ..exceptions import ComputationError, EmptyDonorPool
from ..panel import EstimatorOutput, PanelData
from ..smc import SmcOptions
from .dgp import METHOD_NAMES
from .metrics import mspe

logger = logging.getLogger(__name__)

AVERAGE_ROW = 'average'
INTERCEPT_ROW = 'intercept'


def placebo_fits(
    panel: PanelData,
    methods: Sequence[str] = METHOD_NAMES,
    options: Optional[SmcOptions] = None,
    v: Optional[Sequence[float]] = None
) -> pd.DataFrame:
    """placebo_fits.

    Every control region becomes pseudo-treated in turn, with the treated
    unit removed from the donor pool. Returns one row per (region, method)
    with the post-period MSPE against the region's observed outcomes and
    the pre-period RSS; failed fits are NaN.
    """
    if panel.n_units < 3:
        raise EmptyDonorPool(
            f"placebo study needs at least 3 units, panel has {panel.n_units}"
        )
    options = options or SmcOptions()
    rows = []
    for region in panel.control_labels:
        placebo = panel.as_placebo(region)
        for method in methods:
            try:
                fit = fit_method(method, placebo, options, v=v)
                # the placebo region is untreated, so its observed path is the truth
                post, pre = mspe(fit, placebo.treated_path), fit.pre_rss
            except ComputationError as ex:
                logger.warning(f"Placebo {region}, method {method}: {ex}")
                post, pre = float('nan'), float('nan')
            rows.append({"region": region, "method": method, "post_mspe": post, "pre_rss": pre})
    return pd.DataFrame(rows, columns=["region", "method", "post_mspe", "pre_rss"])


def placebo_table(fits: pd.DataFrame, statistic: str, methods: Sequence[str]) -> pd.DataFrame:
    regions = list(dict.fromkeys(fits['region']))
    table = fits.pivot(index='region', columns='method', values=statistic)
    table = table.reindex(index=regions, columns=list(methods))
    table.loc[AVERAGE_ROW] = table.mean(axis=0, skipna=True)
    table.index.name = 'region'
    table.columns.name = None
    return table.reset_index()


def run_placebo(
    panel: PanelData,
    methods: Sequence[str] = METHOD_NAMES,
    options: Optional[SmcOptions] = None,
    v: Optional[Sequence[float]] = None,
    statistic: str = 'post_mspe'
) -> pd.DataFrame:
    """run_placebo.

    Region x method table of ``post_mspe`` (default) or ``pre_rss`` with a
    trailing cross-region average row.
    """
    methods = tuple(methods)
    fits = placebo_fits(panel, methods, options, v)
    return placebo_table(fits, statistic, methods)


def weights_table(
    panel: PanelData,
    methods: Sequence[str] = ('sc', 'dsc', 'ols', 'smc'),
    options: Optional[SmcOptions] = None,
    v: Optional[Sequence[float]] = None
) -> pd.DataFrame:
    """weights_table.

    Per-control effective coefficient of every method (simplex weights,
    regression coefficients or w_j theta_j) plus an intercept row; methods
    without an intercept show NaN.
    """
    columns = {}
    for method in methods:
        fit = fit_method(method, panel, options, v=v)
        intercept = float('nan') if method == 'sc' else fit.intercept
        columns[method] = np.append(fit.comprehensive_weights, intercept)
    frame = pd.DataFrame(columns, columns=list(methods))
    frame.insert(0, 'region', list(panel.control_labels) + [INTERCEPT_ROW])
    return frame


def paths_frame(output: EstimatorOutput) -> pd.DataFrame:
    """Plot-ready actual, counterfactual and ATT paths, one row per period."""
    return pd.DataFrame({
        "year": list(output.time_labels),
        "actual": output.observed,
        "counterfactual": output.counterfactual,
        "att": output.att,
    })
