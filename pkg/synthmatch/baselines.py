"""
Comparator estimators.

Original synthetic control (simplex weights, no intercept), demeaned
synthetic control (simplex weights on centered data plus an intercept) and
unrestricted least squares on all controls. They share the panel and QP
kernels with the SMC estimator.
"""
import logging
from typing import Callable, Optional, Sequence

import numpy as np

from .conf import QP_MAX_ITER, QP_TOL
from .exceptions import ConfigError, EmptyDonorPool
from .optim import QuadraticProgram, solve_simplex_qp
from .panel import EstimatorOutput, PanelData, apply_diag_weights, build_output
from .smc import SmcOptions, fit_smc

logger = logging.getLogger(__name__)


def _fitting_block(panel: PanelData, v: Optional[Sequence[float]]) -> tuple:
    if panel.n_controls == 0:
        raise EmptyDonorPool("panel has no control units")
    fitting = panel if v is None else apply_diag_weights(panel, v)
    block = fitting.pre_block()
    return block[:, panel.treated], block[:, panel.controls]


def _pre_means(panel: PanelData) -> tuple:
    pre = panel.outcomes[:panel.t0]
    return float(pre[:, panel.treated].mean()), pre[:, panel.controls].mean(axis=0)


def fit_sc(
    panel: PanelData,
    v: Optional[Sequence[float]] = None,
    tol: float = QP_TOL,
    max_iter: int = QP_MAX_ITER
) -> EstimatorOutput:
    """fit_sc.

    Simplex weights minimizing ||y1 - Y0 w||_V over the pre-period;
    counterfactual Y w over all periods.

    Raises:
        EmptyDonorPool: no control unit.
    """
    y1, y0 = _fitting_block(panel, v)
    qp = QuadraticProgram.least_squares(y0, y1, 'simplex')
    solution = solve_simplex_qp(qp, tol=tol, max_iter=max_iter)
    w = solution.w
    counterfactual = panel.outcomes[:, panel.controls] @ w
    logger.debug(
        f"SC fit for {panel.treated_label}: objective={solution.objective:.6g}"
    )
    return build_output(
        'sc',
        panel,
        counterfactual,
        w,
        weights=w,
        criterion=solution.objective
    )


def fit_dsc(
    panel: PanelData,
    v: Optional[Sequence[float]] = None,
    tol: float = QP_TOL,
    max_iter: int = QP_MAX_ITER
) -> EstimatorOutput:
    """fit_dsc.

    Simplex weights on data demeaned over the pre-period; intercept
    mean(y1) - sum_j w_j mean(y_j).
    """
    y1, y0 = _fitting_block(panel, v)
    qp = QuadraticProgram.least_squares(
        y0 - y0.mean(axis=0), y1 - y1.mean(), 'simplex'
    )
    solution = solve_simplex_qp(qp, tol=tol, max_iter=max_iter)
    w = solution.w
    y1_mean, means = _pre_means(panel)
    intercept = y1_mean - float(w @ means)
    counterfactual = intercept + panel.outcomes[:, panel.controls] @ w
    return build_output(
        'dsc',
        panel,
        counterfactual,
        w,
        intercept=intercept,
        weights=w,
        criterion=solution.objective
    )


def fit_ols(
    panel: PanelData,
    v: Optional[Sequence[float]] = None,
    tol: float = QP_TOL,
    max_iter: int = QP_MAX_ITER
) -> EstimatorOutput:
    """fit_ols.

    Least squares of y1 on a constant and every control over the
    pre-period. Rank-deficient designs get the minimum-norm slope vector
    (the constant is not penalized).
    """
    y1, y0 = _fitting_block(panel, v)
    beta, _, rank, _ = np.linalg.lstsq(
        y0 - y0.mean(axis=0), y1 - y1.mean(), rcond=None
    )
    if rank < y0.shape[1]:
        logger.debug(
            f"OLS design for {panel.treated_label} has rank {rank} < {y0.shape[1]}, "
            "using the minimum-norm solution"
        )
    y1_mean, means = _pre_means(panel)
    intercept = y1_mean - float(beta @ means)
    counterfactual = intercept + panel.outcomes[:, panel.controls] @ beta
    return build_output(
        'ols',
        panel,
        counterfactual,
        beta,
        intercept=intercept,
        weights=beta
    )


def _fit_smc(panel, v=None, tol=QP_TOL, max_iter=QP_MAX_ITER, options=None):
    options = options or SmcOptions(tol=tol, max_iter=max_iter)
    return fit_smc(panel, options, v=v)


METHODS: dict = {
    'smc': _fit_smc,
    'sc': fit_sc,
    'dsc': fit_dsc,
    'ols': fit_ols,
}


def get_method(name: str) -> Callable:
    try:
        return METHODS[str(name).strip().lower()]
    except KeyError as ex:
        raise ConfigError(
            f"unknown method {name!r}, expected one of {', '.join(METHODS)}"
        ) from ex


def fit_method(
    name: str,
    panel: PanelData,
    options: Optional[SmcOptions] = None,
    v: Optional[Sequence[float]] = None
) -> EstimatorOutput:
    """Fits one of ``smc``, ``sc``, ``dsc`` or ``ols``; solver settings come from ``options``."""
    fn = get_method(name)
    options = options or SmcOptions()
    if fn is _fit_smc:
        return fit_smc(panel, options, v=v)
    if v is None and options.v_weights is not None:
        v = options.v_weights
    return fn(panel, v=v, tol=options.tol, max_iter=options.max_iter)
