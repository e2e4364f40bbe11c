"""
Synthetic matching control.

Noise-variance estimation, the Mallows-type criterion
C(w) = ||y1 - sum_j w_j theta_j y_j||^2 + 2 sigma2 sum_j w_j, box-constrained
weight selection and counterfactual prediction with the centering intercept.
"""
import logging
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .conf import QP_MAX_ITER, QP_TOL
from .exceptions import (
    EmptyDonorPool,
    InsufficientPeriods,
    LengthMismatch,
    RankDeficient,
    ValidationError,
)
from .fields import Field
from .matching import MatchedControl, fitted_matrix, match_all
from .models import BaseModel, Model
from .optim import QpSolution, QuadraticProgram, solve_box_qp
from .panel import (
    SCALINGS,
    CenteredPanel,
    EstimatorOutput,
    PanelData,
    apply_diag_weights,
    build_output,
    center_pretreatment,
    stack_covariates,
)
from .screening import VARIANTS as SCREENING_VARIANTS, screen_units

logger = logging.getLogger(__name__)

VARIANCE_VARIANTS = ('appendix_dof', 'maintext_diag')
SCREEN_MODES = ('auto', 'off', 'force')


class SmcOptions(BaseModel):
    """Options of the SMC estimator.

    Screening runs when ``screen_mode='force'``, or under ``'auto'`` when
    the number of controls reaches ``t0 - screening_margin``.
    ``screen_keep=None`` keeps the automatic count.
    """
    variance_variant: str = Field(default='appendix_dof', choices=VARIANCE_VARIANTS)
    screen_mode: str = Field(default='auto', choices=SCREEN_MODES)
    screening_margin: int = Field(default=1, min=0)
    screen_keep: Optional[int] = None
    screening_variant: str = Field(default='paper_literal', choices=SCREENING_VARIANTS)
    tol: float = Field(default=QP_TOL)
    max_iter: int = Field(default=QP_MAX_ITER, min=1)
    use_covariates: bool = True
    covariate_scaling: str = Field(default='match_outcome_variance', choices=SCALINGS)
    v_weights: Optional[Tuple[float, ...]] = None

    class Meta:
        name = 'smc_options'
        description = 'SMC estimator options'
        strict = True

    def _validate_(self) -> Optional[dict]:
        if not self.tol > 0:
            return {"tol": f"solver tolerance must be positive, got {self.tol}"}
        return None


class WeightSolution(Model):
    """Selected weights, noise variance and criterion value."""
    w: np.ndarray
    sigma2_hat: float
    criterion: float
    variance_variant: str = 'appendix_dof'
    solver: Optional[QpSolution] = None

    class Meta:
        name = 'weight_solution'


def _usable(cp: CenteredPanel) -> np.ndarray:
    return cp.y0c[:, ~cp.degenerate]


def estimate_noise_variance(cp: CenteredPanel, variant: str = 'appendix_dof') -> float:
    """estimate_noise_variance.

    ``appendix_dof``: ||y1 - P y1||^2 / (n - J) with P the projection on the
    centered control columns. ``maintext_diag``: ||y1 - sum_j theta_j y_j||^2
    (diagonal Gram, no normalization). Degenerate controls are left out.

    Raises:
        InsufficientPeriods: n <= J under ``appendix_dof``.
        RankDeficient: singular Gram matrix under ``appendix_dof``.
    """
    y1 = cp.y1c
    y0 = _usable(cp)
    n, k = y0.shape
    if variant == 'appendix_dof':
        if n <= k:
            raise InsufficientPeriods(
                f"{n} fitting rows for {k} control units, need more rows than units"
            )
        if k == 0:
            return float(y1 @ y1) / n
        beta, _, rank, _ = np.linalg.lstsq(y0, y1, rcond=None)
        if rank < k:
            raise RankDeficient(
                f"centered control matrix has rank {rank} < {k}"
            )
        resid = y1 - y0 @ beta
        return float(resid @ resid) / (n - k)
    if variant == 'maintext_diag':
        if k == 0:
            return float(y1 @ y1)
        norms = np.einsum('ij,ij->j', y0, y0)
        theta = (y0.T @ y1) / norms
        resid = y1 - y0 @ theta
        return float(resid @ resid)
    raise ValidationError(
        f"unknown variance variant {variant!r}, expected one of {VARIANCE_VARIANTS}"
    )


def noise_variance(cp: CenteredPanel, variant: str) -> tuple:
    try:
        return estimate_noise_variance(cp, variant), variant
    except (RankDeficient, InsufficientPeriods) as ex:
        if variant != 'appendix_dof':
            raise
        logger.warning(
            f"{ex}; falling back to the maintext_diag noise variance"
        )
        return estimate_noise_variance(cp, 'maintext_diag'), 'maintext_diag'


def cp_criterion(
    w: np.ndarray,
    matched: Sequence[MatchedControl],
    cp: CenteredPanel,
    sigma2: float
) -> float:
    """C(w) = ||y1c - sum_j w_j theta_j y_jc||^2 + 2 sigma2 sum_j w_j."""
    w = np.asarray(w, dtype=float).ravel()
    if w.shape[0] != len(matched):
        raise LengthMismatch(f"{w.shape[0]} weights for {len(matched)} matched controls")
    if sigma2 < 0:
        raise ValidationError(f"noise variance must be nonnegative, got {sigma2}")
    resid = cp.y1c.copy()
    if matched:
        resid -= fitted_matrix(matched) @ w
    return float(resid @ resid + 2.0 * sigma2 * w.sum())


def solve_weights(
    matched: Sequence[MatchedControl],
    cp: CenteredPanel,
    sigma2: float,
    variance_variant: str = 'appendix_dof',
    tol: float = QP_TOL,
    max_iter: int = QP_MAX_ITER
) -> WeightSolution:
    """solve_weights.

    Minimizes C(w) over [0, 1]^J. Excluded controls keep w_j = 0 and stay
    in the vector so indices line up with ``matched``.
    """
    active = np.array([not m.excluded for m in matched], dtype=bool)
    if not active.any():
        raise EmptyDonorPool("no usable control unit left for weighting")
    design = fitted_matrix(matched)[:, active]
    qp = QuadraticProgram.least_squares(design, cp.y1c, 'box01', penalty=sigma2)
    solution = solve_box_qp(qp, tol=tol, max_iter=max_iter)
    w = np.zeros(len(matched))
    w[active] = solution.w
    return WeightSolution(
        w=w,
        sigma2_hat=float(sigma2),
        criterion=cp_criterion(w, matched, cp, sigma2),
        variance_variant=variance_variant,
        solver=solution
    )


def predict_counterfactual(
    weights: Union[WeightSolution, np.ndarray],
    matched: Sequence[MatchedControl],
    panel: PanelData
) -> np.ndarray:
    """predict_counterfactual.

    Y1t(0) = mean(y1) + sum_j w_j theta_j (Y_jt - mean(y_j)) for every period,
    means taken over the pre-period outcomes of ``panel``.
    """
    w = np.asarray(getattr(weights, 'w', weights), dtype=float).ravel()
    if w.shape[0] != len(matched):
        raise LengthMismatch(f"{w.shape[0]} weights for {len(matched)} matched controls")
    y1_mean = float(panel.outcomes[:panel.t0, panel.treated].mean())
    path = np.full(panel.n_periods, y1_mean)
    if not matched:
        return path
    units = [m.unit for m in matched]
    cols = panel.outcomes[:, units]
    means = cols[:panel.t0].mean(axis=0)
    coef = w * np.array([m.theta for m in matched])
    return path + (cols - means) @ coef


def should_screen(panel: PanelData, options: SmcOptions) -> bool:
    if options.screen_mode == 'off':
        return False
    if options.screen_mode == 'force':
        return True
    return panel.n_controls >= panel.t0 - options.screening_margin


def fit_smc(
    panel: PanelData,
    options: Optional[SmcOptions] = None,
    v: Optional[Sequence[float]] = None
) -> EstimatorOutput:
    """fit_smc.

    Covariate stacking (when the panel has covariates), screening (when
    the donor pool is too large), centering, unit matching, noise variance,
    weight selection and prediction over all periods. Weights of screened
    out controls are reported as zero.
    """
    options = options or SmcOptions()
    if panel.n_controls == 0:
        raise EmptyDonorPool("panel has no control units")
    if v is None and options.v_weights is not None:
        v = options.v_weights
    fitting = panel
    if options.use_covariates and panel.covariates is not None:
        fitting = stack_covariates(fitting, options.covariate_scaling)
    screened = None
    if should_screen(panel, options):
        keep = 'auto' if options.screen_keep is None else options.screen_keep
        report = screen_units(fitting, keep, options.screening_variant)
        fitting = fitting.subset(report.kept_labels)
        screened = tuple(report.kept_labels)
        logger.warning(
            f"Screening {panel.n_controls} controls for t0={panel.t0}: "
            f"kept {', '.join(screened)}"
        )
    # prediction stays on the original outcome scale
    prediction_panel = fitting
    if v is not None:
        fitting = apply_diag_weights(fitting, v)
    cp = center_pretreatment(fitting)
    matched = match_all(cp)
    sigma2, variant = noise_variance(cp, options.variance_variant)
    weights = solve_weights(
        matched,
        cp,
        sigma2,
        variance_variant=variant,
        tol=options.tol,
        max_iter=options.max_iter
    )
    counterfactual = predict_counterfactual(weights, matched, prediction_panel)
    # scatter back onto the full donor pool by label
    labels = panel.control_labels
    w_full = np.zeros(len(labels))
    theta_full = np.zeros(len(labels))
    for m, wj in zip(matched, weights.w):
        k = labels.index(m.label)
        w_full[k] = wj
        theta_full[k] = m.theta
    comprehensive = w_full * theta_full
    pre = prediction_panel.outcomes[:prediction_panel.t0]
    means = np.array([pre[:, m.unit].mean() for m in matched])
    coef = weights.w * np.array([m.theta for m in matched])
    intercept = float(pre[:, prediction_panel.treated].mean() - coef @ means)
    logger.debug(
        f"SMC fit for {panel.treated_label}: sigma2={sigma2:.6g} ({variant}), "
        f"sum(w)={weights.w.sum():.4f}, criterion={weights.criterion:.6g}"
    )
    return build_output(
        'smc',
        panel,
        counterfactual,
        comprehensive,
        intercept=intercept,
        weights=w_full,
        thetas=theta_full,
        criterion=weights.criterion,
        sigma2_hat=sigma2,
        variance_variant=variant,
        screened_units=screened
    )
