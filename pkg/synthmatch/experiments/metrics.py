"""
Evaluation of fitted estimators against simulation ground truth.
"""
import logging
from typing import Optional, Sequence, Union

import numpy as np
import pandas as pd

from ..exceptions import ComputationError, LengthMismatch, TruthUnavailable
from ..matching import MatchedControl, fitted_matrix, match_all
from ..models import Model
from ..optim import QuadraticProgram, solve_box_qp
from ..panel import CenteredPanel, EstimatorOutput, center_pretreatment
from ..smc import SmcOptions, noise_variance, solve_weights
from .dgp import SimConfig, SimTruth, generate

logger = logging.getLogger(__name__)


def mspe(
    output: Union[EstimatorOutput, np.ndarray],
    truth_path: np.ndarray,
    t0: Optional[int] = None
) -> float:
    """Mean squared deviation of the counterfactual from ``truth_path`` after ``t0``."""
    if isinstance(output, EstimatorOutput):
        path = output.counterfactual
        t0 = output.t0 if t0 is None else t0
    else:
        path = output
    path = np.asarray(path, dtype=float).ravel()
    truth_path = np.asarray(truth_path, dtype=float).ravel()
    if path.shape != truth_path.shape:
        raise LengthMismatch(
            f"counterfactual of length {path.shape[0]} for a truth path of "
            f"length {truth_path.shape[0]}"
        )
    if t0 is None or not 0 <= int(t0) < path.shape[0]:
        raise LengthMismatch(f"t0={t0} leaves no post-period in {path.shape[0]} periods")
    diff = path[int(t0):] - truth_path[int(t0):]
    return float(diff @ diff) / diff.shape[0]


def decompose_error(
    w: np.ndarray,
    matched: Sequence[MatchedControl],
    cp: CenteredPanel,
    truth: Optional[SimTruth]
) -> tuple:
    """decompose_error.

    Splits the pre-period error of the centered synthesis into
    interpolation sum_j w_j (theta_j y_j - y1) and extrapolation
    (sum_j w_j - 1) mu1 + sum_j w_j e1, where mu1 is centered on the
    observed treated mean and e1 = y1 - mu1. The two parts add up to
    sum_j w_j theta_j y_j - mu1.

    Raises:
        TruthUnavailable: no simulation truth.
    """
    if truth is None:
        raise TruthUnavailable("error decomposition needs the simulation truth")
    w = np.asarray(w, dtype=float).ravel()
    if w.shape[0] != len(matched):
        raise LengthMismatch(f"{w.shape[0]} weights for {len(matched)} matched controls")
    source = cp.source
    if cp.n_rows != source.t0:
        raise LengthMismatch(
            "error decomposition works on outcome rows only, "
            f"got {cp.n_rows} fitting rows for t0={source.t0}"
        )
    y1 = source.outcomes[:source.t0, source.treated]
    mu1 = np.asarray(truth.mu1, dtype=float)[:source.t0] - cp.y1_mean
    eps1 = y1 - cp.y1_mean - mu1
    total_w = float(w.sum())
    synth = fitted_matrix(matched) @ w if matched else np.zeros_like(mu1)
    interp = synth - total_w * cp.y1c
    extrap = (total_w - 1.0) * mu1 + total_w * eps1
    return interp, extrap


class RiskCheck(Model):
    """Gap between the unbiased risk estimate and the realized loss, per replication."""
    gap_mean: float
    gap_se: float
    gaps: np.ndarray
    leverage_sums: np.ndarray

    class Meta:
        name = 'risk_check'


def _risk_gap(w: np.ndarray, cfg: SimConfig, rep: int) -> tuple:
    panel, truth = generate(cfg, rep)
    t0 = panel.t0
    y1 = panel.outcomes[:t0, panel.treated]
    y0 = panel.outcomes[:t0, panel.controls]
    mu1 = truth.mu1[:t0]
    s2 = truth.sigma_t[:t0] ** 2
    norms = np.einsum('ij,ij->j', y0, y0)
    theta = (y0.T @ y1) / norms
    leverage = y0 ** 2 / norms
    fit = y0 @ (w * theta)
    sigma_j = s2 @ leverage
    estimate = float((fit - y1) @ (fit - y1) + 2.0 * w @ sigma_j - s2.sum())
    loss = float((fit - mu1) @ (fit - mu1))
    return estimate - loss, leverage.sum(axis=0)


def oracle_risk_check(w: np.ndarray, cfg: SimConfig, reps: Optional[int] = None) -> RiskCheck:
    """oracle_risk_check.

    For fixed weights, compares ||yhat - y1||^2 + 2 sum_j w_j s_j^2 - sum_t s_t^2
    with the loss ||yhat - mu1||^2, where yhat = sum_j w_j theta_j y_j on the
    raw pre-period data, s_j^2 = sum_t s_t^2 l_jt and l_jt = y_jt^2 / |y_j|^2.
    The gap has mean zero.
    """
    w = np.asarray(w, dtype=float).ravel()
    if w.shape[0] != cfg.J:
        raise LengthMismatch(f"{w.shape[0]} weights for J={cfg.J}")
    reps = cfg.reps if reps is None else int(reps)
    gaps = np.empty(reps)
    sums = np.empty((reps, cfg.J))
    for rep in range(reps):
        gaps[rep], sums[rep] = _risk_gap(w, cfg, rep)
    se = float(gaps.std(ddof=1) / np.sqrt(reps)) if reps > 1 else float('nan')
    return RiskCheck(
        gap_mean=float(gaps.mean()),
        gap_se=se,
        gaps=gaps,
        leverage_sums=sums
    )


def _loss(design: np.ndarray, w: np.ndarray, target: np.ndarray) -> float:
    resid = design @ w - target
    return float(resid @ resid)


def loss_ratio(cfg: SimConfig, rep: int) -> float:
    """L(w_hat) / min_w L(w) for one replication, L(w) = ||sum_j w_j theta_j y_j - mu1||^2."""
    panel, truth = generate(cfg, rep)
    options = SmcOptions(variance_variant=cfg.variance_variant)
    cp = center_pretreatment(panel)
    matched = match_all(cp)
    sigma2, variant = noise_variance(cp, options.variance_variant)
    weights = solve_weights(matched, cp, sigma2, variant, options.tol, options.max_iter)
    mu1 = truth.mu1[:panel.t0]
    mu1 = mu1 - mu1.mean()
    active = np.array([not m.excluded for m in matched], dtype=bool)
    design = fitted_matrix(matched)[:, active]
    w_hat = weights.w[active]
    qp = QuadraticProgram.least_squares(design, mu1, 'box01')
    # warm start at w_hat: the solver never increases the objective
    oracle = solve_box_qp(qp, tol=options.tol, max_iter=options.max_iter, w0=w_hat)
    l_hat = _loss(design, w_hat, mu1)
    l_best = min(_loss(design, oracle.w, mu1), l_hat)
    if l_best <= 0.0:
        return 1.0 if l_hat <= 0.0 else float('inf')
    return l_hat / l_best


def optimality_ratio(
    t0_grid: Sequence[int],
    base: SimConfig,
    reps: Optional[int] = None
) -> pd.DataFrame:
    """optimality_ratio.

    For each pre-period length, the loss of the selected weights relative
    to the best weights in [0, 1]^J (both measured against the true mean
    path). The post-period length of ``base`` is kept.
    """
    horizon = base.T - base.T0
    reps = base.reps if reps is None else int(reps)
    rows = []
    for t0 in t0_grid:
        cfg = base.replace(T0=int(t0), T=int(t0) + horizon)
        ratios, failures = [], 0
        for rep in range(reps):
            try:
                ratios.append(loss_ratio(cfg, rep))
            except ComputationError as ex:
                failures += 1
                logger.warning(f"T0={t0}, replication {rep}: {ex}")
        values = np.array(ratios)
        rows.append({
            "T0": int(t0),
            "reps": reps,
            "median_ratio": float(np.median(values)) if values.size else float('nan'),
            "p90_ratio": float(np.quantile(values, 0.9)) if values.size else float('nan'),
            "min_ratio": float(values.min()) if values.size else float('nan'),
            "failures": failures
        })
        logger.info(f"Optimality ratio T0={t0}: median {rows[-1]['median_ratio']:.4f}")
    return pd.DataFrame(rows, columns=["T0", "reps", "median_ratio", "p90_ratio", "min_ratio", "failures"])
