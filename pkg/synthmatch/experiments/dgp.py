"""
Simulation data-generating processes.

Random numbers come from a Philox counter-based generator; replication
``rep`` of seed ``seed`` uses the substream
``SeedSequence(seed, spawn_key=(rep,))``, so every replication can be
generated independently and in any order. Normal variates use numpy's
ziggurat sampler (``Generator.standard_normal``).
"""
from typing import Optional, Tuple

import numpy as np

from ..fields import Field
from ..models import BaseModel, Model
from ..panel import PanelData

DGPS = ('factor', 'working')
LAMBDA_PATTERNS = ('l1', 'l2', 'l3')
# level term of the factor model: alpha_t shared by all units, or alpha_j per unit
LEVEL_TERMS = ('time', 'unit')
METHOD_NAMES = ('smc', 'sc', 'dsc', 'ols')
# units with a nonzero working-model coefficient (and unit loading in the factor model)
N_ACTIVE = 7


class SimConfig(BaseModel):
    """Parameters of one simulation design."""
    dgp: str = Field(default='factor', choices=DGPS)
    T: int = Field(default=50, min=2)
    T0: int = Field(default=40, min=1)
    J: int = Field(default=20, min=1)
    lambda_pattern: str = Field(default='l1', choices=LAMBDA_PATTERNS)
    alpha: str = Field(default='time', choices=LEVEL_TERMS)
    sigma: float = Field(default=1.0, min=0)
    c: float = 1.0
    r2_target: float = 0.8
    rho: float = 0.8
    reps: int = Field(default=200, min=1)
    seed: int = Field(default=0, min=0, max=2 ** 64 - 1)
    methods: Tuple[str, ...] = Field(default=METHOD_NAMES, choices=METHOD_NAMES)
    variance_variant: str = Field(
        default='appendix_dof', choices=('appendix_dof', 'maintext_diag')
    )

    class Meta:
        name = 'sim_config'
        description = 'Monte Carlo design'
        strict = True

    def _validate_(self) -> Optional[dict]:
        errors = {}
        if self.T0 >= self.T:
            errors['T0'] = f"T0={self.T0} must be lower than T={self.T}"
        if not 0 < self.r2_target < 1:
            errors['r2_target'] = f"{self.r2_target} outside (0, 1)"
        if not -1 < self.rho < 1:
            errors['rho'] = f"{self.rho} outside (-1, 1)"
        if self.dgp == 'working' and self.J < N_ACTIVE:
            errors['J'] = f"working model needs J >= {N_ACTIVE}, got {self.J}"
        if not self.methods:
            errors['methods'] = "at least one method is required"
        return errors or None


class SimTruth(Model):
    """Ground truth of one simulated panel.

    ``mu1`` is the untreated mean path of the treated unit and ``sigma_t``
    its per-period noise standard deviation (all T periods). ``loadings``
    holds the factor loadings (J+1) or the working-model coefficients (J);
    ``factors`` stacks the realized common effect and factor (2 x T); the
    common effect row is zero when the level term is per unit, and
    ``unit_levels`` then holds alpha_j (J+1).
    """
    mu1: np.ndarray
    sigma_t: np.ndarray
    loadings: np.ndarray
    factors: Optional[np.ndarray] = None
    unit_levels: Optional[np.ndarray] = None
    sigma0_sq: Optional[float] = None
    dgp: str = 'factor'

    class Meta:
        name = 'sim_truth'


def substream(seed: int, rep: int) -> np.random.Generator:
    """Independent generator of replication ``rep``."""
    sequence = np.random.SeedSequence(int(seed), spawn_key=(int(rep), ))
    return np.random.Generator(np.random.Philox(sequence))


def factor_loadings(pattern: str, n_controls: int) -> np.ndarray:
    """Loadings of the treated unit (first) and the controls."""
    lam = np.zeros(n_controls + 1)
    if pattern == 'l1':
        lam[:N_ACTIVE] = 1.0
    elif pattern == 'l2':
        lam[:N_ACTIVE] = 1.0
        lam[0] = 3.0
    elif pattern == 'l3':
        lam[:] = 1.0
        lam[0] = 3.0
    else:
        raise ValueError(f"unknown loading pattern {pattern!r}")
    return lam


def working_covariance(n_controls: int, rho: float) -> np.ndarray:
    idx = np.arange(n_controls)
    return rho ** np.abs(idx[:, None] - idx[None, :])


def _panel(outcomes: np.ndarray, t0: int) -> PanelData:
    n_periods, n_units = outcomes.shape
    return PanelData(
        outcomes=outcomes,
        unit_labels=tuple(f"u{j + 1}" for j in range(n_units)),
        time_labels=tuple(str(t + 1) for t in range(n_periods)),
        treated=0,
        t0=t0
    )


def gen_factor_dgp(cfg: SimConfig, rep: int) -> tuple:
    """gen_factor_dgp.

    Y_jt = a + lambda_j F_t + e_jt with F_t ~ N(0, 1) and e_jt ~ N(0, sigma^2).
    The level term a is alpha_t ~ N(0, 1) shared by all units
    (``alpha='time'``) or alpha_j ~ N(0, 1) fixed per unit
    (``alpha='unit'``). Unit ``u1`` is treated.
    """
    rng = substream(cfg.seed, rep)
    if cfg.alpha == 'unit':
        levels = rng.standard_normal(cfg.J + 1)
        alpha = np.zeros(cfg.T)
    else:
        levels = None
        alpha = rng.standard_normal(cfg.T)
    factor = rng.standard_normal(cfg.T)
    noise = rng.standard_normal((cfg.T, cfg.J + 1)) * cfg.sigma
    lam = factor_loadings(cfg.lambda_pattern, cfg.J)
    mean = alpha[:, None] + factor[:, None] * lam[None, :]
    if levels is not None:
        mean = mean + levels[None, :]
    truth = SimTruth(
        mu1=mean[:, 0].copy(),
        sigma_t=np.full(cfg.T, float(cfg.sigma)),
        loadings=lam,
        factors=np.vstack([alpha, factor]),
        unit_levels=levels,
        dgp='factor'
    )
    return _panel(mean + noise, cfg.T0), truth


def gen_working_dgp(cfg: SimConfig, rep: int) -> tuple:
    """gen_working_dgp.

    Control rows y_t ~ N(0, S) with S_ij = rho^|i-j|; treated
    Y_1t = y_t theta + e_t, theta = (c/7, ..., c/7, 0, ..., 0), and
    e_t ~ N(0, s0 |y_t|^2 / (J + |y_t|^2)) in every period. The scale s0
    is calibrated on the generated panel so that signal / (signal + noise)
    equals ``r2_target``.
    """
    rng = substream(cfg.seed, rep)
    chol = np.linalg.cholesky(working_covariance(cfg.J, cfg.rho))
    controls = rng.standard_normal((cfg.T, cfg.J)) @ chol.T
    theta = np.zeros(cfg.J)
    theta[:N_ACTIVE] = cfg.c / N_ACTIVE
    mean = controls @ theta
    norms = np.einsum('ij,ij->i', controls, controls)
    shape = norms / (cfg.J + norms)
    sigma0_sq = float(
        mean.var(ddof=1) * (1.0 - cfg.r2_target) / (cfg.r2_target * shape.mean())
    )
    sigma_t = np.sqrt(sigma0_sq * shape)
    treated = mean + rng.standard_normal(cfg.T) * sigma_t
    truth = SimTruth(
        mu1=mean,
        sigma_t=sigma_t,
        loadings=theta,
        sigma0_sq=sigma0_sq,
        dgp='working'
    )
    return _panel(np.column_stack([treated, controls]), cfg.T0), truth


def generate(cfg: SimConfig, rep: int) -> tuple:
    """Panel and truth of replication ``rep`` under the configured design."""
    if cfg.dgp == 'working':
        return gen_working_dgp(cfg, rep)
    return gen_factor_dgp(cfg, rep)
