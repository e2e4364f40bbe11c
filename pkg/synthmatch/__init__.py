# -*- coding: utf-8 -*-
"""synthmatch.

Synthetic matching control: per-unit matching regressions combined with
Mallows-type weights, plus synthetic-control baselines and an experiment
harness.
"""
from .fields import Field, Column
from .models import Model, BaseModel
from .exceptions import SMCError, ValidationError, ComputationError
from .panel import (
    PanelData,
    CenteredPanel,
    EstimatorOutput,
    load_panel_csv,
    write_panel_csv,
    load_covariates_csv,
    load_v_weights_csv,
    center_pretreatment,
    stack_covariates,
    apply_diag_weights,
)
from .optim import (
    QuadraticProgram,
    QpSolution,
    project_to_simplex,
    solve_box_qp,
    solve_simplex_qp,
)
from .matching import MatchedControl, match_unit, match_all
from .screening import ScreeningReport, sirs_statistics, screen_units
from .smc import (
    SmcOptions,
    WeightSolution,
    estimate_noise_variance,
    cp_criterion,
    solve_weights,
    predict_counterfactual,
    fit_smc,
)
from .baselines import fit_sc, fit_dsc, fit_ols, fit_method
from .version import (
    __title__, __description__, __version__, __author__, __author_email__
)

__all__ = (
    'Field',
    'Column',
    'Model',
    'BaseModel',
    'SMCError',
    'ValidationError',
    'ComputationError',
    'PanelData',
    'CenteredPanel',
    'EstimatorOutput',
    'load_panel_csv',
    'write_panel_csv',
    'load_covariates_csv',
    'load_v_weights_csv',
    'center_pretreatment',
    'stack_covariates',
    'apply_diag_weights',
    'QuadraticProgram',
    'QpSolution',
    'project_to_simplex',
    'solve_box_qp',
    'solve_simplex_qp',
    'MatchedControl',
    'match_unit',
    'match_all',
    'ScreeningReport',
    'sirs_statistics',
    'screen_units',
    'SmcOptions',
    'WeightSolution',
    'estimate_noise_variance',
    'cp_criterion',
    'solve_weights',
    'predict_counterfactual',
    'fit_smc',
    'fit_sc',
    'fit_dsc',
    'fit_ols',
    'fit_method',
)
