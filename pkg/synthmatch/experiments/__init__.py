"""
Simulation designs, Monte Carlo tables, placebo studies and diagnostics.
"""
from .dgp import (
    DGPS,
    LAMBDA_PATTERNS,
    LEVEL_TERMS,
    METHOD_NAMES,
    SimConfig,
    SimTruth,
    factor_loadings,
    gen_factor_dgp,
    gen_working_dgp,
    generate,
    substream,
    working_covariance,
)
from .harness import (
    TABLE_PRESETS,
    preset_configs,
    replicate,
    run_grid,
    run_monte_carlo,
    simulate_mspe,
    summarize,
    write_table,
)
from .metrics import (
    RiskCheck,
    decompose_error,
    loss_ratio,
    mspe,
    optimality_ratio,
    oracle_risk_check,
)
from .placebo import paths_frame, placebo_fits, placebo_table, run_placebo, weights_table

__all__ = (
    'DGPS',
    'LAMBDA_PATTERNS',
    'LEVEL_TERMS',
    'METHOD_NAMES',
    'SimConfig',
    'SimTruth',
    'RiskCheck',
    'TABLE_PRESETS',
    'factor_loadings',
    'gen_factor_dgp',
    'gen_working_dgp',
    'generate',
    'substream',
    'working_covariance',
    'mspe',
    'decompose_error',
    'oracle_risk_check',
    'loss_ratio',
    'optimality_ratio',
    'replicate',
    'simulate_mspe',
    'summarize',
    'run_monte_carlo',
    'preset_configs',
    'run_grid',
    'write_table',
    'placebo_fits',
    'placebo_table',
    'run_placebo',
    'weights_table',
    'paths_frame',
)
