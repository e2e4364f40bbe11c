"""
Monte Carlo harness.

Replications are independent work items dispatched to a process pool and
merged back in replication order, so tables do not depend on the number of
workers.
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from pathlib import Path
from typing import Iterable, Optional, Union

import numpy as np
import pandas as pd

from ..baselines import fit_method
from ..conf import resolve_workers
from ..exceptions import ComputationError, ConfigError
from ..smc import SmcOptions
from .dgp import SimConfig, generate
from .metrics import mspe

logger = logging.getLogger(__name__)

CONFIG_COLUMNS = (
    'dgp', 'T', 'T0', 'J', 'lambda_pattern', 'alpha', 'sigma', 'c', 'r2_target', 'rho',
    'reps', 'seed', 'variance_variant'
)
SUMMARY_COLUMNS = CONFIG_COLUMNS + ('method', 'mean_mspe', 'se', 'failures')


def replicate(cfg: SimConfig, rep: int) -> dict:
    """replicate.

    Post-period MSPE of every configured method against the realized
    untreated path of the treated unit; NaN marks a failed fit.
    """
    panel, _ = generate(cfg, rep)
    options = SmcOptions(variance_variant=cfg.variance_variant)
    result = {}
    for method in cfg.methods:
        try:
            fit = fit_method(method, panel, options)
            result[method] = mspe(fit, panel.treated_path, panel.t0)
        except ComputationError as ex:
            logger.warning(f"Replication {rep}, method {method}: {ex}")
            result[method] = float('nan')
    return result


def _replicate_row(cfg: SimConfig, rep: int) -> list:
    result = replicate(cfg, rep)
    return [result[m] for m in cfg.methods]


def simulate_mspe(cfg: SimConfig, workers: Optional[int] = None) -> pd.DataFrame:
    """Per-replication MSPE table (rows in replication order, one column per method)."""
    workers = min(resolve_workers(workers), cfg.reps)
    task = partial(_replicate_row, cfg)
    reps = range(cfg.reps)
    if workers == 1:
        rows = [task(rep) for rep in reps]
    else:
        chunksize = max(1, cfg.reps // (4 * workers))
        with ProcessPoolExecutor(max_workers=workers) as executor:
            rows = list(executor.map(task, reps, chunksize=chunksize))
    frame = pd.DataFrame(rows, columns=list(cfg.methods), dtype=float)
    frame.index.name = 'rep'
    return frame


def summarize(cfg: SimConfig, per_rep: pd.DataFrame) -> pd.DataFrame:
    """Mean MSPE, its standard error and the failure count per method."""
    base = {key: getattr(cfg, key) for key in CONFIG_COLUMNS}
    rows = []
    for method in cfg.methods:
        values = per_rep[method].to_numpy(dtype=float)
        ok = values[np.isfinite(values)]
        mean = float(ok.mean()) if ok.size else float('nan')
        se = float(ok.std(ddof=1) / np.sqrt(ok.size)) if ok.size > 1 else float('nan')
        rows.append({
            **base,
            "method": method,
            "mean_mspe": mean,
            "se": se,
            "failures": int(values.size - ok.size)
        })
    return pd.DataFrame(rows, columns=list(SUMMARY_COLUMNS))


def run_monte_carlo(cfg: SimConfig, workers: Optional[int] = None) -> pd.DataFrame:
    """run_monte_carlo.

    Method x statistic table over ``cfg.reps`` replications.
    """
    logger.info(
        f"Monte Carlo {cfg.dgp} T={cfg.T} T0={cfg.T0} J={cfg.J}: "
        f"{cfg.reps} replications, methods {', '.join(cfg.methods)}"
    )
    per_rep = simulate_mspe(cfg, workers)
    table = summarize(cfg, per_rep)
    failures = int(table['failures'].sum())
    if failures:
        logger.warning(f"{failures} failed fits excluded from the means")
    return table


def _factor_grid(shapes: Iterable[tuple]) -> list:
    return [
        {
            "dgp": "factor", "T": t, "T0": t - 10, "J": j, "lambda_pattern": lam,
            "alpha": "unit", "sigma": sigma
        }
        for t, j in shapes
        for lam in ('l1', 'l2', 'l3')
        for sigma in (1.0, 0.5, 0.1)
    ]


TABLE_PRESETS: dict = {
    "factor": _factor_grid([(50, 20)]),
    "shapes": _factor_grid([(100, 20), (50, 10), (50, 50)]),
    "working": [
        {"dgp": "working", "T": 50, "T0": 40, "J": 20, "c": c, "r2_target": r2, "rho": 0.8}
        for c in (1.0, 0.5, 2.0)
        for r2 in (0.4, 0.6, 0.8)
    ],
}


def preset_configs(name: str, **overrides) -> list:
    """SimConfig list of a named preset, e.g. ``preset_configs('factor', reps=200, seed=7)``."""
    try:
        grid = TABLE_PRESETS[name]
    except KeyError as ex:
        raise ConfigError(
            f"unknown preset {name!r}, expected one of {', '.join(TABLE_PRESETS)}"
        ) from ex
    return [SimConfig.from_dict({**entry, **overrides}) for entry in grid]


def run_grid(configs: Iterable[SimConfig], workers: Optional[int] = None) -> pd.DataFrame:
    """Runs every design and stacks the summary tables."""
    tables = [run_monte_carlo(cfg, workers) for cfg in configs]
    if not tables:
        return pd.DataFrame(columns=list(SUMMARY_COLUMNS))
    return pd.concat(tables, ignore_index=True)


def write_table(frame: pd.DataFrame, path: Union[str, Path]) -> None:
    """CSV with 17 significant digits and no index, byte-stable across runs."""
    frame.to_csv(
        Path(path),
        index=False,
        float_format='%.17g',
        na_rep='nan',
        lineterminator='\n'
    )
