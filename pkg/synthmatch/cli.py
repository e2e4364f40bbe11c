"""
Command-line front end.

    synthmatch fit      --data panel.csv --treated basque --t0 15 --out fit.json
    synthmatch simulate --config design.conf --reps 200 --seed 7 --out table.csv
    synthmatch placebo  --data panel.csv --treated basque --t0 15 --out placebo.csv
    synthmatch weights  --data panel.csv --treated basque --t0 15 --out weights.csv

``fit`` embeds its resolved configuration in the output JSON; the table
commands write it to ``<out stem>_config.json``.

Exit codes: 0 success, 1 computation error, 2 usage or validation error.
Errors are reported on stderr as a single ``<ErrorName>: <message>`` line.
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence, Tuple

import orjson
import pandas as pd

from .baselines import fit_method
from .conf import setup_logging
from .exceptions import ComputationError, ConfigError, InvalidKeepCount, ValidationError
from .experiments import (
    METHOD_NAMES,
    TABLE_PRESETS,
    SimConfig,
    paths_frame,
    placebo_fits,
    placebo_table,
    preset_configs,
    simulate_mspe,
    summarize,
    weights_table,
    write_table,
)
from .fields import Field
from .models import BaseModel
from .panel import load_covariates_csv, load_panel_csv, load_v_weights_csv
from .parsers.json import json_encoder
from .smc import VARIANCE_VARIANTS, SmcOptions
from .version import __version__

logger = logging.getLogger(__name__)

VARIANCE_ALIASES = {
    'appendix': 'appendix_dof',
    'maintext': 'maintext_diag',
    'appendix_dof': 'appendix_dof',
    'maintext_diag': 'maintext_diag',
}


class FitConfig(BaseModel):
    """Resolved options of ``synthmatch fit``."""
    data: str = Field(required=True)
    treated: str = Field(required=True)
    t0: int = Field(required=True)
    method: str = Field(default='smc', choices=METHOD_NAMES)
    covariates: Optional[str] = None
    v_weights: Optional[str] = None
    variance_variant: str = Field(default='appendix_dof', choices=VARIANCE_VARIANTS)
    screen: str = 'auto'
    out: str = Field(default='', required=True)
    paths: Optional[str] = None

    class Meta:
        name = 'fit_config'
        strict = True


class StudyConfig(BaseModel):
    """Resolved options of ``synthmatch placebo`` and ``synthmatch weights``."""
    data: str = Field(required=True)
    treated: str = Field(required=True)
    t0: int = Field(required=True)
    methods: Tuple[str, ...] = Field(default=METHOD_NAMES, choices=METHOD_NAMES)
    covariates: Optional[str] = None
    v_weights: Optional[str] = None
    variance_variant: str = Field(default='appendix_dof', choices=VARIANCE_VARIANTS)
    screen: str = 'auto'
    out: str = Field(default='', required=True)
    pre_out: Optional[str] = None

    class Meta:
        name = 'study_config'
        strict = True


def read_config(path: str) -> dict:
    """read_config.

    Flat ``key = value`` file; blank lines and ``#`` comments are skipped.
    Values stay strings and are converted by the receiving model.
    """
    values = {}
    with open(path, 'r', encoding='utf-8') as fp:
        for number, raw in enumerate(fp, start=1):
            line = raw.split('#', 1)[0].strip()
            if not line:
                continue
            if '=' not in line:
                raise ConfigError(f"{path}:{number}: expected 'key = value', got {line!r}")
            key, value = (part.strip() for part in line.split('=', 1))
            if not key:
                raise ConfigError(f"{path}:{number}: empty key")
            if key in values:
                raise ConfigError(f"{path}:{number}: duplicate key {key!r}")
            values[key] = value
    return values


def _variance(value: str) -> str:
    try:
        return VARIANCE_ALIASES[value.strip().lower()]
    except KeyError as ex:
        raise ConfigError(
            f"unknown variance variant {value!r}, expected appendix or maintext"
        ) from ex


def smc_options(cfg) -> SmcOptions:
    """Estimator options from ``--variance-variant`` and ``--screen`` (auto, off or a keep-count)."""
    screen = cfg.screen.strip().lower()
    if screen in ('auto', 'off'):
        return SmcOptions(variance_variant=cfg.variance_variant, screen_mode=screen)
    try:
        keep = int(screen)
    except ValueError as ex:
        raise ConfigError(f"--screen must be auto, off or an integer, got {cfg.screen!r}") from ex
    if keep < 1:
        raise InvalidKeepCount(f"keep count must be at least 1, got {keep}")
    return SmcOptions(
        variance_variant=cfg.variance_variant,
        screen_mode='force',
        screen_keep=keep
    )


def load_inputs(cfg) -> tuple:
    """Panel (with covariates attached) and the optional diagonal V."""
    panel = load_panel_csv(cfg.data, cfg.treated, cfg.t0)
    if cfg.covariates:
        panel = load_covariates_csv(cfg.covariates, panel)
    v = load_v_weights_csv(cfg.v_weights, panel.t0) if cfg.v_weights else None
    return panel, v


def _sibling(out: str, suffix: str) -> str:
    path = Path(out)
    return str(path.with_name(f"{path.stem}{suffix}"))


def default_paths(out: str) -> str:
    return _sibling(out, '_paths.csv')


def default_config_path(out: str) -> str:
    return _sibling(out, '_config.json')


def _write_json(data: dict, path: str) -> None:
    text = json_encoder(data, option=orjson.OPT_INDENT_2 | orjson.OPT_APPEND_NEWLINE)
    Path(path).write_text(text, encoding='utf-8')


def _write_config_echo(command: str, out: str, **blocks) -> str:
    """Resolved configuration of a run, written next to its result table."""
    path = default_config_path(out)
    _write_json({"command": command, "version": __version__, **blocks}, path)
    return path


def _study_config(args: argparse.Namespace) -> StudyConfig:
    return StudyConfig(
        data=args.data,
        treated=args.treated,
        t0=args.t0,
        methods=args.methods,
        covariates=args.covariates,
        v_weights=args.v_weights,
        variance_variant=_variance(args.variance_variant),
        screen=args.screen,
        out=args.out,
        pre_out=getattr(args, 'pre_out', None)
    )


## Subcommands
def cmd_fit(args: argparse.Namespace) -> int:
    cfg = FitConfig(
        data=args.data,
        treated=args.treated,
        t0=args.t0,
        method=args.method,
        covariates=args.covariates,
        v_weights=args.v_weights,
        variance_variant=_variance(args.variance_variant),
        screen=args.screen,
        out=args.out,
        paths=args.paths or default_paths(args.out)
    )
    options = smc_options(cfg)
    panel, v = load_inputs(cfg)
    fit = fit_method(cfg.method, panel, options, v=v)
    result = {
        "method": fit.method,
        "treated": fit.treated_label,
        "t0": fit.t0,
        "weights": fit.weight_records(),
        "intercept": fit.intercept,
        "sigma2_hat": fit.sigma2_hat,
        "pre_rss": fit.pre_rss,
        "post_mspe": fit.post_mspe,
        "screened_units": None if fit.screened_units is None else list(fit.screened_units),
        "config": {**cfg.to_dict(), "options": options.to_dict()}
    }
    _write_json(result, cfg.out)
    write_table(paths_frame(fit), cfg.paths)
    logger.info(f"Wrote {cfg.out} and {cfg.paths}")
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    values = read_config(args.config) if args.config else {}
    for key in ('reps', 'seed', 'methods'):
        if getattr(args, key) is not None:
            values[key] = getattr(args, key)
    if args.preset:
        configs = preset_configs(args.preset, **values)
    else:
        configs = [SimConfig.from_dict(values)]
    tables, per_rep = [], []
    for cfg in configs:
        frame = simulate_mspe(cfg, args.workers)
        tables.append(summarize(cfg, frame))
        per_rep.append(frame.reset_index())
    table = pd.concat(tables, ignore_index=True)
    write_table(table, args.out)
    if args.per_rep:
        if len(per_rep) > 1:
            raise ConfigError("--per-rep is only available for a single design")
        write_table(per_rep[0], args.per_rep)
    if args.json:
        _write_json(
            {
                "configs": [cfg.to_dict() for cfg in configs],
                "table": table.to_dict(orient='records')
            },
            args.json
        )
    echo = _write_config_echo(
        'simulate',
        args.out,
        preset=args.preset,
        configs=[
            {**cfg.to_dict(), "options": SmcOptions(variance_variant=cfg.variance_variant).to_dict()}
            for cfg in configs
        ]
    )
    logger.info(f"Wrote {args.out} and {echo}")
    return 0


def cmd_placebo(args: argparse.Namespace) -> int:
    cfg = _study_config(args)
    options = smc_options(cfg)
    panel, v = load_inputs(cfg)
    fits = placebo_fits(panel, cfg.methods, options, v=v)
    write_table(placebo_table(fits, 'post_mspe', cfg.methods), cfg.out)
    if cfg.pre_out:
        write_table(placebo_table(fits, 'pre_rss', cfg.methods), cfg.pre_out)
    _write_config_echo('placebo', cfg.out, config=cfg.to_dict(), options=options.to_dict())
    return 0


def cmd_weights(args: argparse.Namespace) -> int:
    cfg = _study_config(args)
    options = smc_options(cfg)
    panel, v = load_inputs(cfg)
    write_table(weights_table(panel, cfg.methods, options, v=v), cfg.out)
    _write_config_echo('weights', cfg.out, config=cfg.to_dict(), options=options.to_dict())
    return 0


## Parser
def _panel_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--data', required=True, help='wide panel CSV (time,<unit1>,...)')
    parser.add_argument('--treated', required=True, help='label of the treated unit')
    parser.add_argument('--t0', required=True, type=int, help='number of pre-treatment periods')
    parser.add_argument('--covariates', help='covariate CSV (covariate,<unit1>,...)')
    parser.add_argument('--v-weights', dest='v_weights', help="CSV with a 'v' column, one row per pre-period")
    parser.add_argument(
        '--variance-variant', dest='variance_variant', default='appendix',
        help='noise variance estimate: appendix (default) or maintext'
    )
    parser.add_argument('--screen', default='auto', help='unit screening: auto, off or a keep-count')
    parser.add_argument('--out', required=True, help='output file')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='synthmatch',
        description='Synthetic matching control estimator and experiment harness.'
    )
    parser.add_argument('--version', action='version', version=f"%(prog)s {__version__}")
    parser.add_argument('-v', '--verbose', action='store_true', help='debug logging on stderr')
    sub = parser.add_subparsers(dest='command', required=True)

    fit = sub.add_parser('fit', help='fit one estimator on a CSV panel')
    _panel_arguments(fit)
    fit.add_argument('--method', default='smc', choices=METHOD_NAMES)
    fit.add_argument('--paths', help='path CSV (default: <out stem>_paths.csv)')
    fit.set_defaults(func=cmd_fit)

    sim = sub.add_parser('simulate', help='Monte Carlo table of post-period MSPE')
    sim.add_argument('--config', help='key = value file with simulation settings')
    sim.add_argument('--preset', choices=sorted(TABLE_PRESETS), help='run a named grid of designs')
    sim.add_argument('--reps', type=int)
    sim.add_argument('--seed', type=int)
    sim.add_argument('--methods', help='comma separated methods')
    sim.add_argument('--workers', type=int, help='worker processes (default: SMC_THREADS or all cores)')
    sim.add_argument('--per-rep', dest='per_rep', help='also write per-replication MSPE')
    sim.add_argument('--json', help='also write the table and configuration as JSON')
    sim.add_argument('--out', required=True, help='summary table CSV')
    sim.set_defaults(func=cmd_simulate)

    placebo = sub.add_parser('placebo', help='placebo study over the control regions')
    _panel_arguments(placebo)
    placebo.add_argument('--methods', default=','.join(METHOD_NAMES), help='comma separated methods')
    placebo.add_argument('--pre-out', dest='pre_out', help='also write the pre-period RSS table')
    placebo.set_defaults(func=cmd_placebo)

    weights = sub.add_parser('weights', help='per-unit weights of several methods')
    _panel_arguments(weights)
    weights.add_argument('--methods', default='sc,dsc,ols,smc', help='comma separated methods')
    weights.set_defaults(func=cmd_weights)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as ex:
        return ex.code if isinstance(ex.code, int) else 2
    setup_logging(logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except ValidationError as ex:
        print(str(ex), file=sys.stderr)
        return 2
    except ComputationError as ex:
        print(str(ex), file=sys.stderr)
        return 1
    except OSError as ex:
        print(f"IOError: {ex}", file=sys.stderr)
        return 2
