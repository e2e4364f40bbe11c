import numpy as np
import pandas as pd
import pytest

from synthmatch.baselines import fit_sc
from synthmatch.cli import default_config_path, default_paths, main, read_config
from synthmatch.exceptions import ConfigError
from synthmatch.panel import load_panel_csv, write_panel_csv
from synthmatch.parsers.json import json_decoder
from synthmatch.version import __version__

from .conftest import random_panel


def panel_args(path, treated='treated', t0=3):
    return ['--data', str(path), '--treated', treated, '--t0', str(t0)]


@pytest.fixture
def design_file(tmp_path):
    path = tmp_path / 'design.conf'
    path.write_text(
        "# small factor design\n"
        "dgp = factor\n"
        "T = 25\n"
        "T0 = 20\n"
        "J = 5\n"
        "lambda_pattern = l3   # all units load on the factor\n"
        "sigma = 0.5\n"
        "\n"
        "seed = 3\n",
        encoding='utf-8'
    )
    return path


def test_fit_toy_panel(tmp_path, toy_panel_path):
    out = tmp_path / 'fit.json'
    code = main(['fit', *panel_args(toy_panel_path), '--out', str(out)])
    assert code == 0
    result = json_decoder(out.read_text(encoding='utf-8'))
    assert result['method'] == 'smc'
    assert result['treated'] == 'treated'
    assert result['t0'] == 3
    assert [w['unit'] for w in result['weights']] == ['a', 'b']
    assert result['weights'][0]['w'] == 0.0
    assert result['screened_units'] == ['b']
    assert result['sigma2_hat'] >= 0
    assert result['post_mspe'] is None
    assert result['config']['options']['variance_variant'] == 'appendix_dof'
    paths = pd.read_csv(tmp_path / 'fit_paths.csv')
    assert list(paths.columns) == ['year', 'actual', 'counterfactual', 'att']
    assert len(paths) == 4


def test_fit_invalid_split(tmp_path, toy_panel_path, capsys):
    code = main(['fit', *panel_args(toy_panel_path, t0=10), '--out', str(tmp_path / 'fit.json')])
    assert code == 2
    err = capsys.readouterr().err.strip()
    assert err.startswith('InvalidSplit:')
    assert '\n' not in err
    assert not (tmp_path / 'fit.json').exists()


def test_fit_unknown_treated(tmp_path, toy_panel_path, capsys):
    code = main(['fit', *panel_args(toy_panel_path, treated='zz'), '--out', str(tmp_path / 'f.json')])
    assert code == 2
    assert capsys.readouterr().err.startswith('UnknownUnit:')


def test_fit_missing_file(tmp_path, capsys):
    code = main(['fit', *panel_args(tmp_path / 'nothing.csv'), '--out', str(tmp_path / 'f.json')])
    assert code == 2
    assert capsys.readouterr().err.startswith('IOError:')


def test_fit_sc_paths_match_library(tmp_path, rng):
    panel = random_panel(rng, 20, 6, 15)
    data = tmp_path / 'panel.csv'
    write_panel_csv(panel, data)
    out = tmp_path / 'sc.json'
    paths = tmp_path / 'sc_paths.csv'
    code = main([
        'fit', *panel_args(data, treated='u0', t0=15), '--method', 'sc',
        '--out', str(out), '--paths', str(paths)
    ])
    assert code == 0
    expected = fit_sc(load_panel_csv(data, 'u0', 15))
    frame = pd.read_csv(paths, float_precision='round_trip')
    np.testing.assert_array_equal(frame['counterfactual'].to_numpy(), expected.counterfactual)
    np.testing.assert_array_equal(frame['att'].to_numpy(), expected.att)
    result = json_decoder(out.read_text(encoding='utf-8'))
    assert result['intercept'] == 0.0
    assert sum(w['w'] for w in result['weights']) == pytest.approx(1.0)


def test_fit_screen_options(tmp_path, toy_panel_path, capsys):
    out = tmp_path / 'fit.json'
    assert main(['fit', *panel_args(toy_panel_path), '--screen', 'off', '--variance-variant', 'maintext', '--out', str(out)]) == 0
    result = json_decoder(out.read_text(encoding='utf-8'))
    assert result['screened_units'] is None
    assert result['config']['options']['variance_variant'] == 'maintext_diag'
    capsys.readouterr()
    code = main(['fit', *panel_args(toy_panel_path), '--screen', '0', '--out', str(out)])
    assert code == 2
    assert capsys.readouterr().err.startswith('InvalidKeepCount:')


def test_simulate_single_replication(tmp_path, design_file):
    out = tmp_path / 'table.csv'
    per_rep = tmp_path / 'reps.csv'
    code = main([
        'simulate', '--config', str(design_file), '--reps', '1', '--workers', '1',
        '--out', str(out), '--per-rep', str(per_rep)
    ])
    assert code == 0
    table = pd.read_csv(out)
    assert table['method'].tolist() == ['smc', 'sc', 'dsc', 'ols']
    assert (table['reps'] == 1).all()
    reps = pd.read_csv(per_rep)
    assert list(reps.columns) == ['rep', 'smc', 'sc', 'dsc', 'ols']
    np.testing.assert_allclose(table['mean_mspe'].to_numpy(), reps.iloc[0, 1:].to_numpy(dtype=float))


def test_simulate_is_byte_identical(tmp_path, design_file):
    first, second = tmp_path / 'a.csv', tmp_path / 'b.csv'
    args = ['simulate', '--config', str(design_file), '--reps', '3', '--workers', '1', '--methods', 'smc,sc']
    assert main([*args, '--out', str(first)]) == 0
    assert main([*args, '--out', str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()


def test_simulate_config_echo_reproduces(tmp_path, design_file):
    out = tmp_path / 'table.csv'
    args = ['simulate', '--config', str(design_file), '--reps', '2', '--workers', '1', '--methods', 'smc,sc']
    assert main([*args, '--out', str(out)]) == 0
    table = pd.read_csv(out)
    assert (table['variance_variant'] == 'appendix_dof').all()
    assert (table['alpha'] == 'time').all()
    echo = json_decoder((tmp_path / 'table_config.json').read_text(encoding='utf-8'))
    assert echo['command'] == 'simulate'
    (config, ) = echo['configs']
    assert config['options']['variance_variant'] == 'appendix_dof'
    assert config['methods'] == ['smc', 'sc']
    # rerun from the echo alone
    rerun = tmp_path / 'rerun.conf'
    rerun.write_text(
        ''.join(f"{key} = {value}\n" for key, value in config.items() if key not in ('options', 'methods'))
        + "methods = smc, sc\n",
        encoding='utf-8'
    )
    again = tmp_path / 'again.csv'
    assert main(['simulate', '--config', str(rerun), '--workers', '1', '--out', str(again)]) == 0
    assert again.read_bytes() == out.read_bytes()


def test_simulate_json(tmp_path, design_file):
    out, js = tmp_path / 't.csv', tmp_path / 't.json'
    code = main([
        'simulate', '--config', str(design_file), '--reps', '2', '--workers', '1',
        '--methods', 'ols', '--out', str(out), '--json', str(js)
    ])
    assert code == 0
    data = json_decoder(js.read_text(encoding='utf-8'))
    assert data['configs'][0]['J'] == 5
    assert data['table'][0]['method'] == 'ols'


def test_simulate_unknown_key(tmp_path, capsys):
    conf = tmp_path / 'bad.conf'
    conf.write_text("dgp = factor\ncolour = red\n", encoding='utf-8')
    code = main(['simulate', '--config', str(conf), '--out', str(tmp_path / 't.csv')])
    assert code == 2
    assert capsys.readouterr().err.startswith('ConfigError:')


def test_placebo_single_method(tmp_path, toy_panel_path):
    out = tmp_path / 'placebo.csv'
    pre = tmp_path / 'pre.csv'
    code = main([
        'placebo', *panel_args(toy_panel_path), '--methods', 'sc',
        '--out', str(out), '--pre-out', str(pre)
    ])
    assert code == 0
    table = pd.read_csv(out)
    assert list(table.columns) == ['region', 'sc']
    assert table['region'].tolist() == ['a', 'b', 'average']
    assert pd.read_csv(pre).shape == (3, 2)
    echo = json_decoder((tmp_path / 'placebo_config.json').read_text(encoding='utf-8'))
    assert echo['command'] == 'placebo'
    assert echo['config']['methods'] == ['sc']
    assert echo['config']['t0'] == 3
    assert echo['options']['screen_mode'] == 'auto'


def test_weights_command(tmp_path, toy_panel_path):
    out = tmp_path / 'weights.csv'
    code = main(['weights', *panel_args(toy_panel_path), '--out', str(out)])
    assert code == 0
    table = pd.read_csv(out)
    assert list(table.columns) == ['region', 'sc', 'dsc', 'ols', 'smc']
    assert table['region'].tolist() == ['a', 'b', 'intercept']
    assert np.isnan(table['sc'].iloc[-1])
    echo = json_decoder((tmp_path / 'weights_config.json').read_text(encoding='utf-8'))
    assert echo['command'] == 'weights'
    assert echo['config']['treated'] == 'treated'
    assert echo['options']['variance_variant'] == 'appendix_dof'


def test_weights_unknown_method(tmp_path, toy_panel_path, capsys):
    code = main(['weights', *panel_args(toy_panel_path), '--methods', 'sc,lasso', '--out', str(tmp_path / 'w.csv')])
    assert code == 2
    assert capsys.readouterr().err.startswith('ConfigError:')


def test_usage_errors(capsys):
    assert main([]) == 2
    assert main(['fit', '--data', 'x.csv']) == 2
    assert main(['--version']) == 0
    assert __version__ in capsys.readouterr().out


def test_read_config(tmp_path):
    good = tmp_path / 'a.conf'
    good.write_text("reps = 10\n# note\nmethods = smc, sc  # two\n", encoding='utf-8')
    assert read_config(str(good)) == {'reps': '10', 'methods': 'smc, sc'}
    for text in ("reps 10\n", "= 3\n", "reps = 1\nreps = 2\n"):
        bad = tmp_path / 'bad.conf'
        bad.write_text(text, encoding='utf-8')
        with pytest.raises(ConfigError):
            read_config(str(bad))


def test_default_paths():
    assert default_paths('out/fit.json') == 'out/fit_paths.csv'
    assert default_config_path('out/table.csv') == 'out/table_config.json'
