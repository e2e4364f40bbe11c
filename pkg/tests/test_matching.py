import numpy as np
import pytest

from synthmatch.exceptions import AllUnitsDegenerate
from synthmatch.matching import fitted_matrix, match_all, match_unit, thetas
from synthmatch.panel import center_pretreatment

from .conftest import make_panel, random_panel


def test_match_unit_slope_and_intercept(small_panel):
    cp = center_pretreatment(small_panel)
    t0 = small_panel.t0
    for j in small_panel.controls:
        m = match_unit(cp, int(j))
        x = small_panel.outcomes[:t0, j]
        y = small_panel.outcomes[:t0, 0]
        slope, intercept = np.polyfit(x, y, 1)
        assert m.theta == pytest.approx(slope, rel=1e-9)
        assert m.intercept == pytest.approx(intercept, rel=1e-9, abs=1e-9)
        assert m.label == small_panel.unit_labels[j]
        np.testing.assert_allclose(m.fitted_pre + m.residual_pre, cp.y1c)
        # residual is orthogonal to the regressor
        assert m.residual_pre @ cp.y0c[:, cp.position(j)] == pytest.approx(0.0, abs=1e-9)


def test_match_exact_copy():
    path = np.array([1.0, 3.0, 2.0, 5.0, 4.0])
    outcomes = np.column_stack([2.0 * path + 1.0, path, path[::-1]])
    panel = make_panel(outcomes, 4)
    m = match_unit(center_pretreatment(panel), 1)
    assert m.theta == pytest.approx(2.0)
    assert m.intercept == pytest.approx(1.0)
    np.testing.assert_allclose(m.residual_pre, 0.0, atol=1e-12)


def test_match_degenerate_control():
    outcomes = np.array([
        [1.0, 7.0, 0.0],
        [2.0, 7.0, 2.0],
        [4.0, 7.0, 1.0],
        [3.0, 7.0, 3.0],
    ])
    cp = center_pretreatment(make_panel(outcomes, 3))
    matched = match_all(cp)
    assert [m.excluded for m in matched] == [True, False]
    assert matched[0].theta == 0.0
    assert matched[0].intercept == pytest.approx(7.0 / 3.0)
    np.testing.assert_array_equal(matched[0].fitted_pre, 0.0)
    np.testing.assert_array_equal(thetas(matched)[0], 0.0)
    assert fitted_matrix(matched).shape == (3, 2)


def test_all_degenerate():
    outcomes = np.column_stack([np.arange(4.0), np.full(4, 2.0), np.full(4, -1.0)])
    with pytest.raises(AllUnitsDegenerate):
        match_all(center_pretreatment(make_panel(outcomes, 3)))


def test_match_all_order(small_panel):
    matched = match_all(center_pretreatment(small_panel))
    assert [m.unit for m in matched] == list(small_panel.controls)
    assert fitted_matrix(matched).shape == (small_panel.t0, small_panel.n_controls)
    assert fitted_matrix([]).shape == (0, 0)


def sum_formula(x, y):
    """Slope and intercept of y on x written out as sums."""
    n = len(x)
    x_bar = sum(x) / n
    y_bar = sum(y) / n
    sxy = sum((xi - x_bar) * (yi - y_bar) for xi, yi in zip(x, y))
    sxx = sum((xi - x_bar) ** 2 for xi in x)
    slope = sxy / sxx
    return slope, y_bar - slope * x_bar


def test_match_random_panels(rng):
    for _ in range(1000):
        n_periods = int(rng.integers(6, 30))
        t0 = int(rng.integers(3, n_periods))
        panel = random_panel(rng, n_periods, int(rng.integers(2, 6)), t0)
        cp = center_pretreatment(panel)
        y = panel.outcomes[:t0, 0]
        design = np.ones((t0, 2))
        for m in match_all(cp):
            x = panel.outcomes[:t0, m.unit]
            slope, intercept = sum_formula(x.tolist(), y.tolist())
            assert m.theta == pytest.approx(slope, rel=1e-10, abs=1e-12)
            # regression with its own intercept on the raw data
            design[:, 1] = x
            coef = np.linalg.lstsq(design, y, rcond=None)[0]
            scale = max(1.0, abs(coef[0]))
            assert m.intercept == pytest.approx(coef[0], rel=1e-10, abs=1e-10 * scale)
            assert m.theta == pytest.approx(coef[1], rel=1e-10, abs=1e-12)
            assert np.linalg.norm(m.residual_pre) <= np.linalg.norm(cp.y1c) * (1 + 1e-12)


def test_match_scale_equivariance(rng):
    for _ in range(100):
        panel = random_panel(rng, 20, 4, 15)
        c = rng.choice([-1.0, 1.0]) * rng.uniform(0.1, 10.0)
        scaled = panel.outcomes.copy()
        scaled[:, 2] *= c
        base = match_all(center_pretreatment(panel))[1]
        other = match_all(center_pretreatment(make_panel(scaled, 15)))[1]
        assert other.theta == pytest.approx(base.theta / c, rel=1e-10)
        assert other.intercept == pytest.approx(base.intercept, rel=1e-10, abs=1e-10)
        np.testing.assert_allclose(other.fitted_pre, base.fitted_pre, rtol=1e-10, atol=1e-10)
