from pathlib import Path

import numpy as np
import pytest

from synthmatch.panel import PanelData

TOY_PANEL = Path(__file__).resolve().parent.parent / 'synthmatch' / 'data' / 'toy_panel.csv'


def make_panel(outcomes, t0: int, treated: int = 0, **kwargs) -> PanelData:
    outcomes = np.asarray(outcomes, dtype=float)
    n_periods, n_units = outcomes.shape
    return PanelData(
        outcomes=outcomes,
        unit_labels=tuple(f"u{j}" for j in range(n_units)),
        time_labels=tuple(str(2000 + t) for t in range(n_periods)),
        treated=treated,
        t0=t0,
        **kwargs
    )


def random_panel(rng, n_periods: int, n_units: int, t0: int) -> PanelData:
    """Correlated random-walk panel: a common trend plus unit noise."""
    common = np.cumsum(rng.standard_normal(n_periods))
    outcomes = common[:, None] * rng.uniform(0.5, 1.5, n_units) + rng.standard_normal((n_periods, n_units))
    return make_panel(outcomes, t0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def toy_panel_path():
    return TOY_PANEL


@pytest.fixture
def small_panel(rng):
    return random_panel(rng, 30, 6, 24)
