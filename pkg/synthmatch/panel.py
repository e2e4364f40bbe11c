"""
Panel core.

Panel data model, wide CSV ingestion, pre-treatment centering, covariate
stacking and diagonal-V weighting shared by every estimator.
"""
import logging
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
import pandas as pd
from typing_extensions import TypeAlias

from .exceptions import (
    ConfigError,
    DuplicateUnit,
    InvalidSplit,
    LengthMismatch,
    MissingValue,
    NegativeWeight,
    NoCovariates,
    UnknownUnit,
    ZeroVarianceCovariate,
)
from .fields import Field
from .models import Model

logger = logging.getLogger(__name__)

PathLike: TypeAlias = Union[str, Path]

SCALINGS = ('match_outcome_variance', 'none')
# relative tolerance below which a centered control column is considered null
DEGENERATE_RTOL = 1e-12


def _frozen(values, ndim: int, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if ndim == 2 and arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != ndim:
        raise LengthMismatch(
            f"{name} must be a {ndim}-dimensional array, got shape {arr.shape}"
        )
    if not np.isfinite(arr).all():
        raise MissingValue(f"{name} contains non-finite values")
    arr.setflags(write=False)
    return arr


def _duplicates(labels: Sequence[str]) -> list:
    seen, dup = set(), []
    for label in labels:
        if label in seen and label not in dup:
            dup.append(label)
        seen.add(label)
    return dup


class PanelData(Model):
    """Outcomes of J+1 units over T periods, one of them treated after ``t0``.

    ``outcomes`` is T x (J+1) with one column per unit. ``covariates`` is
    p x (J+1). ``aux_rows`` holds (already scaled) covariate rows stacked
    under the pre-period block for fitting only; prediction always uses
    outcome rows.
    """
    outcomes: np.ndarray
    unit_labels: tuple
    time_labels: tuple
    treated: int
    t0: int
    covariates: Optional[np.ndarray] = None
    covariate_labels: tuple = ()
    aux_rows: Optional[np.ndarray] = None

    class Meta:
        name = 'panel'
        description = 'Wide panel of outcomes'

    def __post_init__(self) -> None:
        outcomes = _frozen(self.outcomes, 2, 'outcomes')
        object.__setattr__(self, 'outcomes', outcomes)
        n_periods, n_units = outcomes.shape
        labels = tuple(str(u) for u in self.unit_labels)
        if len(labels) != n_units:
            raise LengthMismatch(
                f"{len(labels)} unit labels for {n_units} outcome columns"
            )
        if (dup := _duplicates(labels)):
            raise DuplicateUnit(f"repeated unit label(s): {', '.join(dup)}")
        object.__setattr__(self, 'unit_labels', labels)
        times = tuple(str(t) for t in self.time_labels)
        if len(times) != n_periods:
            raise LengthMismatch(
                f"{len(times)} time labels for {n_periods} periods"
            )
        object.__setattr__(self, 'time_labels', times)
        treated = int(self.treated)
        if not 0 <= treated < n_units:
            raise UnknownUnit(f"treated index {treated} out of range 0..{n_units - 1}")
        object.__setattr__(self, 'treated', treated)
        t0 = int(self.t0)
        if not 1 <= t0 < n_periods:
            raise InvalidSplit(
                f"t0={t0} must satisfy 1 <= t0 < T={n_periods}"
            )
        object.__setattr__(self, 't0', t0)
        if self.covariates is not None:
            cov = _frozen(self.covariates, 2, 'covariates')
            if cov.shape[1] != n_units:
                raise LengthMismatch(
                    f"covariates have {cov.shape[1]} columns for {n_units} units"
                )
            names = tuple(str(c) for c in self.covariate_labels) or tuple(
                f"x{k + 1}" for k in range(cov.shape[0])
            )
            if len(names) != cov.shape[0]:
                raise LengthMismatch(
                    f"{len(names)} covariate labels for {cov.shape[0]} covariates"
                )
            object.__setattr__(self, 'covariates', cov)
            object.__setattr__(self, 'covariate_labels', names)
        else:
            object.__setattr__(self, 'covariate_labels', ())
        if self.aux_rows is not None:
            aux = _frozen(self.aux_rows, 2, 'aux_rows')
            if aux.shape[1] != n_units:
                raise LengthMismatch(
                    f"auxiliary rows have {aux.shape[1]} columns for {n_units} units"
                )
            object.__setattr__(self, 'aux_rows', aux)

    @property
    def n_periods(self) -> int:
        return self.outcomes.shape[0]

    @property
    def n_units(self) -> int:
        return self.outcomes.shape[1]

    @property
    def n_controls(self) -> int:
        return self.n_units - 1

    @property
    def n_aux(self) -> int:
        return 0 if self.aux_rows is None else self.aux_rows.shape[0]

    @property
    def controls(self) -> np.ndarray:
        """Column indices of the control units, in panel order."""
        return np.array(
            [j for j in range(self.n_units) if j != self.treated], dtype=int
        )

    @property
    def treated_label(self) -> str:
        return self.unit_labels[self.treated]

    @property
    def control_labels(self) -> tuple:
        return tuple(self.unit_labels[j] for j in self.controls)

    @property
    def treated_path(self) -> np.ndarray:
        return self.outcomes[:, self.treated]

    def pre_block(self) -> np.ndarray:
        """Fitting block: pre-period outcome rows, then stacked covariate rows."""
        block = self.outcomes[:self.t0]
        if self.aux_rows is not None:
            block = np.vstack([block, self.aux_rows])
        return block

    def index_of(self, label: str) -> int:
        try:
            return self.unit_labels.index(str(label))
        except ValueError as ex:
            raise UnknownUnit(f"unit {label!r} not found in panel") from ex

    def _columns(self, keep: Sequence[int], treated: int) -> 'PanelData':
        keep = list(keep)
        return PanelData(
            outcomes=self.outcomes[:, keep],
            unit_labels=tuple(self.unit_labels[j] for j in keep),
            time_labels=self.time_labels,
            treated=keep.index(treated),
            t0=self.t0,
            covariates=None if self.covariates is None else self.covariates[:, keep],
            covariate_labels=self.covariate_labels,
            aux_rows=None if self.aux_rows is None else self.aux_rows[:, keep]
        )

    def subset(self, labels: Sequence[str]) -> 'PanelData':
        """Panel restricted to the treated unit plus the given controls (panel order kept)."""
        wanted = {self.index_of(label) for label in labels}
        wanted.discard(self.treated)
        keep = [j for j in range(self.n_units) if j == self.treated or j in wanted]
        return self._columns(keep, self.treated)

    def as_placebo(self, label: str) -> 'PanelData':
        """The given control becomes pseudo-treated; the treated unit leaves the panel."""
        new_treated = self.index_of(label)
        if new_treated == self.treated:
            raise UnknownUnit(f"{label!r} is the treated unit, not a control")
        keep = [j for j in range(self.n_units) if j != self.treated]
        return self._columns(keep, new_treated)


class CenteredPanel(Model):
    """Pre-period fitting block centered unit by unit."""
    y1c: np.ndarray
    y0c: np.ndarray
    y1_mean: float
    control_means: np.ndarray
    controls: np.ndarray
    degenerate: np.ndarray
    source: PanelData

    class Meta:
        name = 'centered_panel'

    @property
    def n_rows(self) -> int:
        return self.y1c.shape[0]

    @property
    def n_controls(self) -> int:
        return self.y0c.shape[1]

    def position(self, unit: int) -> int:
        """Position of a panel column index among the controls."""
        hits = np.flatnonzero(self.controls == int(unit))
        if hits.size == 0:
            raise UnknownUnit(f"unit index {unit} is not a control unit")
        return int(hits[0])


class EstimatorOutput(Model):
    """Counterfactual path, ATT and weights produced by an estimator."""
    method: str = Field(required=True, choices=('smc', 'sc', 'dsc', 'ols'))
    treated_label: str = ''
    t0: int = 0
    time_labels: tuple = ()
    unit_labels: tuple = ()
    observed: Optional[np.ndarray] = None
    counterfactual: Optional[np.ndarray] = None
    att: Optional[np.ndarray] = None
    comprehensive_weights: Optional[np.ndarray] = None
    weights: Optional[np.ndarray] = None
    thetas: Optional[np.ndarray] = None
    intercept: float = 0.0
    pre_rss: float = 0.0
    post_mspe: Optional[float] = None
    criterion: Optional[float] = None
    sigma2_hat: Optional[float] = None
    variance_variant: Optional[str] = None
    screened_units: Optional[tuple] = None

    class Meta:
        name = 'estimator_output'

    def weight_records(self) -> list:
        """Per-unit weight records ``{unit, w, theta, comprehensive}``."""
        records = []
        for k, label in enumerate(self.unit_labels):
            records.append({
                "unit": label,
                "w": None if self.weights is None else float(self.weights[k]),
                "theta": None if self.thetas is None else float(self.thetas[k]),
                "comprehensive": float(self.comprehensive_weights[k])
            })
        return records


def build_output(
    method: str,
    panel: PanelData,
    counterfactual: np.ndarray,
    comprehensive_weights: np.ndarray,
    intercept: float = 0.0,
    **kwargs
) -> EstimatorOutput:
    """Assemble an EstimatorOutput.

    ATT and pre-period RSS follow from the path. ``post_mspe`` is left to
    callers that know the untreated path (simulations and placebo studies).
    """
    counterfactual = np.asarray(counterfactual, dtype=float)
    if counterfactual.shape != (panel.n_periods, ):
        raise LengthMismatch(
            f"counterfactual of shape {counterfactual.shape} for T={panel.n_periods}"
        )
    observed = panel.treated_path.copy()
    att = observed - counterfactual
    pre = att[:panel.t0]
    return EstimatorOutput(
        method=method,
        treated_label=panel.treated_label,
        t0=panel.t0,
        time_labels=panel.time_labels,
        unit_labels=panel.control_labels,
        observed=observed,
        counterfactual=counterfactual,
        att=att,
        comprehensive_weights=np.asarray(comprehensive_weights, dtype=float),
        intercept=float(intercept),
        pre_rss=float(pre @ pre),
        **kwargs
    )


## CSV ingestion
def _read_wide(path: PathLike, kind: str) -> tuple:
    """Reads a wide CSV into (header, row labels, numeric matrix)."""
    try:
        frame = pd.read_csv(
            Path(path),
            header=None,
            dtype=str,
            keep_default_na=False,
            encoding='utf-8'
        )
    except pd.errors.EmptyDataError as ex:
        raise MissingValue(f"{kind} file {path} is empty") from ex
    except pd.errors.ParserError as ex:
        raise MissingValue(f"{kind} file {path} is malformed: {ex}") from ex
    if frame.shape[0] < 2 or frame.shape[1] < 2:
        raise MissingValue(f"{kind} file {path} has no data rows or unit columns")
    header = [str(h).strip() for h in frame.iloc[0, 1:].tolist()]
    if (dup := _duplicates(header)):
        raise DuplicateUnit(f"repeated unit label(s) in {path}: {', '.join(dup)}")
    rows = frame.iloc[1:, :]
    labels = [str(v).strip() for v in rows.iloc[:, 0].tolist()]
    cells = rows.iloc[:, 1:].apply(lambda column: column.str.strip())
    values = cells.apply(pd.to_numeric, errors='coerce').to_numpy(dtype=float)
    bad = np.argwhere(~np.isfinite(values))
    if bad.size:
        i, j = bad[0]
        text = cells.iat[i, j] if isinstance(cells.iat[i, j], str) else ''
        where = f"{kind} file {path}: row {labels[i]!r}, unit {header[j]!r}"
        try:
            parsed = float(text)
        except ValueError:
            parsed = 0.0
        if np.isfinite(parsed):
            raise MissingValue(f"{where} has invalid value {text!r}")
        raise MissingValue(f"{where} is not finite")
    return header, labels, values


def load_panel_csv(path: PathLike, treated_label: str, t0: int) -> PanelData:
    """load_panel_csv.

    Reads a wide panel CSV: header ``time,<unit1>,<unit2>,...`` and one row
    per period, in file order.

    Raises:
        MissingValue: empty or non-numeric cell.
        DuplicateUnit: repeated header label.
        UnknownUnit: ``treated_label`` not in the header.
        InvalidSplit: ``t0`` outside ``1 <= t0 < T``.
    """
    units, times, values = _read_wide(path, 'panel')
    if str(treated_label) not in units:
        raise UnknownUnit(f"treated unit {treated_label!r} not found in {path}")
    t0 = int(t0)
    if not 1 <= t0 < values.shape[0]:
        raise InvalidSplit(
            f"t0={t0} must satisfy 1 <= t0 < T={values.shape[0]}"
        )
    panel = PanelData(
        outcomes=values,
        unit_labels=tuple(units),
        time_labels=tuple(times),
        treated=units.index(str(treated_label)),
        t0=t0
    )
    logger.debug(
        f"Loaded panel {path}: T={panel.n_periods}, J={panel.n_controls}, "
        f"treated={panel.treated_label}, t0={panel.t0}"
    )
    return panel


def write_panel_csv(panel: PanelData, path: PathLike) -> None:
    """Writes the panel outcomes as a wide CSV with 17 significant digits."""
    frame = pd.DataFrame(panel.outcomes, columns=list(panel.unit_labels))
    frame.insert(0, 'time', list(panel.time_labels))
    frame.to_csv(Path(path), index=False, float_format='%.17g', lineterminator='\n')


def load_covariates_csv(path: PathLike, panel: PanelData) -> PanelData:
    """Attaches a covariate CSV (``covariate,<unit1>,...``) to the panel, matching units by label."""
    units, names, values = _read_wide(path, 'covariate')
    missing = [u for u in panel.unit_labels if u not in units]
    if missing:
        raise UnknownUnit(f"covariate file {path} lacks unit(s): {', '.join(missing)}")
    extra = [u for u in units if u not in panel.unit_labels]
    if extra:
        raise UnknownUnit(f"covariate file {path} has unknown unit(s): {', '.join(extra)}")
    order = [units.index(u) for u in panel.unit_labels]
    return panel.replace(covariates=values[:, order], covariate_labels=tuple(names))


def load_v_weights_csv(path: PathLike, t0: Optional[int] = None) -> np.ndarray:
    """Reads a single-column ``v`` CSV with one diagonal V entry per pre-period."""
    try:
        frame = pd.read_csv(Path(path), dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError as ex:
        raise MissingValue(f"V-weights file {path} is empty") from ex
    frame.columns = [str(c).strip() for c in frame.columns]
    if 'v' not in frame.columns:
        raise ConfigError(f"V-weights file {path} needs a 'v' column")
    try:
        v = np.array([float(str(x).strip()) for x in frame['v']], dtype=float)
    except ValueError as ex:
        raise MissingValue(f"V-weights file {path} has an invalid value") from ex
    if t0 is not None and v.shape[0] != int(t0):
        raise LengthMismatch(f"{v.shape[0]} V weights for t0={t0}")
    return v


## Transformations
def center_pretreatment(panel: PanelData) -> CenteredPanel:
    """center_pretreatment.

    Centers the treated column and every control column of the fitting
    block on its own mean. Control columns that are constant over the
    block are flagged as degenerate (zeroed, reported with a warning).
    """
    block = panel.pre_block()
    controls = panel.controls
    y1 = block[:, panel.treated]
    y0 = block[:, controls]
    y1_mean = float(y1.mean())
    means = y0.mean(axis=0)
    y1c = y1 - y1_mean
    y0c = y0 - means
    if y0.shape[1]:
        scale = np.maximum(1.0, np.abs(y0).max(axis=0)) * np.sqrt(block.shape[0])
        degenerate = (np.ptp(y0, axis=0) == 0) | (
            np.linalg.norm(y0c, axis=0) <= DEGENERATE_RTOL * scale
        )
    else:
        degenerate = np.zeros(0, dtype=bool)
    if degenerate.any():
        y0c[:, degenerate] = 0.0
        names = [panel.unit_labels[j] for j in controls[degenerate]]
        logger.warning(
            f"DegenerateUnit: control unit(s) {', '.join(names)} constant over "
            "the pre-period, excluded from matching"
        )
    return CenteredPanel(
        y1c=y1c,
        y0c=y0c,
        y1_mean=y1_mean,
        control_means=means,
        controls=controls,
        degenerate=degenerate,
        source=panel
    )


def stack_covariates(panel: PanelData, scaling: str = 'match_outcome_variance') -> PanelData:
    """stack_covariates.

    Stacks the covariate rows under the pre-period outcome block. With
    ``match_outcome_variance`` each covariate row k is multiplied by
    s_y / s_k, where s_k is its cross-unit standard deviation and s_y the
    average cross-unit standard deviation of the pre-period outcome rows.
    """
    if scaling not in SCALINGS:
        raise ConfigError(f"unknown covariate scaling {scaling!r}, expected one of {SCALINGS}")
    if panel.covariates is None or panel.covariates.shape[0] == 0:
        raise NoCovariates("panel has no covariates to stack")
    rows = panel.covariates.copy()
    if scaling == 'match_outcome_variance':
        s_k = rows.std(axis=1, ddof=1)
        s_y = float(panel.outcomes[:panel.t0].std(axis=1, ddof=1).mean())
        zero = s_k == 0
        if zero.any():
            names = [panel.covariate_labels[k] for k in np.flatnonzero(zero)]
            raise ZeroVarianceCovariate(
                f"covariate(s) {', '.join(names)} constant across units"
            )
        rows = rows * (s_y / s_k)[:, None]
    return panel.replace(aux_rows=rows)


def apply_diag_weights(panel: PanelData, v: Sequence[float]) -> PanelData:
    """Multiplies pre-period outcome row t by sqrt(v_t); post-period rows are untouched."""
    v = np.asarray(v, dtype=float).ravel()
    if v.shape[0] != panel.t0:
        raise LengthMismatch(f"{v.shape[0]} V weights for t0={panel.t0}")
    if not np.isfinite(v).all():
        raise MissingValue("V weights contain non-finite values")
    if (v < 0).any():
        raise NegativeWeight("V weights must be nonnegative")
    outcomes = panel.outcomes.copy()
    outcomes[:panel.t0] *= np.sqrt(v)[:, None]
    return panel.replace(outcomes=outcomes)
