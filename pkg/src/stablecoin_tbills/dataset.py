"""Ingest and transform the quarterly holdings/yield panel.

The raw panel is one row per period with the stablecoin issuer's direct
T-bill holdings, total T-bills outstanding and the 1-month and 3-month
secondary-market yields (percent per annum). From it we derive

    (i)   log 1-month yield        ln(yield in percent)
    (ii)  log 3-month yield
    (iii) market share             holdings / outstanding, decimal fraction
    (iv)  time trend               1..n
    (v)   T-bill changes (IHS)     asinh of the change in outstanding
    (vi)  T-bill changes residual  (v) net of a constant, (iv) and (iii), x1000
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Iterable, Sequence

import numpy as np

from .regress import RankDeficiencyError, collinear_columns

CSV_COLUMNS = (
    "period_index",
    "date_label",
    "tether_holdings_usd",
    "tbills_outstanding_usd",
    "yield_1m_pct",
    "yield_3m_pct",
)

# Changes in outstanding enter the IHS in millions of USD, the unit Treasury
# debt statistics are published in.
CHANGE_UNIT_USD = 1e6
RESIDUAL_SCALE = 1000.0

# Variables (i)-(vi), in display order.
PANEL_VARIABLES = (
    "log_yield_1m",
    "log_yield_3m",
    "market_share",
    "time_trend",
    "tbill_change_ihs",
    "tbill_change_residual",
)

VARIABLE_LABELS = {
    "log_yield_1m": "(i) Log 1-Month Yields",
    "log_yield_3m": "(ii) Log 3-Month Yields",
    "market_share": "(iii) Market Share",
    "time_trend": "(iv) Time Trend",
    "tbill_change_ihs": "(v) T-Bill Changes IHS",
    "tbill_change_residual": "(vi) T-Bill Changes Residual",
}


class PanelValidationError(ValueError):
    """Raised when the raw panel violates the schema or its invariants.

    ``line`` is the 1-based line number in the CSV source when known.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        self.reason = message
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Observation:
    """One period of raw inputs."""

    period_index: int
    date_label: str
    tether_holdings: float
    tbills_outstanding: float
    yield_1m: float
    yield_3m: float

    def validate(self, line: int | None = None) -> None:
        if self.period_index < 1:
            raise PanelValidationError("period_index must be >= 1", line)
        if not self.tbills_outstanding > 0:
            raise PanelValidationError("tbills_outstanding must be positive", line)
        if not self.tether_holdings >= 0:
            raise PanelValidationError("negative holdings", line)
        if self.tether_holdings > self.tbills_outstanding:
            raise PanelValidationError("holdings exceed outstanding", line)
        for name in ("yield_1m", "yield_3m"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise PanelValidationError(f"non-positive yield ({name}={value!r})", line)


def _parse_row(row: dict, line: int) -> Observation:
    try:
        period = int(row["period_index"])
    except ValueError:
        raise PanelValidationError(
            f"malformed row: period_index {row['period_index']!r} is not an integer", line
        ) from None
    values = {}
    for column in CSV_COLUMNS[2:]:
        raw = row[column]
        try:
            values[column] = float(raw)
        except (TypeError, ValueError):
            raise PanelValidationError(f"malformed row: {column} {raw!r} is not a number", line) from None
        if not math.isfinite(values[column]):
            raise PanelValidationError(f"malformed row: {column} is not finite", line)
    obs = Observation(
        period_index=period,
        date_label=row["date_label"],
        tether_holdings=values["tether_holdings_usd"],
        tbills_outstanding=values["tbills_outstanding_usd"],
        yield_1m=values["yield_1m_pct"],
        yield_3m=values["yield_3m_pct"],
    )
    obs.validate(line)
    return obs


def check_periods(observations: Sequence[Observation]) -> None:
    """Require period indices to be exactly 1..n once sorted."""
    seen: set[int] = set()
    for obs in observations:
        if obs.period_index in seen:
            raise PanelValidationError(f"duplicate period_index {obs.period_index}")
        seen.add(obs.period_index)
    expected = 1
    for period in sorted(seen):
        if period != expected:
            raise PanelValidationError(
                f"non-consecutive period_index: expected {expected}, found {period}"
            )
        expected += 1


def load_panel(csv_source: BinaryIO) -> list[Observation]:
    """Parse a UTF-8 CSV byte stream into validated observations.

    The header must match :data:`CSV_COLUMNS` exactly. Rows may appear in any
    order; the result is sorted by ``period_index``.

    Raises
    ------
    PanelValidationError
        On a missing column, a malformed row (with its line number), a
        non-positive yield, holdings above outstanding, or duplicate /
        non-consecutive period indices.
    """
    text = io.TextIOWrapper(csv_source, encoding="utf-8", newline="")
    try:
        reader = csv.reader(text)
        try:
            header = next(reader)
        except StopIteration:
            raise PanelValidationError("empty file", 1) from None
        header = [h.strip() for h in header]
        missing = [c for c in CSV_COLUMNS if c not in header]
        if missing:
            raise PanelValidationError(f"missing column(s): {', '.join(missing)}", 1)
        if tuple(header) != CSV_COLUMNS:
            raise PanelValidationError(
                "header must be exactly: " + ",".join(CSV_COLUMNS), 1
            )
        observations = []
        for fields in reader:
            line = reader.line_num
            if not fields or all(not f.strip() for f in fields):
                continue
            if len(fields) != len(CSV_COLUMNS):
                raise PanelValidationError(
                    f"malformed row: expected {len(CSV_COLUMNS)} fields, got {len(fields)}", line
                )
            row = dict(zip(CSV_COLUMNS, (f.strip() for f in fields)))
            observations.append(_parse_row(row, line))
    finally:
        text.detach()
    if not observations:
        raise PanelValidationError("no data rows")
    check_periods(observations)
    return sorted(observations, key=lambda o: o.period_index)


def read_panel(path: str | Path) -> list[Observation]:
    with open(path, "rb") as fh:
        return load_panel(fh)


def write_panel(observations: Iterable[Observation], path: str | Path) -> None:
    """Write observations in the canonical CSV schema (floats as ``repr``)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for o in observations:
            writer.writerow([
                o.period_index,
                o.date_label,
                repr(float(o.tether_holdings)),
                repr(float(o.tbills_outstanding)),
                repr(float(o.yield_1m)),
                repr(float(o.yield_3m)),
            ])


def market_share(holdings: float, outstanding: float) -> float:
    """Holdings as a decimal fraction of outstanding (0.016 means 1.6%)."""
    if not outstanding > 0:
        raise ValueError(f"outstanding must be positive, got {outstanding!r}")
    if not 0 <= holdings <= outstanding:
        raise ValueError(f"holdings must lie in [0, outstanding], got {holdings!r}")
    return holdings / outstanding


def ihs(x):
    """Inverse hyperbolic sine, ln(x + sqrt(x^2 + 1)).

    Evaluated through ``numpy.arcsinh``, which is exact at 0, odd, and does
    not overflow for large |x| the way the literal formula does.
    """
    return np.arcsinh(x)


def residualize_issuance(ihs_changes, time_trend, market_share) -> np.ndarray:
    """Residual of the IHS issuance series net of a constant, trend and share.

    Returns the OLS residuals scaled by :data:`RESIDUAL_SCALE`; they are
    orthogonal to the ones vector and both regressors.

    Raises
    ------
    ValueError
        If lengths differ or fewer than 4 observations are supplied.
    RankDeficiencyError
        If the regressors are collinear with each other or the constant.
    """
    y = np.asarray(ihs_changes, dtype=float)
    t = np.asarray(time_trend, dtype=float)
    s = np.asarray(market_share, dtype=float)
    if not (y.shape == t.shape == s.shape) or y.ndim != 1:
        raise ValueError("residualize_issuance needs three equal-length vectors")
    if y.size < 4:
        raise ValueError(f"need at least 4 observations, got {y.size}")
    X = np.column_stack([np.ones_like(y), t, s])
    bad = collinear_columns(X, ("const", "time_trend", "market_share"))
    if bad:
        raise RankDeficiencyError(bad)
    q, _ = np.linalg.qr(X)
    resid = y - q @ (q.T @ y)
    return RESIDUAL_SCALE * resid


@dataclass(frozen=True)
class DerivedPanel:
    """Design-ready vectors, one entry per period."""

    date_labels: tuple[str, ...]
    market_share: np.ndarray
    log_yield_1m: np.ndarray
    log_yield_3m: np.ndarray
    time_trend: np.ndarray
    tbill_change: np.ndarray
    tbill_change_ihs: np.ndarray
    tbill_change_residual: np.ndarray
    yield_1m: np.ndarray
    yield_3m: np.ndarray
    tbills_outstanding: np.ndarray

    def __len__(self) -> int:
        return len(self.market_share)

    @property
    def n(self) -> int:
        return len(self.market_share)

    def column(self, name: str) -> np.ndarray:
        if name not in self.__dataclass_fields__ or name == "date_labels":
            raise KeyError(f"unknown panel column {name!r}")
        return getattr(self, name)


def derive_panel(observations: Sequence[Observation], drop_first: bool = False) -> DerivedPanel:
    """Compute variables (i)-(vi) from validated observations.

    The first period has no prior outstanding amount; its change is
    backfilled with 0 (IHS 0). With ``drop_first=True`` the first period is
    removed instead and the time trend restarts at 1.
    """
    obs = sorted(observations, key=lambda o: o.period_index)
    check_periods(obs)
    for o in obs:
        o.validate()
    outstanding = np.array([o.tbills_outstanding for o in obs], dtype=float)
    change = np.empty_like(outstanding)
    change[0] = 0.0
    change[1:] = np.diff(outstanding)
    if drop_first:
        obs, outstanding, change = obs[1:], outstanding[1:], change[1:]
    if len(obs) < 5:
        raise PanelValidationError(f"need at least 5 periods, got {len(obs)}")

    share = np.array([market_share(o.tether_holdings, o.tbills_outstanding) for o in obs])
    y1 = np.array([o.yield_1m for o in obs], dtype=float)
    y3 = np.array([o.yield_3m for o in obs], dtype=float)
    trend = np.arange(1, len(obs) + 1, dtype=float)
    change_ihs = ihs(change / CHANGE_UNIT_USD)
    residual = residualize_issuance(change_ihs, trend, share)
    return DerivedPanel(
        date_labels=tuple(o.date_label for o in obs),
        market_share=share,
        log_yield_1m=np.log(y1),
        log_yield_3m=np.log(y3),
        time_trend=trend,
        tbill_change=change,
        tbill_change_ihs=change_ihs,
        tbill_change_residual=residual,
        yield_1m=y1,
        yield_3m=y3,
        tbills_outstanding=outstanding,
    )


def pearson(x, y) -> float:
    """Pearson correlation; ValueError if either series has zero variance."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.size < 2:
        raise ValueError("pearson needs two equal-length series of length >= 2")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = dx @ dx
    syy = dy @ dy
    if sxx == 0 or syy == 0:
        raise ValueError("correlation undefined for a zero-variance series")
    r = (dx @ dy) / math.sqrt(sxx * syy)
    return float(min(1.0, max(-1.0, r)))


@dataclass(frozen=True)
class Moments:
    mean: float
    sd: float
    min: float
    max: float


@dataclass(frozen=True)
class SummaryTable:
    """Per-variable moments plus the lower-triangular correlation matrix.

    ``correlations[i][j]`` for ``j < i`` is the Pearson correlation between
    variables ``i`` and ``j``, or ``None`` when one of them has zero variance
    (listed in ``undefined``).
    """

    variables: tuple[str, ...]
    moments: dict[str, Moments]
    correlations: tuple[tuple[float | None, ...], ...]
    undefined: tuple[str, ...]

    def correlation(self, a: str, b: str) -> float | None:
        i, j = self.variables.index(a), self.variables.index(b)
        if i == j:
            return None if a in self.undefined else 1.0
        if j > i:
            i, j = j, i
        return self.correlations[i][j]

    def format(self) -> str:
        labels = [VARIABLE_LABELS.get(v, v) for v in self.variables]
        width = max(len(s) for s in labels) + 2
        romans = [lab.split(" ")[0] for lab in labels]
        head = f"{'Variable':<{width}}{'Mean':>12}{'SD':>12}{'Min':>12}{'Max':>12}"
        head += "".join(f"{r:>8}" for r in romans[:-1])
        lines = [head]
        for i, (var, lab) in enumerate(zip(self.variables, labels)):
            m = self.moments[var]
            line = f"{lab:<{width}}{m.mean:>12.4f}{m.sd:>12.4f}{m.min:>12.4f}{m.max:>12.4f}"
            for j in range(i):
                r = self.correlations[i][j]
                line += f"{'n/a':>8}" if r is None else f"{r:>8.2f}"
            lines.append(line)
        if self.undefined:
            lines.append("correlations undefined for zero-variance: " + ", ".join(self.undefined))
        return "\n".join(lines)


def summary_stats(panel: DerivedPanel, variables: Sequence[str] = PANEL_VARIABLES,
                  ddof: int = 1) -> SummaryTable:
    """Mean, SD, min, max and pairwise Pearson correlations."""
    if panel.n == 0:
        raise ValueError("empty panel")
    cols = {v: np.asarray(panel.column(v), dtype=float) for v in variables}
    moments = {
        v: Moments(float(c.mean()), float(c.std(ddof=ddof)) if c.size > ddof else float("nan"),
                   float(c.min()), float(c.max()))
        for v, c in cols.items()
    }
    undefined = tuple(v for v, c in cols.items() if np.ptp(c) == 0)
    rows = []
    for i, a in enumerate(variables):
        row = []
        for b in variables[:i]:
            if a in undefined or b in undefined:
                row.append(None)
            else:
                row.append(pearson(cols[a], cols[b]))
        rows.append(tuple(row))
    return SummaryTable(tuple(variables), moments, tuple(rows), undefined)


# Reference min/max envelopes for a real 2022Q1-2025Q1 panel, to two decimals.
REFERENCE_RANGES = {
    "log_yield_1m": (-0.65, 1.71),
    "log_yield_3m": (-0.46, 1.70),
    "market_share": (0.01, 0.02),
    "time_trend": (1.00, 13.00),
    "tbill_change_ihs": (11.40, 11.42),
    "tbill_change_residual": (-0.07, 0.05),
}


def reference_envelope_violations(table: SummaryTable, slack: float = 0.005) -> list[str]:
    """Variables whose observed range leaves the published min/max envelope.

    ``slack`` absorbs the two-decimal rounding of the published bounds.
    """
    out = []
    for var, (lo, hi) in REFERENCE_RANGES.items():
        if var not in table.moments:
            continue
        m = table.moments[var]
        if m.min < lo - slack or m.max > hi + slack:
            out.append(var)
    return out
