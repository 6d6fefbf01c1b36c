"""Semi-log time-trend models: log yield on market share plus controls."""

from __future__ import annotations

from typing import Sequence

from .dataset import DerivedPanel
from .regress import DesignMatrix, FitResult, ols_fit

RESPONSES = {"1m": "log_yield_1m", "3m": "log_yield_3m"}
FULL_CONTROLS = ("time_trend", "tbill_change_residual")

# Nested baseline specifications, in table column order.
BASELINE_SPECS = (
    ("no controls", ()),
    ("trend", ("time_trend",)),
    ("trend + residual", FULL_CONTROLS),
)


def resolve_response(response: str) -> str:
    """Map ``"1m"``/``"3m"`` shorthands to panel column names."""
    return RESPONSES.get(response, response)


def linear_design(panel: DerivedPanel, response: str,
                  controls: Sequence[str] = FULL_CONTROLS,
                  share: str = "market_share") -> DesignMatrix:
    response = resolve_response(response)
    columns = {share: panel.column(share)}
    for c in controls:
        columns[c] = panel.column(c)
    return DesignMatrix.from_columns(panel.column(response), columns, response=response)


def baseline_fits(panel: DerivedPanel, response: str) -> list[FitResult]:
    """The three nested specifications for one maturity."""
    return [ols_fit(linear_design(panel, response, controls)) for _, controls in BASELINE_SPECS]
