"""Economic interpretation of fitted semi-elasticities and report rendering.

Yields are in percent per annum and market shares are decimal fractions, so
a semi-elasticity ``b`` moves the log yield by ``b * dS`` and the yield by
about ``b * dS * y * 100`` basis points.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Sequence, Union
from xml.sax.saxutils import escape

import numpy as np

from .dataset import DerivedPanel
from .models import RESPONSES
from .regress import FitResult, fitted_value_ci, significance_stars
from .threshold import ThresholdFit


@dataclass(frozen=True)
class SlopeProfile:
    """Market-share semi-elasticity as a function of the share.

    ``tau`` is None for a linear model; otherwise ``low`` applies for
    S <= tau and ``high`` above it.
    """

    low: float
    high: float
    tau: float | None = None

    @classmethod
    def from_fit(cls, fit: "Union[FitResult, ThresholdFit, SlopeProfile]",
                 share: str = "market_share") -> "SlopeProfile":
        if isinstance(fit, SlopeProfile):
            return fit
        if isinstance(fit, ThresholdFit):
            return cls(fit.low_slope, fit.high_slope, fit.tau)
        b = fit.coef(share)
        return cls(b, b, None)

    @classmethod
    def from_json(cls, model: dict, share: str = "market_share") -> "SlopeProfile":
        """Rebuild from one entry of a rendered JSON report."""
        coefs = {c["name"]: c["estimate"] for c in model["coefficients"]}
        if model.get("threshold"):
            return cls(coefs[f"{share}_low"], coefs[f"{share}_high"], model["threshold"]["tau"])
        return cls(coefs[share], coefs[share], None)

    def log_change(self, start: float, end: float) -> float:
        """Integral of the slope from ``start`` to ``end``: the implied change in ln y."""
        if self.tau is None:
            return self.low * (end - start)
        t = self.tau
        return (self.low * (min(end, t) - min(start, t))
                + self.high * (max(end, t) - max(start, t)))


@dataclass(frozen=True)
class ImpactQuery:
    semi_elasticity: float
    delta_share: float
    baseline_yield: float

    def __post_init__(self):
        if not self.baseline_yield > 0:
            raise ValueError(f"baseline_yield must be positive, got {self.baseline_yield!r}")


def bps_impact(query: ImpactQuery) -> float:
    """First-order yield change in basis points: b * dS * y(%) * 100."""
    return query.semi_elasticity * query.delta_share * query.baseline_yield * 100.0


def _check_share(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must be a decimal fraction in [0, 1], got {value!r}")


def counterfactual_yield(fit, actual_share: float, reference_share: float,
                         actual_yield: float) -> float:
    """Yield the model implies had the share been ``reference_share``.

    ``actual_yield * exp(-integral of slope from reference to actual share)``;
    for a threshold fit the integral is split at tau.
    """
    _check_share("actual_share", actual_share)
    _check_share("reference_share", reference_share)
    if not actual_yield > 0:
        raise ValueError(f"actual_yield must be positive, got {actual_yield!r}")
    profile = SlopeProfile.from_fit(fit)
    return actual_yield * math.exp(-profile.log_change(reference_share, actual_share))


def annual_savings(bps_reduction: float, outstanding: float) -> float:
    """Yearly interest saved on ``outstanding`` USD by a ``bps_reduction`` lower yield."""
    if outstanding < 0:
        raise ValueError(f"outstanding must be >= 0, got {outstanding!r}")
    return bps_reduction * outstanding / 1e4


@dataclass(frozen=True)
class ImpactReport:
    reference_share: float
    actual_share: float
    baseline_yield: float
    relative_change: float
    bps_change: float
    counterfactual_yield: float
    counterfactual_gap_bps: float
    annual_savings: float

    def to_dict(self) -> dict:
        return asdict(self)

    def format(self) -> str:
        return "\n".join([
            f"market share move      {100 * self.reference_share:.4f}% -> {100 * self.actual_share:.4f}%",
            f"relative yield change  {100 * self.relative_change:+.4f}%",
            f"first-order impact     {self.bps_change:+.2f} bps at {self.baseline_yield:.2f}%",
            f"counterfactual yield   {self.counterfactual_yield:.4f}% "
            f"(actual is {self.counterfactual_gap_bps:+.2f} bps away)",
            f"annual interest saved  ${self.annual_savings / 1e9:,.2f}bn",
        ])


def impact_report(fit, delta_share: float, baseline_yield: float, outstanding: float,
                  reference_share: float | None = None) -> ImpactReport:
    """Interpret a move in market share from ``reference_share`` by ``delta_share``.

    ``baseline_yield`` is the observed yield at the end share. The default
    reference is tau for a threshold fit and 0 otherwise. Savings are
    positive when the implied yield falls.
    """
    profile = SlopeProfile.from_fit(fit)
    if reference_share is None:
        reference_share = profile.tau if profile.tau is not None else 0.0
    actual_share = reference_share + delta_share
    _check_share("reference_share", reference_share)
    _check_share("reference_share + delta_share", actual_share)
    rel = profile.log_change(reference_share, actual_share)
    bps = rel * baseline_yield * 100.0
    cf = counterfactual_yield(profile, actual_share, reference_share, baseline_yield)
    return ImpactReport(
        reference_share=reference_share,
        actual_share=actual_share,
        baseline_yield=baseline_yield,
        relative_change=rel,
        bps_change=bps,
        counterfactual_yield=cf,
        counterfactual_gap_bps=(baseline_yield - cf) * 100.0,
        annual_savings=annual_savings(-bps, outstanding),
    )


# --------------------------------------------------------------------------
# tables

ROW_LABELS = {
    "high_regime": "Intercept Shift (High Regime)",
    "market_share": "(iii) Market Share",
    "market_share_low": "(iii) Market Share (<= tau)",
    "market_share_high": "(iii) Market Share (> tau)",
    "time_trend": "(iv) Time Trend",
    "tbill_change_residual": "(vi) T-Bill Change Residual",
    "const": "Constant",
}
TABLE_ROWS = {
    "table-2": ("market_share", "time_trend", "tbill_change_residual", "const"),
    "table-3": ("high_regime", "market_share_low", "market_share_high",
                "time_trend", "tbill_change_residual", "const"),
}
RESPONSE_LABELS = {
    RESPONSES["1m"]: "(i) 1-Month Yield",
    RESPONSES["3m"]: "(ii) 3-Month Yield",
}


def round_half_away(x: float, places: int = 3) -> str:
    """Decimal string of ``x`` rounded half away from zero."""
    if x is None or not math.isfinite(x):
        return "n/a"
    q = Decimal(1).scaleb(-places)
    return str(Decimal(repr(float(x))).quantize(q, rounding=ROUND_HALF_UP))


def _num(x) -> float | None:
    x = float(x)
    return x if math.isfinite(x) else None


def fit_to_json(fit: FitResult | ThresholdFit, label: str) -> dict:
    """JSON-ready mirror of one model at full precision (NaN becomes null)."""
    res = fit.fit if isinstance(fit, ThresholdFit) else fit
    coefficients = []
    for i, name in enumerate(res.names):
        p = _num(res.p_values[i])
        coefficients.append({
            "name": name,
            "estimate": float(res.coefficients[i]),
            "se": _num(res.standard_errors[i]),
            "t": _num(res.t_stats[i]),
            "p": p,
            "stars": significance_stars(p),
        })
    out = {
        "model": label,
        "response": res.response,
        "n": res.n,
        "k": res.k,
        "coefficients": coefficients,
        "r2": _num(res.r_squared),
        "adj_r2": _num(res.adj_r_squared),
        "ssr": float(res.ssr),
    }
    if isinstance(fit, ThresholdFit):
        out["threshold"] = {
            "variable": fit.spec.threshold_variable,
            "tau": fit.tau,
            "lr": _num(fit.lr_statistic),
            "p_boot": fit.bootstrap_p,
            "replications": fit.test.replications,
            "seed": fit.test.seed,
            "ssr_linear": fit.ssr_linear,
            "ssr_threshold": fit.ssr_threshold,
            "n_low": int(np.count_nonzero(~fit.high_regime)),
            "n_high": int(np.count_nonzero(fit.high_regime)),
            "trim_fraction": fit.spec.trim_fraction,
            "refined_grid": fit.spec.refined_grid,
            "intercept_shift": fit.spec.include_intercept_shift,
        }
    return out


def render_table(fits: Sequence[FitResult | ThresholdFit], layout: str,
                 start: int = 1) -> tuple[str, dict]:
    """Regression table as aligned text plus its JSON mirror.

    Coefficients carry significance stars, standard errors sit in
    parentheses beneath, both rounded half away from zero to 3 decimals.
    ``layout`` is ``"table-2"`` (linear fits) or ``"table-3"`` (threshold
    fits); models are numbered from ``start``.
    """
    if layout not in TABLE_ROWS:
        raise ValueError(f"unknown layout {layout!r}; expected one of {sorted(TABLE_ROWS)}")
    want = ThresholdFit if layout == "table-3" else FitResult
    for f in fits:
        if not isinstance(f, want):
            raise TypeError(f"layout {layout} takes {want.__name__} objects, got {type(f).__name__}")
    if not fits:
        raise ValueError("no fits to render")

    labels = [f"({start + i})" for i in range(len(fits))]
    models = [fit_to_json(f, lab) for f, lab in zip(fits, labels)]

    rows: list[tuple[str, list[str]]] = [("", labels), ("", ["Coef."] * len(fits)),
                                         ("", ["(SE)"] * len(fits))]
    for name in TABLE_ROWS[layout]:
        if not any(name in {c["name"] for c in m["coefficients"]} for m in models):
            continue
        coef_cells, se_cells = [], []
        for m in models:
            c = next((c for c in m["coefficients"] if c["name"] == name), None)
            if c is None:
                coef_cells.append("")
                se_cells.append("")
            else:
                coef_cells.append(round_half_away(c["estimate"]) + c["stars"])
                se_cells.append("(" + round_half_away(c["se"]) + ")")
        rows.append((ROW_LABELS.get(name, name), coef_cells))
        rows.append(("", se_cells))
    rows.append(("R2", [round_half_away(m["r2"]) for m in models]))
    rows.append(("Adj. R2", [round_half_away(m["adj_r2"]) for m in models]))
    if layout == "table-3":
        rows.append(("Threshold tau (%)", [round_half_away(100 * m["threshold"]["tau"]) for m in models]))
        rows.append(("LR statistic", [round_half_away(m["threshold"]["lr"]) for m in models]))
        rows.append(("Bootstrap p", [round_half_away(m["threshold"]["p_boot"], 4) for m in models]))
    rows.append(("Dep. variable", [RESPONSE_LABELS.get(m["response"], m["response"]) for m in models]))

    left = max(len(r[0]) for r in rows) + 2
    width = max(max(len(c) for c in r[1]) for r in rows) + 2
    text = "\n".join(f"{head:<{left}}" + "".join(f"{c:>{width}}" for c in cells)
                     for head, cells in rows)
    return text + "\n", {"layout": layout, "models": models}


def dump_json(obj) -> str:
    """Deterministic JSON text (floats at full precision)."""
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


# --------------------------------------------------------------------------
# figure

_W, _H = 640, 420
_BOX = (70, 20, 540, 340)  # left, top, width, height
_COLORS = {"low": "#1f4e9e", "high": "#c0392b"}


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    step = (hi - lo) / (count - 1)
    return [lo + i * step for i in range(count)]


def render_regime_figure(fit: ThresholdFit, panel: DerivedPanel, level: float = 0.95,
                         points_per_line: int = 40) -> str:
    """SVG scatter of log yield against market share with both regime lines.

    Controls are held at their sample means along each fitted line; shaded
    polygons are pointwise ``level`` confidence bands and a dashed vertical
    rule marks tau.
    """
    share = panel.column(fit.spec.threshold_variable)
    y = panel.column(fit.response)
    res = fit.fit
    means = {c: float(np.mean(panel.column(c))) for c in fit.spec.controls}

    def row(s: float, high: bool) -> np.ndarray:
        values = {res.constant: 1.0, "high_regime": float(high),
                  fit.low_name: 0.0 if high else s, fit.high_name: s if high else 0.0, **means}
        return np.array([values[name] for name in res.names])

    lines = {}
    s_lo, s_hi = float(share.min()), float(share.max())
    for regime, (a, b) in {"low": (s_lo, fit.tau), "high": (fit.tau, s_hi)}.items():
        xs = np.linspace(a, b, points_per_line)
        high = regime == "high"
        center = [res.predict(row(s, high)) for s in xs]
        band = [fitted_value_ci(res, row(s, high), level) for s in xs]
        lines[regime] = (xs, np.array(center), np.array(band))

    all_y = np.concatenate([y] + [b.ravel() for _, _, b in lines.values()])
    x_pad = 0.05 * (s_hi - s_lo or 1.0)
    y_pad = 0.05 * (float(all_y.max() - all_y.min()) or 1.0)
    xmin, xmax = s_lo - x_pad, s_hi + x_pad
    ymin, ymax = float(all_y.min()) - y_pad, float(all_y.max()) + y_pad
    left, top, width, height = _BOX

    def px(s):
        return left + (s - xmin) / (xmax - xmin) * width

    def py(v):
        return top + height - (v - ymin) / (ymax - ymin) * height

    maturity = "1-month" if fit.response == RESPONSES["1m"] else (
        "3-month" if fit.response == RESPONSES["3m"] else fit.response)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" data-x-domain="{xmin!r} {xmax!r}" '
        f'data-y-domain="{ymin!r} {ymax!r}" data-plot-box="{left} {top} {width} {height}">',
        '<rect x="0" y="0" width="100%" height="100%" fill="white"/>',
        f'<line class="axis" x1="{left}" y1="{top + height}" x2="{left + width}" y2="{top + height}" stroke="black"/>',
        f'<line class="axis" x1="{left}" y1="{top}" x2="{left}" y2="{top + height}" stroke="black"/>',
    ]
    for t in _ticks(xmin, xmax):
        x = _fmt(px(t))
        out.append(f'<line class="tick" x1="{x}" y1="{top + height}" x2="{x}" y2="{top + height + 5}" stroke="black"/>')
        out.append(f'<text x="{x}" y="{top + height + 18}" font-size="11" text-anchor="middle">{100 * t:.3f}</text>')
    for t in _ticks(ymin, ymax):
        yy = _fmt(py(t))
        out.append(f'<line class="tick" x1="{left - 5}" y1="{yy}" x2="{left}" y2="{yy}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{yy}" font-size="11" text-anchor="end" dominant-baseline="middle">{t:.2f}</text>')
    out.append(f'<text x="{left + width / 2}" y="{_H - 22}" font-size="13" text-anchor="middle">'
               f'Market share of outstanding T-bills (%)</text>')
    out.append(f'<text x="18" y="{top + height / 2}" font-size="13" text-anchor="middle" '
               f'transform="rotate(-90 18 {top + height / 2})">'
               f'{escape(f"Log {maturity} yield (ln of % p.a.)")}</text>')

    for regime, (xs, center, band) in lines.items():
        color = _COLORS[regime]
        upper = [f"{_fmt(px(s))},{_fmt(py(hi))}" for s, hi in zip(xs, band[:, 1])]
        lower = [f"{_fmt(px(s))},{_fmt(py(lo))}" for s, lo in zip(xs[::-1], band[::-1, 0])]
        out.append(f'<polygon class="ci-band regime-{regime}" points="{" ".join(upper + lower)}" '
                   f'fill="{color}" fill-opacity="0.18" stroke="none"/>')
    for regime, (xs, center, band) in lines.items():
        d = " ".join(("M" if i == 0 else "L") + f"{_fmt(px(s))},{_fmt(py(v))}"
                     for i, (s, v) in enumerate(zip(xs, center)))
        out.append(f'<path class="fit-line regime-{regime}" d="{d}" fill="none" '
                   f'stroke="{_COLORS[regime]}" stroke-width="2"/>')

    for s, v in zip(share, y):
        out.append(f'<circle class="obs" cx="{_fmt(px(s))}" cy="{_fmt(py(v))}" r="3.5" fill="#888888"/>')

    xt = _fmt(px(fit.tau))
    out.append(f'<line class="threshold-rule" data-tau="{fit.tau!r}" x1="{xt}" y1="{top}" x2="{xt}" '
               f'y2="{top + height}" stroke="green" stroke-width="1.5" stroke-dasharray="6,4"/>')
    out.append(f'<text x="{xt}" y="{top - 5}" font-size="11" text-anchor="middle" fill="green">'
               f'tau = {100 * fit.tau:.3f}%</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
