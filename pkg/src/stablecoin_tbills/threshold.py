"""Two-regime threshold regression in the market share.

The regime model is

    ln y = a + d*1[S > tau] + b_low*S*1[S <= tau] + b_high*S*1[S > tau]
           + g*trend + r*residual + e

with ``tau`` chosen by least squares over a candidate grid. Linearity
(b_low = b_high, d = 0) is tested with a fixed-regressor residual bootstrap
of the sup-LR statistic ``n * (SSR_linear - SSR_threshold) / SSR_threshold``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import DerivedPanel
from .models import FULL_CONTROLS, linear_design, resolve_response
from .regress import DesignMatrix, FitResult, collinear_columns, ols_fit

# Bootstrap replications are processed in fixed-size blocks so that results do
# not depend on how blocks are spread over workers.
BOOT_BLOCK = 50


class RegimeError(ValueError):
    """A threshold leaves a regime empty or below the minimum size."""


@dataclass(frozen=True)
class ThresholdSpec:
    """How the threshold is searched for.

    Parameters
    ----------
    threshold_variable : str
        Panel column that splits the sample.
    trim_fraction : float
        Minimum share of observations in each regime, in [0, 0.5).
    include_intercept_shift : bool
        Add a high-regime intercept dummy.
    candidate_grid : "observed" or sequence of float
        Observed values of the threshold variable, or an explicit list.
    refined_grid : bool
        With the observed grid, also try ``refine_points`` evenly spaced
        values strictly between consecutive admissible observed values.
    controls : tuple of str
        Regressors common to both regimes.
    """

    threshold_variable: str = "market_share"
    trim_fraction: float = 0.15
    include_intercept_shift: bool = True
    candidate_grid: str | tuple[float, ...] = "observed"
    refined_grid: bool = True
    refine_points: int = 99
    controls: tuple[str, ...] = FULL_CONTROLS

    def __post_init__(self):
        if not 0 <= self.trim_fraction < 0.5:
            raise ValueError(f"trim_fraction must lie in [0, 0.5), got {self.trim_fraction!r}")
        if isinstance(self.candidate_grid, str):
            if self.candidate_grid != "observed":
                raise ValueError("candidate_grid must be 'observed' or a list of values")
        else:
            grid = tuple(float(v) for v in self.candidate_grid)
            if not grid:
                raise ValueError("explicit candidate_grid is empty")
            object.__setattr__(self, "candidate_grid", grid)
        if self.refine_points < 0:
            raise ValueError("refine_points must be >= 0")
        object.__setattr__(self, "controls", tuple(self.controls))

    def min_regime_size(self, n: int) -> int:
        # Each regime carries its own intercept and slope, so needs >= 3 points.
        return max(math.ceil(self.trim_fraction * n - 1e-12), 3)


def _split_counts(s: np.ndarray, tau: float) -> tuple[int, int]:
    n_high = int(np.count_nonzero(s > tau))
    return len(s) - n_high, n_high


def regime_design(panel: DerivedPanel, response: str, tau: float,
                  spec: ThresholdSpec = ThresholdSpec()) -> DesignMatrix:
    """Design matrix of the regime model at a given threshold.

    Raises
    ------
    RegimeError
        If either regime is empty or smaller than the trimming allows.
    """
    response = resolve_response(response)
    var = spec.threshold_variable
    s = panel.column(var)
    n_low, n_high = _split_counts(s, tau)
    if n_low == 0 or n_high == 0:
        raise RegimeError(f"empty regime at tau={tau!r} (low={n_low}, high={n_high})")
    m = spec.min_regime_size(len(s))
    if min(n_low, n_high) < m:
        raise RegimeError(
            f"insufficient observations per regime at tau={tau!r}: "
            f"low={n_low}, high={n_high}, need {m}"
        )
    high = s > tau
    columns = {}
    if spec.include_intercept_shift:
        columns["high_regime"] = high.astype(float)
    columns[f"{var}_low"] = np.where(high, 0.0, s)
    columns[f"{var}_high"] = np.where(high, s, 0.0)
    for c in spec.controls:
        columns[c] = panel.column(c)
    return DesignMatrix.from_columns(panel.column(response), columns, response=response)


def candidate_grid(panel: DerivedPanel, spec: ThresholdSpec = ThresholdSpec()) -> np.ndarray:
    """Admissible thresholds, ascending.

    Raises
    ------
    RegimeError
        If trimming leaves no admissible candidate.
    """
    s = panel.column(spec.threshold_variable)
    m = spec.min_regime_size(len(s))

    def admissible(tau):
        lo, hi = _split_counts(s, tau)
        return lo >= m and hi >= m

    if spec.candidate_grid == "observed":
        values = np.unique(s)
        taus = []
        for i, v in enumerate(values):
            if not admissible(v):
                continue
            taus.append(v)
            if spec.refined_grid and i + 1 < len(values):
                step = (values[i + 1] - v) / (spec.refine_points + 1)
                taus.extend(v + step * np.arange(1, spec.refine_points + 1))
        grid = np.array(taus, dtype=float)
    else:
        grid = np.unique([t for t in spec.candidate_grid if admissible(t)])
    if grid.size == 0:
        raise RegimeError(
            f"insufficient observations per regime: no admissible threshold with "
            f"n={len(s)} and at least {m} observations per regime"
        )
    return grid


@dataclass(frozen=True)
class GridSearch:
    """Sum of squared residuals over the candidate thresholds.

    ``ssr`` is NaN where the regime design is rank deficient.
    """

    tau_hat: float
    taus: np.ndarray
    ssr: np.ndarray

    @property
    def ssr_min(self) -> float:
        return float(np.nanmin(self.ssr))

    def to_csv(self) -> str:
        rows = ["tau,ssr"]
        rows += [f"{t!r},{v!r}" for t, v in zip(self.taus.tolist(), self.ssr.tolist())]
        return "\n".join(rows) + "\n"

    def write_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv(), encoding="utf-8")


class _Profile:
    """Orthonormal bases for every distinct sample split in a grid.

    Thresholds between the same pair of adjacent observed values produce the
    same design, so each split is factorised once and SSRs for any number of
    response vectors follow from projections.
    """

    def __init__(self, panel: DerivedPanel, response: str, spec: ThresholdSpec,
                 taus: np.ndarray):
        s = panel.column(spec.threshold_variable)
        n_low = np.array([np.count_nonzero(s <= t) for t in taus])
        self.keys, self.tau_to_key = np.unique(n_low, return_inverse=True)
        self.bases: list[np.ndarray | None] = []
        for key in self.keys:
            tau = taus[np.flatnonzero(n_low == key)[0]]
            design = regime_design(panel, response, tau, spec)
            if collinear_columns(design.X, design.names):
                self.bases.append(None)
            else:
                self.bases.append(np.linalg.qr(design.X)[0])

    def ssr(self, Y: np.ndarray) -> np.ndarray:
        """SSR per split (rows) for each column of ``Y``."""
        out = np.full((len(self.bases), Y.shape[1]), np.nan)
        for i, q in enumerate(self.bases):
            if q is not None:
                resid = Y - q @ (q.T @ Y)
                out[i] = np.einsum("ij,ij->j", resid, resid)
        return out


def _argmin_smallest(taus: np.ndarray, ssr: np.ndarray) -> float:
    if np.all(np.isnan(ssr)):
        raise RegimeError("every candidate threshold gives a rank-deficient design")
    # np.nanargmin returns the first minimiser; taus are ascending.
    return float(taus[int(np.nanargmin(ssr))])


def grid_search(panel: DerivedPanel, response: str,
                spec: ThresholdSpec = ThresholdSpec()) -> GridSearch:
    """Least-squares threshold over the candidate grid; ties go to the smallest tau."""
    response = resolve_response(response)
    taus = candidate_grid(panel, spec)
    profile = _Profile(panel, response, spec, taus)
    y = panel.column(response)[:, None]
    ssr = profile.ssr(y)[:, 0][profile.tau_to_key]
    return GridSearch(_argmin_smallest(taus, ssr), taus, ssr)


def lr_statistic(n: int, ssr_linear, ssr_threshold):
    """``n * (SSR0 - SSR1) / SSR1``, clipped at 0 against round-off."""
    ssr_linear = np.asarray(ssr_linear, dtype=float)
    ssr_threshold = np.asarray(ssr_threshold, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        lr = n * (ssr_linear - ssr_threshold) / ssr_threshold
    lr = np.where(ssr_threshold > 0, lr, np.where(ssr_linear > ssr_threshold, np.inf, 0.0))
    return np.maximum(lr, 0.0)


@dataclass(frozen=True)
class LRTest:
    lr_statistic: float
    bootstrap_p: float
    bootstrap_stats: np.ndarray = field(repr=False)
    replications: int
    seed: int

    def __iter__(self):
        return iter((self.lr_statistic, self.bootstrap_p))


def replication_rng(seed: int, replication: int) -> np.random.Generator:
    """Independent stream for one bootstrap replication."""
    return np.random.default_rng(np.random.SeedSequence([seed, replication]))


def lr_linearity_test(panel: DerivedPanel, response: str,
                      spec: ThresholdSpec = ThresholdSpec(),
                      replications: int = 500, seed: int = 0,
                      n_jobs: int = 1) -> LRTest:
    """Bootstrap test of the linear model against the threshold model.

    Under the null the regressors are held fixed and responses are rebuilt
    as linear fitted values plus linear residuals resampled with
    replacement; the threshold is re-estimated on every replication. The
    p-value is ``(1 + #{LR* >= LR}) / (1 + replications)``.

    Each replication draws from a stream seeded by ``(seed, index)``, so the
    result is the same for any ``n_jobs``.
    """
    if replications < 1:
        raise ValueError(f"replications must be >= 1, got {replications!r}")
    response = resolve_response(response)
    taus = candidate_grid(panel, spec)
    profile = _Profile(panel, response, spec, taus)
    lin_design = linear_design(panel, response, spec.controls, spec.threshold_variable)
    lin = ols_fit(lin_design)
    q_lin = np.linalg.qr(lin_design.X)[0]
    n = lin.n

    def stat(Y):
        r = Y - q_lin @ (q_lin.T @ Y)
        ssr0 = np.einsum("ij,ij->j", r, r)
        ssr1 = np.nanmin(profile.ssr(Y), axis=0)
        return lr_statistic(n, ssr0, ssr1)

    y = panel.column(response)
    observed = float(stat(y[:, None])[0])

    fitted, resid = lin.fitted, lin.residuals

    def block(start):
        stop = min(start + BOOT_BLOCK, replications)
        Y = np.empty((n, stop - start))
        for j, b in enumerate(range(start, stop)):
            idx = replication_rng(seed, b).integers(0, n, size=n)
            Y[:, j] = fitted + resid[idx]
        return stat(Y)

    starts = range(0, replications, BOOT_BLOCK)
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            parts = list(pool.map(block, starts))
    else:
        parts = [block(s) for s in starts]
    boot = np.concatenate(parts)
    p = (1 + int(np.count_nonzero(boot >= observed))) / (1 + replications)
    return LRTest(observed, p, boot, replications, seed)


@dataclass(frozen=True)
class ThresholdFit:
    """Estimated regime model with its linearity test.

    ``high_regime[i]`` is True when observation ``i`` has S > tau.
    """

    response: str
    spec: ThresholdSpec
    tau: float
    fit: FitResult
    linear_fit: FitResult
    grid: GridSearch
    test: LRTest
    high_regime: np.ndarray

    @property
    def low_name(self) -> str:
        return f"{self.spec.threshold_variable}_low"

    @property
    def high_name(self) -> str:
        return f"{self.spec.threshold_variable}_high"

    @property
    def low_slope(self) -> float:
        return self.fit.coef(self.low_name)

    @property
    def high_slope(self) -> float:
        return self.fit.coef(self.high_name)

    @property
    def intercept_shift(self) -> float | None:
        return self.fit.coef("high_regime") if self.spec.include_intercept_shift else None

    @property
    def controls(self) -> dict[str, float]:
        names = (self.fit.constant, *self.spec.controls)
        return {c: self.fit.coef(c) for c in names}

    @property
    def ssr_threshold(self) -> float:
        return self.fit.ssr

    @property
    def ssr_linear(self) -> float:
        return self.linear_fit.ssr

    @property
    def lr_statistic(self) -> float:
        return self.test.lr_statistic

    @property
    def bootstrap_p(self) -> float:
        return self.test.bootstrap_p

    def slope_at(self, share: float) -> float:
        return self.high_slope if share > self.tau else self.low_slope


def threshold_fit(panel: DerivedPanel, response: str,
                  spec: ThresholdSpec = ThresholdSpec(),
                  replications: int = 500, seed: int = 0,
                  n_jobs: int = 1) -> ThresholdFit:
    """Grid search, regime fit at the estimated threshold, and the LR test."""
    response = resolve_response(response)
    grid = grid_search(panel, response, spec)
    fit = ols_fit(regime_design(panel, response, grid.tau_hat, spec))
    linear = ols_fit(linear_design(panel, response, spec.controls, spec.threshold_variable))
    test = lr_linearity_test(panel, response, spec, replications, seed, n_jobs)
    high = panel.column(spec.threshold_variable) > grid.tau_hat
    return ThresholdFit(response, spec, grid.tau_hat, fit, linear, grid, test, high)

