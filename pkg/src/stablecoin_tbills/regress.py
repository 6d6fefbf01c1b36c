"""Ordinary least squares with classical (homoskedastic) inference."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import betainc, betaincinv

RANK_TOL = 1e-10


class RankDeficiencyError(np.linalg.LinAlgError):
    """Design columns are linearly dependent.

    ``columns`` names the columns participating in the dependency.
    """

    def __init__(self, columns: Sequence[str]):
        self.columns = tuple(columns)
        super().__init__("rank-deficient design; collinear columns: " + ", ".join(self.columns))


def collinear_columns(X: np.ndarray, names: Sequence[str], tol: float = RANK_TOL) -> tuple[str, ...]:
    """Names of columns involved in a near-linear dependency, or ``()``.

    Columns are scaled to unit norm first, so the verdict does not depend on
    the units of the regressors.
    """
    X = np.asarray(X, dtype=float)
    norms = np.linalg.norm(X, axis=0)
    zero = norms == 0
    if zero.any():
        return tuple(n for n, z in zip(names, zero) if z)
    _, s, vt = np.linalg.svd(X / norms, full_matrices=False)
    small = s < tol * s[0]
    if not small.any():
        return ()
    null = np.abs(vt[small]).max(axis=0)
    return tuple(n for n, w in zip(names, null) if w > 1e-6)


@dataclass(frozen=True)
class DesignMatrix:
    """Regressors ``X`` (n x k) with named columns and a response ``y``.

    Exactly one column, ``constant``, is the intercept column of ones.
    """

    X: np.ndarray
    y: np.ndarray
    names: tuple[str, ...]
    constant: str = "const"
    response: str = "y"

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "names", tuple(self.names))
        if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
            raise ValueError(f"shape mismatch: X {X.shape}, y {y.shape}")
        if len(self.names) != X.shape[1]:
            raise ValueError("one name per column required")
        if len(set(self.names)) != len(self.names):
            raise ValueError(f"duplicate column names in {self.names}")
        if self.constant not in self.names:
            raise ValueError(f"constant column {self.constant!r} missing")
        if not np.all(X[:, self.names.index(self.constant)] == 1.0):
            raise ValueError(f"constant column {self.constant!r} must be all ones")
        if X.shape[0] <= X.shape[1]:
            raise ValueError(
                f"need more observations than columns (n={X.shape[0]}, k={X.shape[1]})"
            )
        if not (np.isfinite(X).all() and np.isfinite(y).all()):
            raise ValueError("design contains non-finite values")

    @classmethod
    def from_columns(cls, y, columns: Mapping[str, np.ndarray], constant: str = "const",
                     response: str = "y") -> "DesignMatrix":
        """Build a design; a ones column named ``constant`` is prepended."""
        y = np.asarray(y, dtype=float)
        names = [constant, *columns]
        X = np.column_stack([np.ones_like(y), *[np.asarray(c, dtype=float) for c in columns.values()]])
        return cls(X, y, tuple(names), constant, response)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def k(self) -> int:
        return self.X.shape[1]


def _t_central(t, df: float):
    """Return (P(|T| < |t|), P(|T| >= |t|)) for Student-t.

    Each tail comes from the incomplete-beta identity in whichever argument
    stays away from 1, so neither loses digits to cancellation near t = 0.
    """
    t = np.asarray(t, dtype=float)
    t2 = t * t
    z = t2 / (df + t2)
    x = df / (df + t2)
    near = z < 0.5
    central = np.where(near, betainc(0.5, df / 2.0, z), 1.0 - betainc(df / 2.0, 0.5, x))
    tail = np.where(near, 1.0 - betainc(0.5, df / 2.0, z), betainc(df / 2.0, 0.5, x))
    return central, tail


def t_sf_two_sided(t, df: float):
    """P(|T| >= |t|) for Student-t with ``df`` degrees of freedom."""
    return _t_central(t, df)[1]


def t_cdf(t, df: float):
    t = np.asarray(t, dtype=float)
    central, tail = _t_central(t, df)
    return np.where(central < 0.5, 0.5 + 0.5 * np.sign(t) * central,
                    np.where(t >= 0, 1.0 - 0.5 * tail, 0.5 * tail))


def t_ppf(q: float, df: float) -> float:
    """Quantile of Student-t; inverts the incomplete-beta tail identity."""
    if not 0 < q < 1:
        raise ValueError(f"quantile must lie in (0, 1), got {q!r}")
    if q == 0.5:
        return 0.0
    tail = 2.0 * min(q, 1.0 - q)
    x = float(betaincinv(df / 2.0, 0.5, tail))
    t = math.sqrt(df * (1.0 - x) / x)
    return t if q > 0.5 else -t


@dataclass(frozen=True)
class FitResult:
    """Coefficients, classical standard errors and fit statistics.

    Arrays are aligned with ``names``. ``t_stats``/``p_values`` are NaN for a
    coefficient whose standard error is exactly zero (perfect fit).
    """

    names: tuple[str, ...]
    coefficients: np.ndarray
    standard_errors: np.ndarray
    t_stats: np.ndarray
    p_values: np.ndarray
    r_squared: float
    adj_r_squared: float
    ssr: float
    n: int
    k: int
    fitted: np.ndarray
    residuals: np.ndarray
    sigma2: float
    xtx_inv: np.ndarray = field(repr=False)
    response: str = "y"
    constant: str = "const"

    @property
    def df_resid(self) -> int:
        return self.n - self.k

    def _idx(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"no coefficient named {name!r}; have {self.names}") from None

    def coef(self, name: str) -> float:
        return float(self.coefficients[self._idx(name)])

    def se(self, name: str) -> float:
        return float(self.standard_errors[self._idx(name)])

    def pvalue(self, name: str) -> float:
        return float(self.p_values[self._idx(name)])

    def predict(self, row) -> float:
        return float(np.asarray(row, dtype=float) @ self.coefficients)


def ols_fit(design: DesignMatrix) -> FitResult:
    """Least squares via a thin QR decomposition.

    Standard errors are ``sqrt(s2 * [(X'X)^-1]_jj)`` with ``s2 = ssr/(n-k)``;
    p-values are two-sided Student-t with ``n - k`` degrees of freedom.

    Raises
    ------
    RankDeficiencyError
        If the columns are (numerically) collinear.
    """
    X, y = design.X, design.y
    n, k = X.shape
    bad = collinear_columns(X, design.names)
    if bad:
        raise RankDeficiencyError(bad)

    q, r = np.linalg.qr(X)
    beta = solve_triangular(r, q.T @ y)
    fitted = X @ beta
    resid = y - fitted
    ssr = float(resid @ resid)
    df = n - k
    # Residuals at rounding level mean an exact fit; report zero variance.
    if ssr <= (n * np.finfo(float).eps * np.linalg.norm(y)) ** 2:
        sigma2 = 0.0
    else:
        sigma2 = ssr / df
    r_inv = solve_triangular(r, np.eye(k))
    xtx_inv = r_inv @ r_inv.T
    se = np.sqrt(sigma2 * np.diag(xtx_inv))

    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(se > 0, beta / se, np.nan)
    p = np.where(np.isnan(t), np.nan, t_sf_two_sided(np.nan_to_num(t), df))

    dev = y - y.mean()
    tss = float(dev @ dev)
    if tss > 0:
        r2 = 1.0 - ssr / tss
        adj = 1.0 - (1.0 - r2) * (n - 1) / df
    else:
        r2 = adj = float("nan")

    return FitResult(
        names=design.names,
        coefficients=beta,
        standard_errors=se,
        t_stats=t,
        p_values=p,
        r_squared=float(r2),
        adj_r_squared=float(adj),
        ssr=ssr,
        n=n,
        k=k,
        fitted=fitted,
        residuals=resid,
        sigma2=sigma2,
        xtx_inv=xtx_inv,
        response=design.response,
        constant=design.constant,
    )


def significance_stars(p_value: float | None) -> str:
    """``***`` below 1%, ``**`` below 5%, ``*`` below 10%; empty otherwise.

    An undefined p-value (None or NaN) gets no stars.
    """
    if p_value is None or math.isnan(p_value):
        return ""
    if not 0.0 <= p_value <= 1.0:
        raise ValueError(f"p-value must lie in [0, 1], got {p_value!r}")
    if p_value < 0.01:
        return "***"
    if p_value < 0.05:
        return "**"
    if p_value < 0.10:
        return "*"
    return ""


def fitted_value_ci(fit: FitResult, row, level: float = 0.95) -> tuple[float, float]:
    """Pointwise confidence interval for the mean response at ``row``."""
    x = np.asarray(row, dtype=float)
    if x.shape != (fit.k,):
        raise ValueError(f"row must have {fit.k} values, got shape {x.shape}")
    if not 0 < level < 1:
        raise ValueError(f"level must lie in (0, 1), got {level!r}")
    center = float(x @ fit.coefficients)
    half = t_ppf((1.0 + level) / 2.0, fit.df_resid) * math.sqrt(max(0.0, fit.sigma2 * float(x @ fit.xtx_inv @ x)))
    return center - half, center + half
