"""Slow, independent reference computations used only by the tests."""

import itertools

import numpy as np


def normal_equations(X, y):
    """OLS by explicit inversion of X'X (the textbook route)."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    xtx_inv = np.linalg.inv(X.T @ X)
    beta = xtx_inv @ (X.T @ y)
    resid = y - X @ beta
    n, k = X.shape
    s2 = resid @ resid / (n - k)
    return beta, np.sqrt(s2 * np.diag(xtx_inv)), float(resid @ resid), xtx_inv


def regime_ssr(share, y, controls, tau, intercept_shift=True):
    """SSR of the two-regime model built row by row with plain Python."""
    rows = []
    for i, s in enumerate(share):
        high = s > tau
        row = [1.0]
        if intercept_shift:
            row.append(1.0 if high else 0.0)
        row += [0.0 if high else s, s if high else 0.0]
        row += [c[i] for c in controls]
        rows.append(row)
    _, _, ssr, _ = normal_equations(np.array(rows), y)
    return ssr


def exhaustive_threshold(share, y, controls, taus, intercept_shift=True):
    """Argmin over ``taus`` by refitting every candidate; first minimiser wins."""
    best_tau, best = None, np.inf
    for tau in taus:
        ssr = regime_ssr(share, y, controls, tau, intercept_shift)
        if ssr < best:
            best_tau, best = tau, ssr
    return best_tau, best


def all_splits(share, min_size):
    """Observed values that leave at least ``min_size`` points on each side."""
    out = []
    for v in sorted(set(share)):
        lo = sum(1 for s in share if s <= v)
        if lo >= min_size and len(share) - lo >= min_size:
            out.append(v)
    return out


def pearson_sums(x, y):
    """Correlation from raw sums, no centring."""
    n = len(x)
    sx, sy = sum(x), sum(y)
    sxx = sum(a * a for a in x)
    syy = sum(b * b for b in y)
    sxy = sum(a * b for a, b in zip(x, y))
    return (n * sxy - sx * sy) / np.sqrt((n * sxx - sx * sx) * (n * syy - sy * sy))


def grid_pairs(n):
    return list(itertools.combinations(range(n), 2))
