import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy import stats

from oracles import normal_equations
from stablecoin_tbills.regress import (
    DesignMatrix,
    RankDeficiencyError,
    fitted_value_ci,
    ols_fit,
    significance_stars,
    t_cdf,
    t_ppf,
    t_sf_two_sided,
)

X4 = np.array([0.0, 1.0, 2.0, 3.0])
Y4 = np.array([1.0, 2.0, 2.0, 4.0])


def four_point():
    return ols_fit(DesignMatrix.from_columns(Y4, {"x": X4}))


def random_design(seed, n, k):
    rng = np.random.default_rng(seed)
    X = np.column_stack([np.ones(n), rng.normal(size=(n, k - 1))])
    y = X @ rng.normal(size=k) + rng.normal(size=n)
    return X, y


class TestOLS:
    def test_perfect_fit(self):
        x = np.arange(10.0)
        fit = ols_fit(DesignMatrix.from_columns(2 + 3 * x, {"x": x}))
        assert fit.coefficients == pytest.approx([2.0, 3.0], abs=1e-12)
        assert fit.ssr < 1e-25
        assert fit.r_squared == pytest.approx(1.0)
        assert fit.sigma2 == 0.0
        assert np.all(np.isnan(fit.p_values))

    def test_four_point_hand_solution(self):
        # Sums: x 6, y 9, xy 18, x^2 14 -> slope 18/20, intercept (9 - 5.4)/4.
        fit = four_point()
        assert fit.coef("x") == pytest.approx(0.9, abs=1e-12)
        assert fit.coef("const") == pytest.approx(0.9, abs=1e-12)
        assert fit.ssr == pytest.approx(0.70, abs=1e-12)
        assert fit.df_resid == 2

    def test_invariants(self):
        X, y = random_design(3, 15, 3)
        fit = ols_fit(DesignMatrix(X, y, ("const", "a", "b")))
        assert np.allclose(fit.residuals, y - fit.fitted)
        assert np.allclose(fit.fitted, X @ fit.coefficients)
        assert fit.ssr == pytest.approx(fit.residuals @ fit.residuals)
        assert np.max(np.abs(X.T @ fit.residuals)) < 1e-10
        assert fit.adj_r_squared == pytest.approx(1 - (1 - fit.r_squared) * 14 / 12)

    def test_rank_deficiency_names_columns(self):
        x = np.arange(8.0)
        design = DesignMatrix.from_columns(np.sin(x), {"x": x, "x2": 2 * x - 1, "z": np.cos(x)})
        with pytest.raises(RankDeficiencyError) as exc:
            ols_fit(design)
        assert set(exc.value.columns) >= {"x", "x2"}
        assert "z" not in exc.value.columns

    def test_constant_only_regressor_is_rejected(self):
        with pytest.raises(RankDeficiencyError):
            ols_fit(DesignMatrix.from_columns(np.arange(6.0), {"flat": np.full(6, 3.0)}))

    @pytest.mark.parametrize("kwargs, match", [
        ({"names": ("const", "const")}, "duplicate"),
        ({"names": ("c", "x")}, "missing"),
        ({"X": np.ones((2, 2)), "y": np.ones(2)}, "more observations"),
    ])
    def test_design_validation(self, kwargs, match):
        base = {"X": np.column_stack([np.ones(5), np.arange(5.0)]), "y": np.arange(5.0),
                "names": ("const", "x")}
        base.update(kwargs)
        with pytest.raises(ValueError, match=match):
            DesignMatrix(**base)

    @settings(max_examples=200)
    @given(st.integers(0, 2**32 - 1), st.integers(4, 12), st.integers(1, 3))
    def test_matches_normal_equations(self, seed, n, k):
        assume(n > k)
        X, y = random_design(seed, n, k)
        assume(np.linalg.cond(X) < 1e6)
        beta, se, ssr, _ = normal_equations(X, y)
        fit = ols_fit(DesignMatrix(X, y, tuple(f"c{i}" if i else "const" for i in range(k))))
        scale = np.maximum(np.abs(beta), 1.0)
        assert np.all(np.abs(fit.coefficients - beta) / scale < 1e-8)
        assert fit.ssr == pytest.approx(ssr, rel=1e-8, abs=1e-12)
        if fit.sigma2 > 0:
            assert fit.standard_errors == pytest.approx(se, rel=1e-7)

    @settings(max_examples=100)
    @given(st.integers(0, 2**32 - 1), st.floats(1e-3, 1e3) | st.floats(-1e3, -1e-3))
    def test_scale_equivariance(self, seed, c):
        X, y = random_design(seed, 12, 3)
        names = ("const", "a", "b")
        base = ols_fit(DesignMatrix(X, y, names))
        Xc = X.copy()
        Xc[:, 1] *= c
        scaled = ols_fit(DesignMatrix(Xc, y, names))
        assert scaled.coef("a") == pytest.approx(base.coef("a") / c, rel=1e-10)
        assert scaled.se("a") == pytest.approx(base.se("a") / abs(c), rel=1e-10)
        assert scaled.fitted == pytest.approx(base.fitted, rel=1e-10, abs=1e-12)
        assert scaled.ssr == pytest.approx(base.ssr, rel=1e-10)
        assert scaled.r_squared == pytest.approx(base.r_squared, rel=1e-10)
        assert np.abs(scaled.t_stats) == pytest.approx(np.abs(base.t_stats), rel=1e-10)

    @settings(max_examples=100)
    @given(st.integers(0, 2**32 - 1), st.integers(5, 30))
    def test_r_squared_bounded(self, seed, n):
        X, y = random_design(seed, n, 3)
        fit = ols_fit(DesignMatrix(X, y, ("const", "a", "b")))
        assert 0.0 <= fit.r_squared <= 1.0
        assert np.max(np.abs(X.T @ fit.residuals)) < 1e-9 * max(1.0, np.abs(X).sum())


class TestStudentT:
    # Two-sided 5% critical values from standard printed tables.
    @pytest.mark.parametrize("df, crit", [(1, 12.706), (2, 4.303), (5, 2.571), (10, 2.228),
                                          (30, 2.042), (34, 2.032), (120, 1.980)])
    def test_tabulated_critical_values(self, df, crit):
        assert t_ppf(0.975, df) == pytest.approx(crit, abs=5e-4)
        assert t_sf_two_sided(crit, df) == pytest.approx(0.05, abs=5e-4)

    @settings(max_examples=200)
    @given(st.floats(-50, 50), st.integers(1, 200))
    def test_cdf_against_scipy(self, t, df):
        assert abs(float(t_cdf(t, df)) - stats.t.cdf(t, df)) < 1e-10

    @given(st.floats(1e-6, 1 - 1e-6), st.integers(1, 200))
    def test_ppf_inverts_cdf(self, q, df):
        assert float(t_cdf(t_ppf(q, df), df)) == pytest.approx(q, abs=1e-10)

    @given(st.floats(0, 40), st.floats(0, 40), st.integers(1, 60))
    def test_p_monotone_in_abs_t(self, a, b, df):
        lo, hi = sorted((a, b))
        assert t_sf_two_sided(hi, df) <= t_sf_two_sided(lo, df)

    def test_p_in_unit_interval(self):
        fit = four_point()
        assert np.all((fit.p_values >= 0) & (fit.p_values <= 1))


class TestStars:
    @pytest.mark.parametrize("p, stars", [(0.004, "***"), (0.01, "**"), (0.049, "**"),
                                          (0.05, "*"), (0.07, "*"), (0.10, ""), (0.5, ""),
                                          (None, ""), (float("nan"), "")])
    def test_cutoffs(self, p, stars):
        assert significance_stars(p) == stars

    def test_invalid(self):
        with pytest.raises(ValueError):
            significance_stars(1.5)


class TestFittedValueCI:
    def test_four_point_against_hand_inverse(self):
        fit = four_point()
        inv = np.array([[14.0, -6.0], [-6.0, 4.0]]) / 20.0  # (X'X)^-1 with det 20
        row = np.array([1.0, 1.5])
        half = stats.t.ppf(0.975, 2) * math.sqrt(0.70 / 2 * row @ inv @ row)
        lo, hi = fitted_value_ci(fit, row, 0.95)
        assert lo == pytest.approx(2.25 - half, abs=1e-10)
        assert hi == pytest.approx(2.25 + half, abs=1e-10)
        assert half == pytest.approx(1.272742, abs=1e-6)

    def test_perfect_fit_has_zero_width(self):
        x = np.arange(6.0)
        fit = ols_fit(DesignMatrix.from_columns(1 - x, {"x": x}))
        lo, hi = fitted_value_ci(fit, [1.0, 2.5])
        assert lo == hi

    def test_widens_away_from_mean(self):
        fit = four_point()
        widths = [np.diff(fitted_value_ci(fit, [1.0, x]))[0] for x in (1.5, 2.0, 3.0, 5.0, 10.0)]
        assert all(a < b for a, b in zip(widths, widths[1:]))
        left = np.diff(fitted_value_ci(fit, [1.0, 1.0]))[0]
        assert left == pytest.approx(widths[1])  # symmetric about the mean 1.5

    def test_bad_row(self):
        with pytest.raises(ValueError):
            fitted_value_ci(four_point(), [1.0])
        with pytest.raises(ValueError):
            fitted_value_ci(four_point(), [1.0, 1.0], level=1.0)
