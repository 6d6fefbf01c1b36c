"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line."""

import os
import shutil
import subprocess
import sys
import time
import xml.etree.ElementTree as ET

import mpmath
import numpy as np
import pytest

from oracles import normal_equations
from stablecoin_tbills.analysis import (
    ImpactQuery,
    annual_savings,
    bps_impact,
    impact_report,
    render_regime_figure,
    SlopeProfile,
)
from stablecoin_tbills.cli import main
from stablecoin_tbills.dataset import derive_panel, ihs, read_panel, reference_envelope_violations, residualize_issuance, summary_stats
from stablecoin_tbills.models import baseline_fits
from stablecoin_tbills.regress import DesignMatrix, ols_fit
from stablecoin_tbills.simulate import SimulationConfig, simulate_panel
from stablecoin_tbills.threshold import (
    ThresholdSpec,
    grid_search,
    lr_linearity_test,
    regime_design,
    threshold_fit,
)

PLANTED = dict(planted_tau=0.010, slopes=(-1.7, -6.3), noise_sd=0.01, n=40)
PLANTED_SEEDS = range(1, 51)
NULL_SEEDS = range(10_001, 10_201)
REFERENCE_PANEL_ENV = "STABLECOIN_TBILLS_REFERENCE_PANEL"


@pytest.fixture
def verdict(capsys):
    def report(number, title, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} -- {detail}")
        assert ok, detail
    return report


def test_c01_ols_oracle_equivalence(verdict):
    rng = np.random.default_rng(20240101)
    start = time.perf_counter()
    worst, done = 0.0, 0
    while done < 500:
        n = int(rng.integers(4, 13))
        k = int(rng.integers(1, min(3, n - 1) + 1))
        X = np.column_stack([np.ones(n), rng.normal(size=(n, k - 1))])
        if np.linalg.cond(X) > 1e6:
            continue
        y = X @ rng.normal(size=k) + rng.normal(size=n)
        fit = ols_fit(DesignMatrix(X, y, ("const",) + tuple(f"x{i}" for i in range(1, k))))
        beta = normal_equations(X, y)[0]
        worst = max(worst, float(np.max(np.abs(fit.coefficients - beta) / np.maximum(np.abs(beta), 1.0))))
        done += 1
    elapsed = time.perf_counter() - start
    verdict(1, "OLS oracle equivalence", worst < 1e-8 and elapsed < 5,
            f"500 designs, max rel error {worst:.1e}, {elapsed:.2f}s")


def test_c02_ihs(verdict):
    start = time.perf_counter()
    with mpmath.workdps(50):
        one = float(mpmath.log(1 + mpmath.sqrt(2)))
    rng = np.random.default_rng(7)
    x = rng.normal(0, 1e3, 10_000)
    odd = bool(np.array_equal(ihs(-x), -ihs(x)))
    big = rng.uniform(100, 1e8, 10_000)
    asym = float(np.max(np.abs(ihs(big) - np.log(2 * big))))
    elapsed = time.perf_counter() - start
    ok = (ihs(0.0) == 0.0 and abs(ihs(1.0) - 0.881374) <= 1e-6 and abs(ihs(1.0) - one) < 1e-15
          and odd and asym < 1e-4 and elapsed < 1)
    verdict(2, "IHS correctness", ok,
            f"IHS(1)={float(ihs(1.0)):.9f}, odd={odd}, max asymptote gap {asym:.1e}, {elapsed:.3f}s")


def test_c03_residual_orthogonality(verdict):
    rng = np.random.default_rng(3)
    start = time.perf_counter()
    worst_ip, worst_mean = 0.0, 0.0
    for _ in range(100):
        n = int(rng.integers(8, 41))
        t = np.arange(1.0, n + 1)
        s = rng.uniform(0.005, 0.02, n)
        y = ihs(rng.normal(45e9, 5e9, n) / 1e6)
        r = residualize_issuance(y, t, s)
        for v in (t, s):
            worst_ip = max(worst_ip, abs(r @ v) / (np.linalg.norm(r) * np.linalg.norm(v)))
        worst_mean = max(worst_mean, abs(r.mean()))
    elapsed = time.perf_counter() - start
    verdict(3, "residualization orthogonality", worst_ip < 1e-6 and worst_mean < 1e-9 and elapsed < 1,
            f"max normalized inner product {worst_ip:.1e}, max |mean| {worst_mean:.1e}, {elapsed:.3f}s")


def _refined_step(share, tau, points):
    values = np.unique(share)
    i = np.searchsorted(values, tau, side="right") - 1
    return (values[i + 1] - values[i]) / (points + 1)


def test_c04_threshold_recovery(verdict):
    spec = ThresholdSpec()
    start = time.perf_counter()
    tau_hits, low_hits, high_hits = 0, 0, 0
    for seed in PLANTED_SEEDS:
        panel = derive_panel(simulate_panel(SimulationConfig(seed=seed, **PLANTED)))
        grid = grid_search(panel, "1m", spec)
        fit = ols_fit(regime_design(panel, "1m", grid.tau_hat, spec))
        step = _refined_step(panel.market_share, 0.010, spec.refine_points)
        tau_hits += abs(grid.tau_hat - 0.010) <= step
        low_hits += abs(fit.coef("market_share_low") + 1.7) <= 2 * fit.se("market_share_low")
        high_hits += abs(fit.coef("market_share_high") + 6.3) <= 2 * fit.se("market_share_high")
    elapsed = time.perf_counter() - start
    ok = tau_hits >= 48 and low_hits >= 45 and high_hits >= 45 and elapsed < 30
    verdict(4, "threshold recovery", ok,
            f"tau {tau_hits}/50, low slope {low_hits}/50, high slope {high_hits}/50, {elapsed:.1f}s")


def test_c05_bootstrap_size_and_power(verdict):
    start = time.perf_counter()
    null_rejections = 0
    for seed in NULL_SEEDS:
        panel = derive_panel(simulate_panel(SimulationConfig(seed=seed, n=40, slopes=(-3.8, -3.8))))
        null_rejections += lr_linearity_test(panel, "1m", replications=200, seed=seed).bootstrap_p < 0.05
    power_hits = 0
    for seed in PLANTED_SEEDS:
        panel = derive_panel(simulate_panel(SimulationConfig(seed=seed, **PLANTED)))
        power_hits += lr_linearity_test(panel, "1m", replications=200, seed=seed).bootstrap_p < 0.05
    elapsed = time.perf_counter() - start
    size = null_rejections / len(NULL_SEEDS)
    power = power_hits / len(PLANTED_SEEDS)
    ok = 0.01 <= size <= 0.12 and power >= 0.90 and elapsed < 300
    verdict(5, "bootstrap LR size and power", ok,
            f"size {size:.3f} ({null_rejections}/200), power {power:.2f} ({power_hits}/50), {elapsed:.1f}s")


def test_c06_low_regime_arithmetic(verdict):
    bps = bps_impact(ImpactQuery(-1.730, 0.001, 4.24))
    verdict(6, "low-regime bps", abs(bps + 0.73) <= 0.01, f"{bps:.4f} bps")


def test_c07_high_regime_arithmetic(verdict):
    bps = bps_impact(ImpactQuery(-6.264, 0.001, 4.24))
    verdict(7, "high-regime bps", abs(bps + 2.66) <= 0.01, f"{bps:.4f} bps")


def test_c08_savings_arithmetic(verdict):
    a = annual_savings(24, 6.2e12)
    b = annual_savings(16, 6.2e12)
    ok = abs(a - 14.88e9) <= 0.01e9 and abs(b - 9.92e9) <= 0.01e9
    verdict(8, "annual savings", ok, f"24 bps -> ${a / 1e9:.3f}bn, 16 bps -> ${b / 1e9:.3f}bn")


def test_c09_semi_elasticity_consistency(verdict):
    report = impact_report(SlopeProfile(-3.795, -3.795), 0.01, 4.16, 6.2e12, reference_share=0.0)
    ok = abs(report.relative_change + 0.03795) < 1e-12 and -16 <= report.bps_change <= -14
    verdict(9, "semi-elasticity consistency", ok,
            f"relative change {100 * report.relative_change:.3f}%, {report.bps_change:.2f} bps")


def test_c10_determinism(verdict, tmp_path, capsys):
    csv = tmp_path / "panel.csv"
    main(["simulate", "--seed", "1", "-o", str(csv)])
    args = ["fit", str(csv), "--model", "threshold", "--replications", "500", "--seed", "7"]
    outputs = {}
    for name, extra in (("first", []), ("second", []), ("parallel", ["--jobs", "4"])):
        assert main(args + extra + ["--output-dir", str(tmp_path / name)]) == 0
        outputs[name] = (tmp_path / name / "threshold.json").read_bytes()
    script = shutil.which("stablecoin-tbills")
    cmd = [script] if script else [sys.executable, "-m", "stablecoin_tbills"]
    subprocess.run(cmd + args + ["--output-dir", str(tmp_path / "subprocess")], check=True,
                   capture_output=True)
    outputs["subprocess"] = (tmp_path / "subprocess" / "threshold.json").read_bytes()
    capsys.readouterr()

    panel = derive_panel(read_panel(csv))
    serial = lr_linearity_test(panel, "1m", replications=500, seed=7)
    parallel = lr_linearity_test(panel, "1m", replications=500, seed=7, n_jobs=4)
    same_draws = np.array_equal(serial.bootstrap_stats, parallel.bootstrap_stats)
    same_files = len(set(outputs.values())) == 1
    verdict(10, "determinism", same_files and same_draws,
            f"JSON identical across {len(outputs)} runs: {same_files}; serial vs 4 threads bit-exact: {same_draws}")


def test_c11_figure_structure(verdict):
    panel = derive_panel(simulate_panel(SimulationConfig(seed=1, **PLANTED)))
    fit = threshold_fit(panel, "1m", replications=50, seed=1)
    root = ET.fromstring(render_regime_figure(fit, panel))
    ns = "{http://www.w3.org/2000/svg}"

    def count(tag, cls):
        return sum(1 for e in root.iter(ns + tag) if cls in e.get("class", "").split())

    paths = count("path", "fit-line")
    bands = count("polygon", "ci-band")
    rules = count("line", "threshold-rule")
    dots = count("circle", "obs")
    ok = (paths, bands, rules, dots) == (2, 2, 1, panel.n) and len(list(root.iter(ns + "path"))) == 2
    verdict(11, "figure structure", ok,
            f"{paths} fit paths, {bands} CI polygons, {rules} threshold rule, {dots}/{panel.n} markers")


@pytest.mark.skipif(not os.environ.get(REFERENCE_PANEL_ENV),
                    reason=f"data-dependent gate; set {REFERENCE_PANEL_ENV} to a real panel CSV")
def test_c12_reference_panel(verdict):
    path = os.environ[REFERENCE_PANEL_ENV]
    drop_first = os.environ.get("STABLECOIN_TBILLS_DROP_FIRST", "0") == "1"
    panel = derive_panel(read_panel(path), drop_first=drop_first)
    outside = reference_envelope_violations(summary_stats(panel))
    if outside:
        pytest.skip(f"panel outside the reference envelopes for {', '.join(outside)}")
    b1 = baseline_fits(panel, "1m")[2].coef("market_share")
    b3 = baseline_fits(panel, "3m")[2].coef("market_share")
    tau = threshold_fit(panel, "1m", replications=50).tau
    ok = abs(b1 / -3.795 - 1) <= 0.15 and abs(b3 / -3.386 - 1) <= 0.15 and abs(tau - 0.00973) <= 0.001
    verdict(12, "reference panel reproduction", ok,
            f"beta 1m {b1:.3f}, beta 3m {b3:.3f}, tau {100 * tau:.3f}%")
