import io
import math

import numpy as np
import pytest

from stablecoin_tbills.dataset import CSV_COLUMNS, derive_panel
from stablecoin_tbills.simulate import SimulationConfig, simulate_panel


def csv_bytes(rows, header=CSV_COLUMNS):
    lines = [",".join(header)]
    lines += [",".join(str(v) for v in r) for r in rows]
    return io.BytesIO(("\n".join(lines) + "\n").encode("utf-8"))


def reference_like_rows(n_periods=14):
    """Panel shaped like the real 2022Q1-2025Q1 data.

    Changes in outstanding are chosen so their IHS (in millions) is an
    almost exact linear trend around 11.41, and shares/yields sit inside the
    published ranges. Intended for use with ``drop_first=True``.
    """
    rng = np.random.default_rng(2025)
    outstanding = [5.0e12]
    for t in range(1, n_periods):
        level = 11.400 + 0.0015 * t + rng.normal(0, 2e-6)
        outstanding.append(outstanding[-1] + math.sinh(level) * 1e6)
    shares = np.linspace(0.0060, 0.0158, n_periods) + rng.normal(0, 0.0008, n_periods)
    shares = np.clip(shares, 0.0058, 0.0159)
    log_y = np.linspace(-0.6, 1.65, n_periods) + rng.normal(0, 0.04, n_periods)
    rows = []
    for t in range(n_periods):
        rows.append([
            t + 1, f"{2021 + (t + 3) // 4}Q{(t + 3) % 4 + 1}",
            repr(float(shares[t] * outstanding[t])), repr(float(outstanding[t])),
            repr(float(np.exp(log_y[t]))), repr(float(np.exp(log_y[t] + 0.03))),
        ])
    return rows


@pytest.fixture
def planted_panel():
    return derive_panel(simulate_panel(SimulationConfig(seed=1)))


@pytest.fixture
def null_panel():
    return derive_panel(simulate_panel(SimulationConfig(seed=101, slopes=(-3.8, -3.8))))
