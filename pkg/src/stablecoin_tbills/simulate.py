"""Synthetic panels with a planted market-share threshold.

Shares follow a noisy upward ramp over time, reflected into ``share_range``; the observation closest to the
planted threshold is moved onto it, so the true sample split is one of the
candidate thresholds, much as a simulated structural break is planted at an
observation date. Log yields are generated from the regime model

    ln y = intercept + shift*1[S > tau] + b_low*S*1[S <= tau]
           + b_high*S*1[S > tau] + trend_coef*t + noise
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .dataset import Observation, write_panel


@dataclass(frozen=True)
class SimulationConfig:
    seed: int = 0
    n: int = 40
    planted_tau: float = 0.010
    slopes: tuple[float, float] = (-1.7, -6.3)
    noise_sd: float = 0.01
    intercept_shift: float = 0.0
    intercept: float = 1.4
    trend_coef: float = 0.01
    share_range: tuple[float, float] = (0.0057, 0.0160)
    share_noise: float = 0.003
    maturity_spread: float = 0.03
    outstanding_start: float = 5.0e12
    change_mean: float = 45e9
    change_sd: float = 5e9

    def __post_init__(self):
        if self.n < 10:
            raise ValueError(f"n must be >= 10, got {self.n}")
        if self.noise_sd < 0:
            raise ValueError(f"noise_sd must be >= 0, got {self.noise_sd}")
        lo, hi = self.share_range
        if not 0 < lo < hi < 1:
            raise ValueError(f"share_range must satisfy 0 < lo < hi < 1, got {self.share_range}")
        object.__setattr__(self, "slopes", tuple(float(s) for s in self.slopes))
        object.__setattr__(self, "share_range", (float(lo), float(hi)))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["slopes"] = list(self.slopes)
        d["share_range"] = list(self.share_range)
        return d


def _holdings_for_share(share: float, outstanding: float) -> float:
    """Holdings whose ratio to ``outstanding`` is exactly ``share`` in floating point."""
    h = share * outstanding
    for _ in range(64):
        r = h / outstanding
        if r == share:
            break
        h = np.nextafter(h, np.inf if r < share else -np.inf)
    return float(h)


def log_yield_mean(config: SimulationConfig, share: np.ndarray, trend: np.ndarray) -> np.ndarray:
    """Noise-free log 1-month yield implied by the configuration."""
    b_low, b_high = config.slopes
    high = share > config.planted_tau
    return (config.intercept
            + config.intercept_shift * high
            + np.where(high, b_high * share, b_low * share)
            + config.trend_coef * trend)


def simulate_panel(config: SimulationConfig = SimulationConfig()) -> list[Observation]:
    rng = np.random.default_rng(config.seed)
    n = config.n
    lo, hi = config.share_range
    trend = np.arange(1, n + 1, dtype=float)

    share = np.linspace(lo, hi, n) + rng.normal(0.0, config.share_noise, n)
    # Reflect excursions back into the range rather than piling them on a bound.
    share = np.where(share < lo, 2 * lo - share, share)
    share = np.where(share > hi, 2 * hi - share, share)
    share = np.clip(share, lo, hi)
    if lo < config.planted_tau < hi:
        share[np.argmin(np.abs(share - config.planted_tau))] = config.planted_tau

    changes = rng.normal(config.change_mean, config.change_sd, n)
    outstanding = config.outstanding_start + np.cumsum(changes)
    if np.any(outstanding <= 0):
        raise ValueError("simulated outstanding amount went non-positive")
    holdings = np.array([_holdings_for_share(s, o) for s, o in zip(share, outstanding)])
    share = holdings / outstanding

    mean = log_yield_mean(config, share, trend)
    log_1m = mean + rng.normal(0.0, config.noise_sd, n)
    log_3m = mean + config.maturity_spread + rng.normal(0.0, config.noise_sd, n)

    return [
        Observation(
            period_index=t + 1,
            date_label=f"{2022 + t // 4}Q{t % 4 + 1}",
            tether_holdings=float(holdings[t]),
            tbills_outstanding=float(outstanding[t]),
            yield_1m=float(np.exp(log_1m[t])),
            yield_3m=float(np.exp(log_3m[t])),
        )
        for t in range(n)
    ]


def sidecar_path(csv_path: str | Path) -> Path:
    return Path(csv_path).with_suffix(".params.json")


def write_simulation(config: SimulationConfig, csv_path: str | Path) -> Path:
    """Write the panel CSV plus a JSON sidecar echoing the generator parameters."""
    observations = simulate_panel(config)
    write_panel(observations, csv_path)
    side = sidecar_path(csv_path)
    payload = {"generator": "stablecoin_tbills.simulate", "config": config.to_dict()}
    side.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    return side
