"""Synthetic panels showing how cumulative outcomes produce spurious TWFE effects.

Countries share one epidemic curve but experience it shifted in time and
scaled, which breaks the additive country + week structure the TWFE model
relies on. Mask usage optionally reacts to the epidemic, either to the
current (shifted) curve or to the country's accumulated deaths. The
experiment fits the model at several lags, including negative ones, and
records how often the 95% interval excludes zero.

With ``mask_response="current"`` the weekly outcome picks up the reactive
co-movement at every lag. With ``mask_response="cumulative"`` and scale
heterogeneity, the cumulative outcome rejects far more often than the weekly
one, at negative lags too.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import pandas as pd
from scipy import stats as sps

from .ingest import PanelDataset
from .twfe import twfe_core

FIRST_WEEK = pd.Timestamp("2019-12-30")  # Monday of the ISO week holding 2020-01-01


def two_wave_template(t):
    """Two Gaussian bumps over 104 weeks: a sharp spring wave and a broader winter wave."""
    t = np.asarray(t, dtype=float)
    return 30.0 * np.exp(-0.5 * ((t - 14) / 3.5) ** 2) + 22.0 * np.exp(-0.5 * ((t - 52) / 7.0) ** 2)


@dataclass(frozen=True)
class SynthSpec:
    n_countries: int = 24
    n_weeks: int = 104
    wave_template: Callable = field(default=two_wave_template, repr=False)
    country_shift_sd: float = 0.0  # weeks
    country_scale_sd: float = 0.0  # sd of log scale
    mask_reactivity: float = 0.0
    # "current": mask += reactivity * template(t - shift)
    # "cumulative": mask += reactivity * (own accumulated deaths up to t) / 100
    mask_response: str = "current"
    true_beta: float = 0.0
    noise_sd: float = 5.0
    seed: int = 0
    mask_noise_sd: float = 3.0
    country_effect_sd: float = 5.0
    mask_baseline: tuple[float, float] = (20.0, 70.0)
    max_shift: int = 8

    def __post_init__(self):
        if self.n_countries < 2 or self.n_weeks < 10:
            raise ValueError("need n_countries >= 2 and n_weeks >= 10")
        for name in ("country_shift_sd", "country_scale_sd", "noise_sd", "mask_noise_sd", "country_effect_sd"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.mask_response not in ("current", "cumulative"):
            raise ValueError("mask_response must be 'current' or 'cumulative'")


@dataclass(frozen=True)
class FalsifyReport:
    table: pd.DataFrame  # lag, outcome, mean_beta, reject_rate
    draws: pd.DataFrame  # rep, lag, outcome, beta, se, ci_low, ci_high, reject
    replications: int
    spec: SynthSpec

    def rate(self, lag: int, outcome: str) -> float:
        t = self.table
        return float(t[(t["lag"] == lag) & (t["outcome"] == outcome)]["reject_rate"].iloc[0])


def _draw_shifts(rng, spec):
    if spec.country_shift_sd == 0:
        return np.zeros(spec.n_countries, dtype=int)
    bound = spec.max_shift / spec.country_shift_sd
    z = sps.truncnorm.rvs(-bound, bound, size=spec.n_countries, random_state=rng)
    return np.rint(z * spec.country_shift_sd).astype(int)


def synth_arrays(spec: SynthSpec, rng: np.random.Generator | None = None):
    """(mask, weekly, cumulative) as countries x weeks arrays."""
    rng = np.random.default_rng(spec.seed) if rng is None else rng
    C, T = spec.n_countries, spec.n_weeks
    weeks = np.arange(T)
    shifts = _draw_shifts(rng, spec)
    scales = np.exp(spec.country_scale_sd * rng.standard_normal(C))
    a = spec.country_effect_sd * rng.standard_normal(C)
    base = rng.uniform(*spec.mask_baseline, size=C)

    curve = np.asarray(spec.wave_template(weeks[None, :] - shifts[:, None]), dtype=float)
    deaths = scales[:, None] * curve
    driver = curve if spec.mask_response == "current" else np.cumsum(deaths, axis=1) / 100.0
    mask = base[:, None] + spec.mask_reactivity * driver + spec.mask_noise_sd * rng.standard_normal((C, T))
    mask = np.clip(mask, 0.0, 100.0)
    weekly = a[:, None] + deaths + spec.true_beta * mask + spec.noise_sd * rng.standard_normal((C, T))
    cumulative = np.cumsum(weekly, axis=1)
    return mask, weekly, cumulative


def synth_panel(spec: SynthSpec) -> PanelDataset:
    """Weekly-only panel drawn from ``spec`` (``mask_pct_weekly`` filled)."""
    mask, weekly, cumulative = synth_arrays(spec)
    C, T = mask.shape
    countries = [f"C{i:02d}" for i in range(C)]
    frame = pd.DataFrame(
        {
            "country": np.repeat(countries, T),
            "week_start": np.tile(FIRST_WEEK + pd.to_timedelta(7 * np.arange(T), unit="D"), C),
            "excess_weekly": weekly.ravel(),
            "excess_cumulative": cumulative.ravel(),
            "mask_pct_weekly": mask.ravel(),
        }
    )
    end = FIRST_WEEK + pd.Timedelta(weeks=T) - pd.Timedelta(days=1)
    return PanelDataset.from_frames(weekly=frame, analysis_start=FIRST_WEEK, analysis_end=end)


def _lagged_arrays(mask, outcome, lag):
    C, T = mask.shape
    lo, hi = max(0, -lag), min(T, T - lag)
    x = mask[:, lo:hi]
    y = outcome[:, lo + lag : hi + lag]
    n = hi - lo
    g = np.repeat(np.arange(C), n)
    t = np.tile(np.arange(n), C)
    return g, t, x.ravel(), y.ravel(), C, n


def spuriousness_experiment(spec: SynthSpec, lags=(-1, 0, 1, 2, 3, 4), replications: int = 500, alpha: float = 0.05) -> FalsifyReport:
    """Monte-Carlo rejection rates of the TWFE null ``beta = 0`` per lag and outcome.

    Replication ``r`` draws from ``default_rng([spec.seed, r])`` so results do
    not depend on evaluation order.
    """
    if replications < 1:
        raise ValueError("replications must be positive")
    rows = []
    for r in range(replications):
        mask, weekly, cumulative = synth_arrays(spec, np.random.default_rng([spec.seed, r]))
        for outcome, Y in (("weekly", weekly), ("cumulative", cumulative)):
            for lag in lags:
                beta, se, ci, _ = twfe_core(*_lagged_arrays(mask, Y, lag), alpha=alpha)
                rows.append((r, lag, outcome, beta, se, ci[0], ci[1], ci[0] > 0 or ci[1] < 0))
    draws = pd.DataFrame(rows, columns=["rep", "lag", "outcome", "beta", "se", "ci_low", "ci_high", "reject"])
    table = (
        draws.groupby(["lag", "outcome"], sort=False)
        .agg(mean_beta=("beta", "mean"), reject_rate=("reject", "mean"))
        .reset_index()
    )
    order = {o: k for k, o in enumerate(("weekly", "cumulative"))}
    table = table.sort_values(["outcome", "lag"], key=lambda s: s.map(order) if s.name == "outcome" else s)
    return FalsifyReport(table.reset_index(drop=True), draws, replications, spec)
