"""Synthetic stand-in for the real country panel.

The generator gives every country three epidemic waves (spring 2020, winter
2020/21, autumn 2021) with jittered timing and size, mask usage that ramps up
in spring 2020 and rises further while deaths are high, weekly excess
mortality and a covariate table. Values are invented; the panel exists so the
whole pipeline can run without the real data.
"""

from __future__ import annotations

import numpy as np
import pandas as pd

from .ingest import ANALYSIS_END, ANALYSIS_START, PanelDataset, week_start_of

WAVE_CENTERS = (75, 335, 615)  # days after the analysis start
WAVE_WIDTHS = (18.0, 35.0, 30.0)


def _bump(t, center, width):
    return np.exp(-0.5 * ((t - center) / width) ** 2)


def demo_panel(n_countries: int = 24, seed: int = 0, missing_mask_frac: float = 0.01) -> PanelDataset:
    """Daily, weekly and covariate frames for ``n_countries`` synthetic countries."""
    rng = np.random.default_rng(seed)
    dates = pd.date_range(ANALYSIS_START, ANALYSIS_END, freq="D")
    t = np.arange(len(dates), dtype=float)
    countries = [f"C{i:02d}" for i in range(1, n_countries + 1)]

    daily_parts, weekly_parts, cov_rows = [], [], []
    weeks = pd.date_range("2019-12-30", "2021-12-27", freq="7D")
    for c in countries:
        curve = np.zeros_like(t)
        for center, width in zip(WAVE_CENTERS, WAVE_WIDTHS):
            height = rng.uniform(2.0, 15.0)
            curve += height * _bump(t, center + rng.normal(0, 10), width * rng.uniform(0.7, 1.3))
        curve += 0.05
        deaths = rng.gamma(8.0, curve / 8.0)

        plateau = rng.uniform(25, 75)
        ramp = plateau / (1 + np.exp(-(t - 50 - rng.normal(0, 8)) / 6))
        reactive = 2.0 * pd.Series(curve).rolling(14, min_periods=1).mean().to_numpy()
        mask = np.clip(ramp + reactive + rng.normal(0, 2, len(t)), 0, 100)
        mask[t < 20] = 0.0
        mask[rng.random(len(t)) < missing_mask_frac] = np.nan
        daily_parts.append(pd.DataFrame({"country": c, "date": dates, "mask_pct": mask, "covid_deaths_pm": deaths}))

        # weekly excess: follows deaths (summed over the week) plus noise; weeks before the
        # analysis window get deaths from the first wave's tail only, i.e. roughly zero
        wk = pd.Series(deaths, index=week_start_of(dates).to_numpy()).groupby(level=0).sum()
        wk = wk.reindex(weeks, fill_value=0.0)
        excess = rng.normal(0, 1.0) + 0.8 * wk.to_numpy() + rng.normal(0, 3.0, len(weeks))
        weekly_parts.append(
            pd.DataFrame(
                {"country": c, "week_start": weeks, "excess_weekly": excess, "excess_cumulative": np.cumsum(excess)}
            )
        )

        cardio = rng.uniform(80, 400)
        cov_rows.append(
            {
                "country": c,
                "vaccination_rate": rng.uniform(40, 90),
                "hdi": rng.uniform(0.75, 0.95),
                "cardio_death_rate": cardio,
                "life_expectancy": 84 - 0.015 * cardio + rng.normal(0, 0.8),
                "mean_mask": np.nanmean(mask),
                "total_deaths": deaths.sum(),
            }
        )

    cov = pd.DataFrame(cov_rows).set_index("country")
    z = lambda v: (v - v.mean()) / v.std()
    cov["age_adjusted_excess"] = 8 + 3 * z(cov["total_deaths"]) + 1.5 * z(cov["mean_mask"]) + rng.normal(0, 1.5, len(cov))
    cov = cov.drop(columns=["mean_mask", "total_deaths"])
    return PanelDataset.from_frames(
        pd.concat(daily_parts, ignore_index=True),
        pd.concat(weekly_parts, ignore_index=True),
        cov,
        n_countries=n_countries,
    )
