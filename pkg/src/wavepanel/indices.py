"""Per-country mask-usage indices tied to wave timing."""

from __future__ import annotations

import logging

import numpy as np
import pandas as pd

from .ingest import PanelDataset
from .waves import WaveSet

log = logging.getLogger(__name__)

INDEX_NAMES = ("maskall", "maskinwave", "maskinterwave", "maskbeginwave", "maskpeakwave")


class IndexTableError(ValueError):
    pass


def _window_mask(dates: pd.DatetimeIndex, intervals) -> np.ndarray:
    sel = np.zeros(len(dates), dtype=bool)
    for a, b in intervals:
        sel |= (dates >= a) & (dates <= b)
    return sel


def _mean_over(values, sel):
    v = values[sel]
    v = v[~np.isnan(v)]
    if v.size == 0:
        return None
    return float(v.mean())


def day_sets(dataset: PanelDataset, waveset: WaveSet, country: str) -> dict[str, np.ndarray]:
    """Boolean day masks (over the analysis window) backing each index."""
    dates = dataset.dates
    waves = waveset.for_country(country)
    inwave = _window_mask(dates, [(w.start, w.end) for w in waves])
    return {
        "maskall": np.ones(len(dates), dtype=bool),
        "maskinwave": inwave,
        "maskinterwave": ~inwave,
        "maskbeginwave": _window_mask(dates, [w.begin_window for w in waves]),
        "maskpeakwave": _window_mask(dates, [w.peak_window for w in waves]),
    }


def compute_indices(dataset: PanelDataset, waveset: WaveSet) -> pd.DataFrame:
    """Table of the five mask indices, one row per country.

    Each index is the mean of the non-missing daily mask values over its day
    set; in-wave sets are unions over the country's waves, and the interwave
    set is that country's complement of the in-wave union.
    """
    covered = set(waveset.countries)
    missing = [c for c in dataset.countries if c not in covered]
    if missing:
        raise IndexTableError(f"waveset lacks countries: {', '.join(missing)}")

    rows = {}
    for country in dataset.countries:
        mask = dataset.daily_series(country, "mask_pct")
        row = {}
        for name, sel in day_sets(dataset, waveset, country).items():
            m = _mean_over(mask, sel)
            if m is None:
                raise IndexTableError(f"{country}: empty day set for {name}")
            row[name] = m
        rows[country] = row
    table = pd.DataFrame.from_dict(rows, orient="index", columns=list(INDEX_NAMES))
    table.index.name = "country"
    return table


def wave_mask_records(dataset: PanelDataset, waveset: WaveSet) -> pd.DataFrame:
    """Begin/peak mask averages and mean daily COVID mortality for every wave.

    Windows with no mask data give NaN averages (with a warning) rather than an
    error; downstream analyses drop those rows.
    """
    dates = dataset.dates
    rows = []
    masks = {}
    for w in waveset.waves:
        if w.country not in masks:
            masks[w.country] = dataset.daily_series(w.country, "mask_pct")
        mask = masks[w.country]
        begin = _mean_over(mask, _window_mask(dates, [w.begin_window]))
        peak = _mean_over(mask, _window_mask(dates, [w.peak_window]))
        if begin is None or peak is None:
            log.warning("%s phase %d: no mask data in begin/peak window", w.country, w.phase_index)
        rows.append(
            {
                "country": w.country,
                "phase": w.phase_index,
                "begin_avg": np.nan if begin is None else begin,
                "peak_avg": np.nan if peak is None else peak,
                "wave_deaths_pm_mean": w.wave_deaths_pm_mean,
            }
        )
    return pd.DataFrame(rows, columns=["country", "phase", "begin_avg", "peak_avg", "wave_deaths_pm_mean"])


def total_deaths_pm(dataset: PanelDataset) -> pd.Series:
    """COVID deaths per million summed over the analysis window, per country."""
    d = dataset.daily
    total = d.groupby("country")["covid_deaths_pm"].sum(min_count=1)
    return total.reindex(list(dataset.countries)).rename("total_deaths_pm")


def ratio_table(indices: pd.DataFrame, records: pd.DataFrame, dataset: PanelDataset) -> dict[str, pd.DataFrame]:
    """Peak/begin ratios per wave and inwave/interwave ratios per country."""
    r = records.dropna(subset=["begin_avg", "peak_avg"])
    per_wave = pd.DataFrame(
        {
            "country": r["country"],
            "phase": r["phase"],
            "ratio": r["peak_avg"] / r["begin_avg"],
            "mortality": r["wave_deaths_pm_mean"],
        }
    )
    bad = ~np.isfinite(per_wave["ratio"])
    if bad.any():
        log.warning("dropping %d waves with zero begin-window masking", int(bad.sum()))
    per_wave = per_wave[~bad].reset_index(drop=True)
    per_country = pd.DataFrame(
        {
            "ratio": indices["maskinwave"] / indices["maskinterwave"],
            "mortality": total_deaths_pm(dataset).reindex(indices.index),
        }
    )
    return {"peak_begin": per_wave, "inwave_interwave": per_country}
