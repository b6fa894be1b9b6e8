"""Phase partition of the analysis window and per-country wave intervals.

Phases are common to all countries: each country's daily death curve is
normalized to unit mass, the curves are summed, and the phase boundaries are
placed at the deepest troughs of the (smoothed) pooled curve. Within each
phase a country's wave is the shortest run of days holding a given fraction
(99% by default) of that country's deaths in the phase.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.signal import find_peaks

from .ingest import ANALYSIS_START, PanelDataset


class WaveError(ValueError):
    pass


Interval = tuple[pd.Timestamp, pd.Timestamp]


@dataclass(frozen=True)
class PhasePartition:
    """Contiguous phases covering ``[start, end]``.

    ``boundaries`` holds the first day of every phase after the first.
    """

    start: pd.Timestamp
    end: pd.Timestamp
    boundaries: tuple[pd.Timestamp, ...]

    def __post_init__(self):
        object.__setattr__(self, "start", pd.Timestamp(self.start))
        object.__setattr__(self, "end", pd.Timestamp(self.end))
        b = tuple(pd.Timestamp(x) for x in self.boundaries)
        object.__setattr__(self, "boundaries", b)
        prev = self.start
        for x in b:
            if not prev < x <= self.end:
                raise WaveError(f"phase boundaries must increase strictly inside ({self.start.date()}, {self.end.date()}]")
            prev = x

    @property
    def phases(self) -> list[Interval]:
        starts = [self.start, *self.boundaries]
        ends = [s - pd.Timedelta(days=1) for s in self.boundaries] + [self.end]
        return list(zip(starts, ends))

    def __len__(self):
        return len(self.boundaries) + 1

    @classmethod
    def from_boundaries(cls, boundaries, start=None, end=None) -> PhasePartition:
        from .ingest import ANALYSIS_END

        return cls(
            ANALYSIS_START if start is None else start,
            ANALYSIS_END if end is None else end,
            tuple(pd.Timestamp(b) for b in boundaries),
        )


@dataclass(frozen=True)
class WaveInterval:
    country: str
    phase_index: int
    start: pd.Timestamp
    end: pd.Timestamp
    begin_window: Interval
    peak_window: Interval
    peak_day: pd.Timestamp
    wave_deaths_pm_mean: float

    @property
    def length(self) -> int:
        return (self.end - self.start).days + 1

    def days(self) -> pd.DatetimeIndex:
        return pd.date_range(self.start, self.end, freq="D")


@dataclass(frozen=True)
class WaveSet:
    partition: PhasePartition
    waves: tuple[WaveInterval, ...]

    def for_country(self, country: str) -> list[WaveInterval]:
        return [w for w in self.waves if w.country == country]

    @property
    def countries(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(w.country for w in self.waves))

    def to_frame(self) -> pd.DataFrame:
        rows = [
            {
                "country": w.country,
                "phase": w.phase_index,
                "start": w.start,
                "end": w.end,
                "begin_start": w.begin_window[0],
                "begin_end": w.begin_window[1],
                "peak_start": w.peak_window[0],
                "peak_end": w.peak_window[1],
                "mean_deaths_pm": w.wave_deaths_pm_mean,
            }
            for w in self.waves
        ]
        return pd.DataFrame(rows)


def _normalize(x) -> np.ndarray:
    x = np.nan_to_num(np.asarray(x, dtype=float), nan=0.0)
    total = x.sum()
    if not total > 0:
        raise WaveError("degenerate country series: total deaths must be positive")
    return x / total


def normalize_deaths(dataset: PanelDataset, country: str) -> np.ndarray:
    """Daily deaths of one country scaled to sum to 1 over the analysis window."""
    try:
        return _normalize(dataset.daily_series(country, "covid_deaths_pm"))
    except WaveError as e:
        raise WaveError(f"{country}: {e}") from None


def pooled_curve(dataset: PanelDataset) -> pd.Series:
    """Sum over countries of the normalized death curves, indexed by date."""
    deaths = dataset.daily_matrix("covid_deaths_pm")
    total = np.zeros(deaths.shape[1])
    for country, row in zip(dataset.countries, deaths):
        try:
            total += _normalize(row)
        except WaveError as e:
            raise WaveError(f"{country}: {e}") from None
    return pd.Series(total, index=dataset.dates, name="pooled")


def smooth(curve: pd.Series, smoothing_days: int) -> pd.Series:
    if smoothing_days < 1:
        raise ValueError("smoothing_days must be positive")
    if smoothing_days == 1:
        return curve.astype(float)
    return curve.rolling(smoothing_days, center=True, min_periods=1).mean()


def find_phase_boundaries(
    curve,
    smoothing_days: int = 7,
    n_phases: int = 3,
    min_separation: int = 60,
) -> PhasePartition:
    """Split the curve's date range at its ``n_phases - 1`` most prominent troughs.

    The curve is smoothed with a centered rolling mean first. Troughs are
    interior local minima ranked by topographic prominence; a trough closer
    than ``min_separation`` days to an already selected one is skipped. Each
    selected trough day becomes the first day of a new phase.
    """
    if n_phases < 2:
        raise ValueError("n_phases must be at least 2")
    if not isinstance(curve, pd.Series):
        curve = np.asarray(curve, dtype=float)
        curve = pd.Series(curve, index=pd.date_range(ANALYSIS_START, periods=len(curve), freq="D"))
    s = smooth(curve, smoothing_days).to_numpy()
    idx, props = find_peaks(-s, prominence=0)
    order = sorted(range(len(idx)), key=lambda k: (-props["prominences"][k], idx[k]))

    chosen: list[int] = []
    for k in order:
        if all(abs(idx[k] - c) >= min_separation for c in chosen):
            chosen.append(int(idx[k]))
        if len(chosen) == n_phases - 1:
            break
    if len(chosen) < n_phases - 1:
        raise WaveError(f"insufficient troughs: found {len(chosen)}, need {n_phases - 1}")
    dates = curve.index
    return PhasePartition(dates[0], dates[-1], tuple(dates[c] for c in sorted(chosen)))


def minimal_mass_interval(x, mass_fraction: float = 0.99) -> tuple[int, int]:
    """Shortest ``[i, j]`` (inclusive) with ``sum(x[i:j+1]) >= mass_fraction * sum(x)``.

    Ties on length go to the earliest start. ``x`` must be nonnegative with a
    positive total. A relative slack of 1e-12 of the total absorbs rounding in
    the running sums.
    """
    x = np.asarray(x, dtype=float)
    if not 0 < mass_fraction <= 1:
        raise ValueError("mass_fraction must be in (0, 1]")
    total = x.sum()
    if not total > 0:
        raise WaveError("empty phase: no deaths")
    target = mass_fraction * total - 1e-12 * total
    cs = np.concatenate([[0.0], np.cumsum(x)])
    best = (0, len(x) - 1)
    i = 0
    for j in range(len(x)):
        if cs[j + 1] - cs[i] < target:
            continue
        while cs[j + 1] - cs[i + 1] >= target:
            i += 1
        if j - i < best[1] - best[0]:
            best = (i, j)
    return best


def decile_length(n_days: int) -> int:
    return max(1, -(-n_days // 10))


def _wave_from_indices(country, phase_index, days, raw, i, j) -> WaveInterval:
    L = decile_length(j - i + 1)
    # missing days count as zero for the peak search
    peak = i + int(np.argmax(np.nan_to_num(raw[i : j + 1], nan=0.0)))
    p_start = min(peak, j - L + 1)
    observed = np.asarray(raw[i : j + 1], dtype=float)
    mean = float(np.nanmean(observed)) if np.isfinite(observed).any() else float("nan")
    return WaveInterval(
        country=country,
        phase_index=phase_index,
        start=days[i],
        end=days[j],
        begin_window=(days[i], days[i + L - 1]),
        peak_window=(days[p_start], days[p_start + L - 1]),
        peak_day=days[peak],
        wave_deaths_pm_mean=mean,
    )


def detect_wave(
    dataset: PanelDataset,
    country: str,
    phase: Interval,
    mass_fraction: float = 0.99,
    phase_index: int = 1,
) -> WaveInterval:
    """Minimal-length interval inside ``phase`` holding ``mass_fraction`` of the phase deaths."""
    start, end = pd.Timestamp(phase[0]), pd.Timestamp(phase[1])
    days = dataset.dates
    mask = (days >= start) & (days <= end)
    raw = dataset.daily_series(country, "covid_deaths_pm")[mask]
    x = np.nan_to_num(raw, nan=0.0)
    if not x.sum() > 0:
        raise WaveError(f"empty phase for country {country} (phase {phase_index}: {start.date()}..{end.date()})")
    i, j = minimal_mass_interval(x, mass_fraction)
    return _wave_from_indices(country, phase_index, days[mask], raw, i, j)


def build_waveset(dataset: PanelDataset, partition: PhasePartition, mass_fraction: float = 0.99) -> WaveSet:
    """Detect one wave per (country, phase); failures are collected and reported together."""
    waves, failures = [], []
    for country in dataset.countries:
        for k, phase in enumerate(partition.phases, start=1):
            try:
                waves.append(detect_wave(dataset, country, phase, mass_fraction, phase_index=k))
            except WaveError as e:
                failures.append(f"{country}/phase {k}: {e}")
    if failures:
        raise WaveError("wave detection failed for " + "; ".join(failures))
    return WaveSet(partition, tuple(waves))
