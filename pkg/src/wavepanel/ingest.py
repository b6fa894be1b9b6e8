"""Loading and validation of the country panel (daily, weekly, covariates)."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import pandas as pd

log = logging.getLogger(__name__)

ANALYSIS_START = pd.Timestamp("2020-02-04")
ANALYSIS_END = pd.Timestamp("2021-12-31")
# weekly outcomes span 2020-01-01 .. 2022-01-02; a week is kept if it overlaps that range
WEEKLY_START = pd.Timestamp("2020-01-01")
WEEKLY_END = pd.Timestamp("2022-01-02")

DAILY_COLUMNS = ["country", "date", "mask_pct", "covid_deaths_pm"]
WEEKLY_COLUMNS = ["country", "week_start", "excess_weekly", "excess_cumulative"]
COVARIATE_COLUMNS = [
    "country",
    "vaccination_rate",
    "hdi",
    "cardio_death_rate",
    "life_expectancy",
    "age_adjusted_excess",
]


class DataError(ValueError):
    """Base class for input problems; the CLI maps these to exit code 2."""


class ParseError(DataError):
    pass


class ValidationError(DataError):
    pass


class ConsistencyError(DataError):
    pass


def _empty_daily():
    return pd.DataFrame(
        {
            "country": pd.Series(dtype=str),
            "date": pd.Series(dtype="datetime64[ns]"),
            "mask_pct": pd.Series(dtype=float),
            "covid_deaths_pm": pd.Series(dtype=float),
        }
    )


def _empty_covariates():
    df = pd.DataFrame({c: pd.Series(dtype=float) for c in COVARIATE_COLUMNS[1:]})
    df.index.name = "country"
    return df


@dataclass(frozen=True)
class PanelDataset:
    """Canonical in-memory panel.

    ``daily`` has one row per (country, day) over the analysis window, with NaN
    for missing values. ``weekly`` has one row per (country, ISO week) and a
    ``mask_pct_weekly`` column that stays NaN until :func:`weekly_mask_average`
    fills it. ``covariates`` is indexed by country.

    Any of the three frames may be empty (synthetic panels only carry the
    weekly part); the non-empty ones must share the same country set.
    """

    daily: pd.DataFrame = field(default_factory=_empty_daily)
    weekly: pd.DataFrame = field(default_factory=pd.DataFrame)
    covariates: pd.DataFrame = field(default_factory=_empty_covariates)
    analysis_start: pd.Timestamp = ANALYSIS_START
    analysis_end: pd.Timestamp = ANALYSIS_END

    @property
    def countries(self) -> tuple[str, ...]:
        for frame in (self.daily, self.weekly):
            if len(frame):
                return tuple(sorted(frame["country"].unique()))
        return tuple(sorted(self.covariates.index))

    @property
    def dates(self) -> pd.DatetimeIndex:
        return pd.date_range(self.analysis_start, self.analysis_end, freq="D")

    def daily_matrix(self, column: str) -> np.ndarray:
        """countries x days array of a daily column (rows follow ``countries``)."""
        wide = self.daily.pivot(index="country", columns="date", values=column)
        wide = wide.reindex(index=list(self.countries), columns=self.dates)
        return wide.to_numpy(dtype=float)

    def daily_series(self, country: str, column: str) -> np.ndarray:
        sub = self.daily[self.daily["country"] == country]
        if sub.empty:
            raise KeyError(f"unknown country {country!r}")
        s = sub.set_index("date")[column].reindex(self.dates)
        return s.to_numpy(dtype=float)

    @classmethod
    def from_frames(
        cls,
        daily=None,
        weekly=None,
        covariates=None,
        analysis_start=ANALYSIS_START,
        analysis_end=ANALYSIS_END,
        n_countries: int | None = None,
    ) -> PanelDataset:
        """Validate and canonicalize already-typed frames."""
        start, end = pd.Timestamp(analysis_start), pd.Timestamp(analysis_end)
        daily = _empty_daily() if daily is None else _canonical_daily(daily, start, end)
        weekly = _canonical_weekly(pd.DataFrame(columns=WEEKLY_COLUMNS) if weekly is None else weekly)
        covariates = _empty_covariates() if covariates is None else _canonical_covariates(covariates)

        sets = {}
        if len(daily):
            sets["daily"] = set(daily["country"])
        if len(weekly):
            sets["weekly"] = set(weekly["country"])
        if len(covariates):
            sets["covariates"] = set(covariates.index)
        _check_country_sets(sets)
        if n_countries is not None and len(covariates) and len(covariates) != n_countries:
            raise ValidationError(f"covariates: expected exactly {n_countries} countries, found {len(covariates)}")
        return cls(daily, weekly, covariates, start, end)


def _check_country_sets(sets):
    if len(sets) < 2:
        return
    union = set().union(*sets.values())
    problems = []
    for name, s in sets.items():
        missing = sorted(union - s)
        if missing:
            problems.append(f"{name} lacks {', '.join(missing)}")
    if problems:
        raise ConsistencyError("country sets differ: " + "; ".join(problems))


def _canonical_daily(daily, start, end):
    df = daily[DAILY_COLUMNS].copy()
    df["country"] = df["country"].astype(str)
    df["date"] = pd.to_datetime(df["date"]).dt.normalize()
    df["mask_pct"] = df["mask_pct"].astype(float)
    df["covid_deaths_pm"] = df["covid_deaths_pm"].astype(float)

    outside = df[(df["date"] < start) | (df["date"] > end)]
    if len(outside):
        r = outside.iloc[0]
        raise ValidationError(
            f"daily: {r['country']} {r['date'].date()} outside analysis window {start.date()}..{end.date()}"
        )
    bad = df[(df["mask_pct"] < 0) | (df["mask_pct"] > 100)]
    if len(bad):
        r = bad.iloc[0]
        raise ValidationError(f"daily: {r['country']} {r['date'].date()} mask_pct={r['mask_pct']} not in [0, 100]")
    dup = df[df.duplicated(["country", "date"])]
    if len(dup):
        r = dup.iloc[0]
        raise ValidationError(f"daily: duplicate row for {r['country']} {r['date'].date()}")

    neg = df["covid_deaths_pm"] < 0
    if neg.any():
        log.warning("daily: clamping %d negative covid_deaths_pm values to 0", int(neg.sum()))
        df.loc[neg, "covid_deaths_pm"] = 0.0

    # contiguous per-country range; absent days become missing rows
    dates = pd.date_range(start, end, freq="D")
    full = pd.MultiIndex.from_product([sorted(df["country"].unique()), dates], names=["country", "date"])
    n_before = len(df)
    df = df.set_index(["country", "date"]).reindex(full).reset_index()
    if len(df) > n_before:
        log.info("daily: %d absent (country, date) rows filled as missing", len(df) - n_before)
    return df


def _canonical_weekly(weekly):
    df = weekly.copy()
    for c in WEEKLY_COLUMNS:
        if c not in df.columns:
            raise ParseError(f"weekly: missing column {c!r}")
    if "mask_pct_weekly" not in df.columns:
        df["mask_pct_weekly"] = np.nan
    df = df[WEEKLY_COLUMNS + ["mask_pct_weekly"]]
    df["country"] = df["country"].astype(str)
    df["week_start"] = pd.to_datetime(df["week_start"]).dt.normalize()
    for c in ("excess_weekly", "excess_cumulative", "mask_pct_weekly"):
        df[c] = df[c].astype(float)
    if len(df):
        not_monday = df[df["week_start"].dt.dayofweek != 0]
        if len(not_monday):
            r = not_monday.iloc[0]
            raise ValidationError(f"weekly: {r['country']} week_start {r['week_start'].date()} is not a Monday")
        week_end = df["week_start"] + pd.Timedelta(days=6)
        out = df[(week_end < WEEKLY_START) | (df["week_start"] > WEEKLY_END)]
        if len(out):
            r = out.iloc[0]
            raise ValidationError(f"weekly: {r['country']} week {r['week_start'].date()} outside 2020-01-01..2022-01-02")
        dup = df[df.duplicated(["country", "week_start"])]
        if len(dup):
            r = dup.iloc[0]
            raise ValidationError(f"weekly: duplicate row for {r['country']} {r['week_start'].date()}")
        m = df["mask_pct_weekly"]
        if ((m < 0) | (m > 100)).any():
            raise ValidationError("weekly: mask_pct_weekly outside [0, 100]")
    return df.sort_values(["country", "week_start"]).reset_index(drop=True)


def _canonical_covariates(cov):
    df = cov.copy()
    if "country" in df.columns:
        df = df.set_index("country")
    df.index = df.index.astype(str)
    df.index.name = "country"
    df = df[COVARIATE_COLUMNS[1:]].astype(float)
    if df.index.duplicated().any():
        raise ValidationError(f"covariates: duplicate country {df.index[df.index.duplicated()][0]}")
    na = df.isna()
    if na.any().any():
        country, col = na.stack()[na.stack()].index[0]
        raise ValidationError(f"covariates: {country} has missing {col}")
    return df.sort_index()


def _read_strict(path, columns, date_columns, required_numeric=()):
    """Read a CSV as strings, check the header, and type the columns.

    Errors name the file and 1-based line number (header is line 1).
    """
    path = Path(path)
    if not path.exists():
        raise ParseError(f"{path}: file not found")
    try:
        raw = pd.read_csv(path, dtype=str, keep_default_na=False, na_values=[], comment=None)
    except pd.errors.EmptyDataError:
        raise ParseError(f"{path}: empty file (no header)") from None
    except pd.errors.ParserError as e:
        raise ParseError(f"{path}: {e}") from None
    raw.columns = [c.strip() for c in raw.columns]
    missing = [c for c in columns if c not in raw.columns]
    if missing:
        raise ParseError(f"{path}:1: missing column(s) {', '.join(missing)}")
    if raw.empty:
        raise ParseError(f"{path}: no data rows")
    raw = raw[columns]

    out = pd.DataFrame({"country": raw["country"].str.strip()})
    if (out["country"] == "").any():
        line = int(np.flatnonzero(out["country"] == "")[0]) + 2
        raise ParseError(f"{path}:{line}: empty country")
    for c in columns[1:]:
        col = raw[c].str.strip()
        if c in date_columns:
            parsed = pd.to_datetime(col, format="%Y-%m-%d", errors="coerce")
            bad = parsed.isna()
        else:
            parsed = pd.to_numeric(col.replace("", np.nan), errors="coerce")
            bad = parsed.isna() & (col != "")
            if c in required_numeric:
                bad |= col == ""
        if bad.any():
            i = int(np.flatnonzero(bad.to_numpy())[0])
            raise ParseError(f"{path}:{i + 2}: bad value {raw[c].iloc[i]!r} in column {c!r}")
        out[c] = parsed
    return out


def load_panel(
    daily_path,
    weekly_path,
    covariates_path,
    n_countries: int | None = 24,
    analysis_start=ANALYSIS_START,
    analysis_end=ANALYSIS_END,
) -> PanelDataset:
    """Load and validate the three CSV files into a :class:`PanelDataset`."""
    daily = _read_strict(daily_path, DAILY_COLUMNS, {"date"})
    weekly = _read_strict(weekly_path, WEEKLY_COLUMNS, {"week_start"})
    cov = _read_strict(covariates_path, COVARIATE_COLUMNS, set(), required_numeric=set(COVARIATE_COLUMNS[1:]))
    try:
        ds = PanelDataset.from_frames(daily, weekly, cov, analysis_start, analysis_end, n_countries=n_countries)
    except (ValidationError, ConsistencyError) as e:
        raise type(e)(f"{e} [files: {daily_path}, {weekly_path}, {covariates_path}]") from None
    log.info(
        "loaded %d daily rows, %d weekly rows, %d countries",
        len(ds.daily),
        len(ds.weekly),
        len(ds.covariates),
    )
    return ds


def write_panel(dataset: PanelDataset, directory) -> dict[str, Path]:
    """Write the dataset back in the input CSV schemas; returns the paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {name: directory / f"{name}.csv" for name in ("daily", "weekly", "covariates")}

    d = dataset.daily[DAILY_COLUMNS].copy()
    d["date"] = d["date"].dt.strftime("%Y-%m-%d")
    d.to_csv(paths["daily"], index=False, lineterminator="\n")
    w = dataset.weekly[WEEKLY_COLUMNS].copy()
    w["week_start"] = w["week_start"].dt.strftime("%Y-%m-%d")
    w.to_csv(paths["weekly"], index=False, lineterminator="\n")
    dataset.covariates.reset_index()[COVARIATE_COLUMNS].to_csv(paths["covariates"], index=False, lineterminator="\n")
    return paths


def week_start_of(dates) -> pd.Series:
    dates = pd.to_datetime(pd.Series(dates))
    return (dates - pd.to_timedelta(dates.dt.dayofweek, unit="D")).dt.normalize()


def weekly_mask_average(dataset: PanelDataset) -> PanelDataset:
    """Fill ``mask_pct_weekly`` with the mean of non-missing daily values per ISO week.

    Weeks without any daily mask value stay NaN. Weeks present in the daily data
    but absent from the weekly frame are not added.
    """
    d = dataset.daily.dropna(subset=["mask_pct"])
    if d.empty:
        return dataset
    means = (
        d.assign(week_start=week_start_of(d["date"]).to_numpy())
        .groupby(["country", "week_start"])["mask_pct"]
        .mean()
        .rename("mask_pct_weekly")
    )
    w = dataset.weekly.drop(columns="mask_pct_weekly")
    w = w.merge(means.reset_index(), on=["country", "week_start"], how="left")
    return replace(dataset, weekly=w)


def drop_leading_zeros(dataset: PanelDataset) -> PanelDataset:
    """Mark zero mask values before each country's first positive value as missing."""
    d = dataset.daily.sort_values(["country", "date"]).copy()
    positive = d["mask_pct"].fillna(0) > 0
    seen = positive.groupby(d["country"]).cummax()
    leading = (~seen) & (d["mask_pct"] == 0)
    if leading.any():
        log.info("dropping %d leading zero mask values", int(leading.sum()))
    d.loc[leading, "mask_pct"] = np.nan
    return replace(dataset, daily=d.reset_index(drop=True))
