import numpy as np
import pandas as pd
import pytest

from wavepanel.demo import demo_panel
from wavepanel.ingest import (
    ANALYSIS_END,
    ANALYSIS_START,
    ConsistencyError,
    PanelDataset,
    ParseError,
    ValidationError,
    drop_leading_zeros,
    load_panel,
    weekly_mask_average,
    write_panel,
)


def _paths(d):
    return d / "daily.csv", d / "weekly.csv", d / "covariates.csv"


def test_load_roundtrip(demo_dir):
    ds = load_panel(*_paths(demo_dir))
    assert len(ds.countries) == 24
    assert ds.analysis_start == ANALYSIS_START and ds.analysis_end == ANALYSIS_END
    assert len(ds.daily) == 24 * len(ds.dates)
    ref = demo_panel(seed=7)
    np.testing.assert_allclose(ds.daily_matrix("covid_deaths_pm"), ref.daily_matrix("covid_deaths_pm"), rtol=1e-12)
    pd.testing.assert_frame_equal(ds.covariates, ref.covariates, rtol=1e-12)


def test_empty_daily_file(tmp_path, demo_dir):
    d, w, c = _paths(demo_dir)
    empty = tmp_path / "daily.csv"
    empty.write_text("country,date,mask_pct,covid_deaths_pm\n")
    with pytest.raises(ParseError, match="no data rows"):
        load_panel(empty, w, c)


def test_mask_out_of_range_names_row(tmp_path, demo_dir):
    d, w, c = _paths(demo_dir)
    df = pd.read_csv(d)
    df.loc[5, "mask_pct"] = 101
    bad = tmp_path / "daily.csv"
    df.to_csv(bad, index=False)
    with pytest.raises(ValidationError, match=r"C01 2020-02-09 mask_pct=101"):
        load_panel(bad, w, c)


def test_unparseable_value_reports_line(tmp_path, demo_dir):
    d, w, c = _paths(demo_dir)
    lines = d.read_text().splitlines()
    parts = lines[3].split(",")
    parts[3] = "abc"
    lines[3] = ",".join(parts)
    bad = tmp_path / "daily.csv"
    bad.write_text("\n".join(lines) + "\n")
    with pytest.raises(ParseError, match=r"daily.csv:4: bad value 'abc'"):
        load_panel(bad, w, c)


def test_country_sets_must_match(tmp_path, demo_dir):
    d, w, c = _paths(demo_dir)
    cov = pd.read_csv(c)
    cov = cov[cov["country"] != "C03"]
    bad = tmp_path / "covariates.csv"
    cov.to_csv(bad, index=False)
    with pytest.raises(ConsistencyError, match="covariates lacks C03"):
        load_panel(d, w, bad, n_countries=None)
    with pytest.raises(ValidationError, match="expected exactly 25"):
        load_panel(d, w, c, n_countries=25)


def test_missing_covariate_value(tmp_path, demo_dir):
    d, w, c = _paths(demo_dir)
    cov = pd.read_csv(c)
    cov.loc[2, "hdi"] = np.nan
    bad = tmp_path / "covariates.csv"
    cov.to_csv(bad, index=False)
    with pytest.raises(ParseError, match="covariates.csv:4"):
        load_panel(d, w, bad)


def test_missing_file(tmp_path, demo_dir):
    d, w, _ = _paths(demo_dir)
    with pytest.raises(ParseError, match="nope.csv: file not found"):
        load_panel(d, w, tmp_path / "nope.csv")


def test_weekly_must_start_monday():
    w = pd.DataFrame(
        {"country": ["A"], "week_start": [pd.Timestamp("2020-03-03")], "excess_weekly": [1.0], "excess_cumulative": [1.0]}
    )
    with pytest.raises(ValidationError, match="not a Monday"):
        PanelDataset.from_frames(weekly=w)


def test_negative_deaths_clamped(caplog):
    daily = pd.DataFrame(
        {"country": "A", "date": pd.date_range("2020-02-04", periods=3), "mask_pct": 10.0, "covid_deaths_pm": [1, -2, 3]}
    )
    ds = PanelDataset.from_frames(daily=daily, analysis_end="2020-02-06")
    assert ds.daily_series("A", "covid_deaths_pm").tolist() == [1, 0, 3]
    assert "clamping" in caplog.text


def test_absent_days_become_missing():
    daily = pd.DataFrame(
        {"country": "A", "date": pd.to_datetime(["2020-02-04", "2020-02-07"]), "mask_pct": 5.0, "covid_deaths_pm": 1.0}
    )
    ds = PanelDataset.from_frames(daily=daily, analysis_end="2020-02-07")
    m = ds.daily_series("A", "mask_pct")
    assert len(m) == 4 and np.isnan(m[1]) and np.isnan(m[2])


def _one_week(values):
    # Monday 2020-02-10 .. Sunday 2020-02-16
    dates = pd.date_range("2020-02-10", periods=7)
    daily = pd.DataFrame({"country": "A", "date": dates, "mask_pct": values, "covid_deaths_pm": 1.0})
    weekly = pd.DataFrame(
        {"country": ["A"], "week_start": [dates[0]], "excess_weekly": [0.0], "excess_cumulative": [0.0]}
    )
    ds = PanelDataset.from_frames(daily, weekly, analysis_start="2020-02-10", analysis_end="2020-02-16")
    return weekly_mask_average(ds).weekly["mask_pct_weekly"].iloc[0]


def test_weekly_mean_constant():
    assert _one_week([60.0] * 7) == 60


def test_weekly_mean_ignores_missing():
    assert _one_week([50, 60] + [np.nan] * 5) == 55


def test_weekly_mean_spot_check(demo):
    d = demo.daily
    w = demo.weekly.set_index(["country", "week_start"])["mask_pct_weekly"]
    rng = np.random.default_rng(0)
    for country in rng.choice(demo.countries, 5):
        monday = pd.Timestamp("2020-03-02") + pd.Timedelta(weeks=int(rng.integers(0, 90)))
        days = d[(d["country"] == country) & (d["date"] >= monday) & (d["date"] < monday + pd.Timedelta(days=7))]
        vals = [v for v in days["mask_pct"] if v == v]
        assert w[(country, monday)] == pytest.approx(sum(vals) / len(vals), rel=1e-12)


def test_drop_leading_zeros():
    daily = pd.DataFrame(
        {"country": "A", "date": pd.date_range("2020-02-04", periods=5), "mask_pct": [0, 0, 3, 0, 4.0], "covid_deaths_pm": 1.0}
    )
    ds = drop_leading_zeros(PanelDataset.from_frames(daily=daily, analysis_end="2020-02-08"))
    m = ds.daily_series("A", "mask_pct")
    assert np.isnan(m[:2]).all() and m[2:].tolist() == [3, 0, 4]


def test_write_panel_roundtrip(tmp_path):
    ds = demo_panel(n_countries=3, seed=1)
    paths = write_panel(ds, tmp_path)
    back = load_panel(paths["daily"], paths["weekly"], paths["covariates"], n_countries=3)
    np.testing.assert_allclose(back.daily_matrix("mask_pct"), ds.daily_matrix("mask_pct"), rtol=1e-12, equal_nan=True)
    np.testing.assert_allclose(back.weekly["excess_cumulative"], ds.weekly["excess_cumulative"], rtol=1e-12)
