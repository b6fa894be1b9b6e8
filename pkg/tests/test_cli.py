import json

import pandas as pd
import pytest

from wavepanel import __version__
from wavepanel.cli import main, parse_lags


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def read_csv(path):
    lines = path.read_text().splitlines()
    return lines[0], pd.read_csv(path, comment="#")


def test_parse_lags():
    assert parse_lags("-1:4") == [-1, 0, 1, 2, 3, 4]
    assert parse_lags("1,3") == [1, 3]


def test_validate(capsys, demo_dir):
    code, out, _ = run(capsys, "validate", "--data-dir", demo_dir)
    assert code == 0 and "24 countries" in out


def test_missing_covariates_exit_2(capsys, demo_dir, tmp_path):
    code, _, err = run(
        capsys, "validate", "--daily", demo_dir / "daily.csv", "--weekly", demo_dir / "weekly.csv",
        "--covariates", tmp_path / "covariates.csv",
    )
    assert code == 2 and "covariates.csv" in err


def test_validation_error_exit_2(capsys, demo_dir, tmp_path):
    d = pd.read_csv(demo_dir / "daily.csv")
    d.loc[3, "mask_pct"] = 101
    d.to_csv(tmp_path / "daily.csv", index=False)
    code, _, err = run(capsys, "validate", "--daily", tmp_path / "daily.csv", "--weekly", demo_dir / "weekly.csv",
                       "--covariates", demo_dir / "covariates.csv")
    assert code == 2 and "mask_pct=101" in err


def test_analysis_error_exit_1(capsys, demo_dir, tmp_path):
    code, _, err = run(capsys, "waves", "--data-dir", demo_dir, "--out", tmp_path, "--phases", "12")
    assert code == 1 and "stage 'waves'" in err and "insufficient troughs" in err


def test_waves_outputs(capsys, demo_dir, tmp_path):
    code, _, _ = run(capsys, "waves", "--data-dir", demo_dir, "--out", tmp_path, "--seed", 3)
    assert code == 0
    header, waves = read_csv(tmp_path / "waves.csv")
    assert header == f"# wavepanel {__version__} seed=3"
    assert list(waves.columns) == [
        "country", "phase", "start", "end", "begin_start", "begin_end", "peak_start", "peak_end", "mean_deaths_pm",
    ]
    assert len(waves) == 72
    _, phases = read_csv(tmp_path / "phases.csv")
    assert len(phases) == 3


def test_boundaries_override(capsys, demo_dir, tmp_path):
    code, _, _ = run(capsys, "waves", "--data-dir", demo_dir, "--out", tmp_path, "--boundaries", "2020-08-03,2021-07-12")
    assert code == 0
    _, phases = read_csv(tmp_path / "phases.csv")
    assert phases["start"].tolist() == ["2020-02-04", "2020-08-03", "2021-07-12"]
    assert phases["end"].tolist() == ["2020-08-02", "2021-07-11", "2021-12-31"]


def test_indices_outputs(capsys, demo_dir, tmp_path):
    assert run(capsys, "indices", "--data-dir", demo_dir, "--out", tmp_path)[0] == 0
    _, idx = read_csv(tmp_path / "indices.csv")
    assert list(idx.columns) == ["country", "maskall", "maskinwave", "maskinterwave", "maskbeginwave", "maskpeakwave"]
    _, rec = read_csv(tmp_path / "wave_records.csv")
    assert len(rec) == 72


def test_corr_prints_csv(capsys, demo_dir, tmp_path):
    args = ("corr", "--data-dir", demo_dir, "--out", tmp_path, "--method", "spearman",
            "--x", "maskinwave", "--y", "maskpeakwave", "--reps", 1000, "--seed", 5)
    code, out, _ = run(capsys, *args)
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "estimate,ci_low,ci_high,n" and lines[1].endswith(",24")
    assert all(len(v.split(".")[1]) == 4 for v in lines[1].split(",")[:3])
    assert run(capsys, *args)[1] == out


def test_corr_level_mismatch(capsys, demo_dir, tmp_path):
    code, _, err = run(capsys, "corr", "--data-dir", demo_dir, "--out", tmp_path, "--x", "wave_mortality", "--y", "hdi")
    assert code == 2 and "same level" in err


def test_regress_rows(capsys, demo_dir, tmp_path):
    code, out, _ = run(capsys, "regress", "--data-dir", demo_dir, "--out", tmp_path,
                       "--outcome", "age_adjusted_excess", "--mask-index", "maskinterwave")
    assert code == 0
    _, t = read_csv(tmp_path / "regress_maskinterwave.csv")
    assert list(t.columns) == ["name", "coef", "se", "p", "std_coef", "std_ci_low", "std_ci_high"]
    assert t["name"].tolist() == ["intercept", "vaccination_rate", "maskinterwave", "hdi", "health_pc"]


def test_twfe_table_and_residuals(capsys, demo_dir, tmp_path):
    code, _, _ = run(capsys, "twfe", "--data-dir", demo_dir, "--out", tmp_path, "--outcome", "cumulative",
                     "--lags", "-1:4", "--residuals", "res")
    assert code == 0
    _, t = read_csv(tmp_path / "twfe_table.csv")
    assert list(t.columns) == ["lag", "outcome", "beta", "ci_low", "ci_high", "n_obs"]
    assert t["lag"].tolist() == [-1, 0, 1, 2, 3, 4]
    res = sorted(p.name for p in (tmp_path / "res").glob("residuals_*.csv"))
    assert len(res) == 24
    assert (tmp_path / "res" / "residual_grid_cumulative_lag1.svg").read_text().startswith("<svg")


def test_falsify_report(capsys, tmp_path):
    code, _, _ = run(capsys, "falsify", "--reps", 5, "--shift-sd", 3, "--reactivity", 0.5, "--lags", "-1:1",
                     "--seed", 2, "--out", tmp_path)
    assert code == 0
    header, t = read_csv(tmp_path / "falsify_report.csv")
    assert header.endswith("seed=2")
    assert list(t.columns) == ["lag", "outcome", "mean_beta", "reject_rate"] and len(t) == 6


def test_plot_scatter(capsys, demo_dir, tmp_path):
    code, _, _ = run(capsys, "plot", "scatter", "--x", "ratio_peak_begin", "--y", "wave_mortality",
                     "--data-dir", demo_dir, "--out", tmp_path)
    assert code == 0
    svg = (tmp_path / "scatter_wave_mortality_vs_ratio_peak_begin.svg").read_text()
    assert svg.count("<circle") >= 60


def test_reproduce_all_deterministic(capsys, demo_dir, tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        assert run(capsys, "reproduce-all", "--data-dir", demo_dir, "--out", out, "--seed", 1, "--reps", 1000)[0] == 0
        outs.append(out)
    m1 = (outs[0] / "manifest.json").read_bytes()
    assert m1 == (outs[1] / "manifest.json").read_bytes()
    manifest = json.loads(m1)
    names = {f["file"] for f in manifest["files"]}
    for required in ("twfe_table.csv", "index_correlations.csv", "regressions.csv", "ratios.csv",
                     "phases.csv", "waves.csv", "phases.svg"):
        assert required in names
    for f in manifest["files"]:
        if f["file"].endswith(".csv"):
            assert (outs[0] / f["file"]).read_text().startswith(f"# wavepanel {__version__} seed=1\n")
    _, corr = read_csv(outs[0] / "index_correlations.csv")
    assert len(corr) == 10
