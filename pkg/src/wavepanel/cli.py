"""Command-line entry point: ``wavepanel <subcommand> [options]``.

Exit codes: 0 ok, 1 analysis error, 2 input error.
"""

from __future__ import annotations

import argparse
import contextlib
import hashlib
import itertools
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__
from . import svg
from .falsify import SynthSpec, spuriousness_experiment
from .indices import INDEX_NAMES, compute_indices, ratio_table, total_deaths_pm, wave_mask_records
from .ingest import DataError, PanelDataset, drop_leading_zeros, load_panel, weekly_mask_average
from .regress import health_pc, main_regression, mask_index_regressions, reverse_causality_regressions
from .stats import DEFAULT_REPS, DEFAULT_SEED, correlation, quartiles, spearman, wilcoxon_one_sided
from .twfe import build_lagged_panel, lag_sweep, residual_diagnostics, twfe_fit
from .waves import PhasePartition, build_waveset, find_phase_boundaries, pooled_curve

log = logging.getLogger("wavepanel")

WAVE_VARIABLES = {
    "wave_begin": "begin_avg",
    "wave_peak": "peak_avg",
    "wave_mortality": "wave_deaths_pm_mean",
    "ratio_peak_begin": None,
}


class StageError(RuntimeError):
    def __init__(self, stage, exc):
        super().__init__(f"stage '{stage}' failed: {exc}")
        self.stage = stage
        self.exc = exc


@contextlib.contextmanager
def stage(name):
    try:
        yield
    except (DataError, FileNotFoundError, StageError):
        raise
    except Exception as e:  # noqa: BLE001 - re-raised with the stage name
        raise StageError(name, e) from e


def parse_lags(text: str) -> list[int]:
    """``-1:4`` -> [-1, 0, 1, 2, 3, 4]; ``1,3`` -> [1, 3]."""
    if ":" in text:
        a, b = text.split(":")
        return list(range(int(a), int(b) + 1))
    return [int(v) for v in text.split(",") if v]


def parse_boundaries(text: str | None):
    if not text:
        return None
    return [pd.Timestamp(v.strip()) for v in text.split(",") if v.strip()]


@dataclass
class Analysis:
    """Lazily evaluated chain dataset -> phases -> waves -> indices."""

    args: argparse.Namespace
    _cache: dict = field(default_factory=dict)

    @cached_property
    def dataset(self) -> PanelDataset:
        a = self.args
        base = Path(a.data_dir) if a.data_dir else None

        def pick(explicit, name):
            if explicit:
                return Path(explicit)
            if base is None:
                raise DataError(f"no --{name} file given and no --data-dir / WAVEPANEL_DATA set")
            return base / f"{name}.csv"

        paths = [pick(a.daily, "daily"), pick(a.weekly, "weekly"), pick(a.covariates, "covariates")]
        for p in paths:
            if not p.exists():
                raise DataError(f"input file not found: {p}")
        ds = load_panel(*paths, n_countries=a.n_countries)
        if a.drop_leading_zeros:
            ds = drop_leading_zeros(ds)
        return weekly_mask_average(ds)

    @cached_property
    def curve(self) -> pd.Series:
        with stage("waves"):
            return pooled_curve(self.dataset)

    @cached_property
    def partition(self) -> PhasePartition:
        a = self.args
        with stage("waves"):
            override = parse_boundaries(getattr(a, "boundaries", None))
            if override:
                return PhasePartition(self.dataset.analysis_start, self.dataset.analysis_end, tuple(override))
            return find_phase_boundaries(self.curve, a.smoothing, a.phases)

    @cached_property
    def waveset(self):
        with stage("waves"):
            return build_waveset(self.dataset, self.partition, self.args.mass)

    @cached_property
    def indices(self) -> pd.DataFrame:
        with stage("indices"):
            return compute_indices(self.dataset, self.waveset)

    @cached_property
    def records(self) -> pd.DataFrame:
        with stage("indices"):
            return wave_mask_records(self.dataset, self.waveset)

    @cached_property
    def ratios(self) -> dict[str, pd.DataFrame]:
        return ratio_table(self.indices, self.records, self.dataset)

    def country_table(self) -> pd.DataFrame:
        cov = self.dataset.covariates
        t = cov.join(self.indices).join(health_pc(cov))
        t["total_mortality"] = total_deaths_pm(self.dataset).reindex(t.index)
        t["ratio_inwave_interwave"] = t["maskinwave"] / t["maskinterwave"]
        return t

    def wave_table(self) -> pd.DataFrame:
        r = self.records
        t = pd.DataFrame({k: r[v] for k, v in WAVE_VARIABLES.items() if v})
        t["ratio_peak_begin"] = r["peak_avg"] / r["begin_avg"]
        return t

    def variables(self, x: str, y: str) -> tuple[np.ndarray, np.ndarray]:
        """Paired values of two named variables, both per wave or both per country."""
        wave_level = [v in WAVE_VARIABLES for v in (x, y)]
        if wave_level[0] != wave_level[1]:
            raise DataError(f"variables {x!r} and {y!r} are not at the same level (country vs wave)")
        t = self.wave_table() if wave_level[0] else self.country_table()
        for v in (x, y):
            if v not in t.columns:
                known = sorted(WAVE_VARIABLES) + sorted(self.country_table().columns)
                raise DataError(f"unknown variable {v!r}; known: {', '.join(known)}")
        sub = t[[x, y]].replace([np.inf, -np.inf], np.nan).dropna()
        return sub[x].to_numpy(), sub[y].to_numpy()


# ---------------------------------------------------------------- output helpers


class Writer:
    def __init__(self, out: Path, seed: int):
        self.out = Path(out)
        self.seed = seed
        self.out.mkdir(parents=True, exist_ok=True)
        self.written: list[Path] = []

    def csv(self, name, df: pd.DataFrame, float_format="%.4f") -> Path:
        path = self.out / name
        path.parent.mkdir(parents=True, exist_ok=True)
        body = df.to_csv(index=False, float_format=float_format, lineterminator="\n", date_format="%Y-%m-%d")
        path.write_text(f"# wavepanel {__version__} seed={self.seed}\n" + body, encoding="utf-8")
        self.written.append(path)
        return path

    def text(self, name, content: str) -> Path:
        path = self.out / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(content, encoding="utf-8")
        self.written.append(path)
        return path

    def manifest(self) -> Path:
        root = self.out.resolve()
        files = sorted({p.resolve() for p in self.written if p.name != "manifest.json"})
        entries = [
            {"file": p.relative_to(root).as_posix(), "sha256": hashlib.sha256(p.read_bytes()).hexdigest()}
            for p in files
            if p.is_relative_to(root)
        ]
        doc = {"version": __version__, "seed": self.seed, "files": entries}
        path = self.out / "manifest.json"
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path


def _date_cols(df, cols):
    df = df.copy()
    for c in cols:
        df[c] = pd.to_datetime(df[c]).dt.strftime("%Y-%m-%d")
    return df


# ---------------------------------------------------------------- subcommands


def cmd_validate(an: Analysis, w: Writer):
    ds = an.dataset
    print(
        f"ok: {len(ds.countries)} countries, {len(ds.daily)} daily rows, {len(ds.weekly)} weekly rows, "
        f"window {ds.analysis_start.date()}..{ds.analysis_end.date()}"
    )


def emit_waves(an: Analysis, w: Writer):
    p = an.partition
    phases = pd.DataFrame(
        [{"phase": k, "start": a, "end": b} for k, (a, b) in enumerate(p.phases, start=1)]
    )
    w.csv("phases.csv", _date_cols(phases, ["start", "end"]))
    frame = an.waveset.to_frame()
    w.csv("waves.csv", _date_cols(frame, ["start", "end", "begin_start", "begin_end", "peak_start", "peak_end"]))


def cmd_waves(an, w):
    emit_waves(an, w)


def emit_indices(an: Analysis, w: Writer):
    w.csv("indices.csv", an.indices.reset_index())
    w.csv("wave_records.csv", an.records)


def cmd_indices(an, w):
    emit_indices(an, w)


def cmd_corr(an: Analysis, w: Writer):
    x, y = an.variables(an.args.x, an.args.y)
    with stage("corr"):
        r = correlation(x, y, an.args.method, reps=an.args.reps, seed=an.args.seed)
    df = pd.DataFrame([{"estimate": r.estimate, "ci_low": r.ci_low, "ci_high": r.ci_high, "n": r.n}])
    sys.stdout.write(df.to_csv(index=False, float_format="%.4f", lineterminator="\n"))


def cmd_regress(an: Analysis, w: Writer):
    a = an.args
    if a.outcome != "age_adjusted_excess":
        raise DataError("only --outcome age_adjusted_excess is supported")
    if a.mask_index not in INDEX_NAMES:
        raise DataError(f"--mask-index must be one of {', '.join(INDEX_NAMES)}")
    with stage("regress"):
        fit = main_regression(an.dataset.covariates, an.indices[a.mask_index], a.mask_index)
    table = fit.table().reset_index()
    path = w.csv(f"regress_{a.mask_index}.csv", table)
    sys.stdout.write(path.read_text())


def emit_twfe(an: Analysis, w: Writer, lags, outcomes):
    with stage("twfe"):
        table = lag_sweep(an.dataset, lags, outcomes)
    w.csv("twfe_table.csv", table[["lag", "outcome", "beta", "ci_low", "ci_high", "n_obs"]])
    return table


def emit_residuals(an: Analysis, w: Writer, outdir: str, lags, outcome: str):
    """Per-country residual CSVs, a diagnostics table and one SVG grid per lag.

    A relative ``outdir`` is placed under the output directory.
    """
    sub = Path(outdir)
    frames, summaries = {}, []
    with stage("twfe"):
        for lag in lags:
            fit = twfe_fit(build_lagged_panel(an.dataset, outcome, lag))
            series, summary = residual_diagnostics(fit)
            summaries.append(summary.assign(lag=lag, outcome=outcome))
            for country, s in series.items():
                frames.setdefault(country, []).append(
                    pd.DataFrame({"week": s.index, "lag": lag, "residual": s.to_numpy()})
                )
            grid = svg.residual_grid_chart(series, f"TWFE residuals, {outcome} outcome, lag {lag}")
            w.text(sub / f"residual_grid_{outcome}_lag{lag}.svg", grid)
    for country, parts in sorted(frames.items()):
        w.csv(sub / f"residuals_{country}.csv", _date_cols(pd.concat(parts, ignore_index=True), ["week"]), "%.6f")
    w.csv(sub / "residual_diagnostics.csv", pd.concat(summaries, ignore_index=True))


def cmd_twfe(an: Analysis, w: Writer):
    a = an.args
    outcomes = ["weekly", "cumulative"] if a.outcome == "both" else [a.outcome]
    lags = parse_lags(a.lags)
    table = emit_twfe(an, w, lags, outcomes)
    sys.stdout.write(table.to_csv(index=False, float_format="%.4f", lineterminator="\n"))
    if a.residuals:
        res_outcome = "cumulative" if a.outcome == "both" else a.outcome
        emit_residuals(an, w, a.residuals, lags, res_outcome)


def falsify_specs(a):
    violation = SynthSpec(
        country_shift_sd=a.shift_sd,
        country_scale_sd=a.scale_sd,
        mask_reactivity=a.reactivity,
        mask_response=a.response,
        noise_sd=a.noise_sd,
        true_beta=0.0,
        seed=a.seed,
    )
    return violation


def cmd_falsify(an: Analysis, w: Writer):
    a = an.args
    with stage("falsify"):
        rep = spuriousness_experiment(falsify_specs(a), parse_lags(a.lags), a.reps)
    w.csv("falsify_report.csv", rep.table[["lag", "outcome", "mean_beta", "reject_rate"]])
    sys.stdout.write(rep.table.to_csv(index=False, float_format="%.4f", lineterminator="\n"))


def emit_plots(an: Analysis, w: Writer, what: str, x=None, y=None):
    with stage("plot"):
        if what in ("phases", "all"):
            w.text("phases.svg", svg.phases_chart(an.curve, an.partition))
        if what in ("waves", "all"):
            ds = an.dataset
            for country in ds.countries:
                chart = svg.waves_chart(
                    ds.dates,
                    ds.daily_series(country, "covid_deaths_pm"),
                    ds.daily_series(country, "mask_pct"),
                    an.waveset.for_country(country),
                    an.partition.boundaries,
                    f"{country}: waves, begin and peak deciles",
                )
                w.text(f"waves/waves_{country}.svg", chart)
        if what in ("scatter", "all"):
            pairs = [(x, y)] if what == "scatter" else [
                ("wave_mortality", "ratio_peak_begin"),
                ("total_mortality", "ratio_inwave_interwave"),
            ]
            for xv, yv in pairs:
                xs, ys = an.variables(xv, yv)
                w.text(f"scatter_{yv}_vs_{xv}.svg", svg.scatter_chart(xs, ys, xv, yv, f"{yv} against {xv}"))


def cmd_plot(an: Analysis, w: Writer):
    a = an.args
    if a.what == "scatter" and not (a.x and a.y):
        raise DataError("plot scatter needs --x and --y")
    emit_plots(an, w, a.what, a.x, a.y)


def index_correlations(an: Analysis, reps: int, seed: int) -> pd.DataFrame:
    rows = []
    for a, b in itertools.combinations(INDEX_NAMES, 2):
        r = correlation(an.indices[a], an.indices[b], "pearson", reps=reps, seed=seed)
        rows.append({"index_a": a, "index_b": b, "pearson": r.estimate, "ci_low": r.ci_low, "ci_high": r.ci_high, "n": r.n})
    return pd.DataFrame(rows)


def ratio_summary(an: Analysis, reps: int, seed: int) -> pd.DataFrame:
    rows = []
    pb = an.ratios["peak_begin"]
    ii = an.ratios["inwave_interwave"].dropna()
    rec = an.records.dropna(subset=["begin_avg", "peak_avg"])
    specs = [
        ("peak_begin", pb["ratio"], pb["mortality"], wilcoxon_one_sided(rec["peak_avg"], rec["begin_avg"], "greater")),
        (
            "inwave_interwave",
            ii["ratio"],
            ii["mortality"],
            wilcoxon_one_sided(an.indices["maskinwave"], an.indices["maskinterwave"], "greater"),
        ),
    ]
    for name, ratio, mort, wx in specs:
        q1, med, q3 = quartiles(ratio)
        r = correlation(ratio.to_numpy(), mort.to_numpy(), "spearman", reps=reps, seed=seed)
        rows.append(
            {
                "ratio": name,
                "n": len(ratio),
                "q1": q1,
                "median": med,
                "q3": q3,
                "spearman": r.estimate,
                "spearman_ci_low": r.ci_low,
                "spearman_ci_high": r.ci_high,
                "wilcoxon_stat": wx.statistic,
                "wilcoxon_p": wx.p_value,
            }
        )
    return pd.DataFrame(rows)


def regression_table(an: Analysis) -> pd.DataFrame:
    main = mask_index_regressions(an.dataset.covariates, an.indices).assign(model="main")
    fit_a, fit_b = reverse_causality_regressions(an.records, an.indices, an.dataset)
    extra = []
    for model, fit in (("peak_on_begin_mortality", fit_a), ("inwave_on_interwave_mortality", fit_b)):
        r = fit["mortality"]
        extra.append(
            {
                "index": "mortality",
                "std_coef": r["std_coef"],
                "std_ci_low": r["std_ci_low"],
                "std_ci_high": r["std_ci_high"],
                "p": r["p"],
                "model": model,
            }
        )
    out = pd.concat([main, pd.DataFrame(extra)], ignore_index=True)
    return out[["model", "index", "std_coef", "std_ci_low", "std_ci_high", "p"]]


def reproduce_all(an: Analysis, w: Writer):
    a = an.args
    with stage("ingest"):
        an.dataset
    emit_waves(an, w)
    emit_indices(an, w)
    lags = parse_lags(a.lags)
    emit_twfe(an, w, lags, ["weekly", "cumulative"])
    emit_residuals(an, w, "residuals", [lag for lag in lags if lag >= 1] or lags, "cumulative")
    with stage("corr"):
        w.csv("index_correlations.csv", index_correlations(an, a.reps, a.seed))
        w.csv("ratios.csv", ratio_summary(an, a.reps, a.seed), float_format="%.6g")
    with stage("regress"):
        w.csv("regressions.csv", regression_table(an), float_format="%.6g")
    emit_plots(an, w, "all")
    path = w.manifest()
    print(f"wrote {len(w.written)} files and {path}")


def cmd_reproduce_all(an, w):
    reproduce_all(an, w)


# ---------------------------------------------------------------- argument parsing


def _wave_flags(p):
    p.add_argument("--smoothing", type=int, default=7, help="centered rolling-mean width (days) before trough search")
    p.add_argument("--phases", type=int, default=3, help="number of phases")
    p.add_argument("--mass", type=float, default=0.99, help="mass fraction a wave must hold")
    p.add_argument("--boundaries", help="comma-separated first days of phases 2.., overriding trough detection")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("global")
    g.add_argument("--out", default="wavepanel_out", help="output directory")
    g.add_argument("--seed", type=int, default=DEFAULT_SEED, help="master seed (echoed in every CSV header)")
    g.add_argument("--data-dir", default=os.environ.get("WAVEPANEL_DATA"), help="directory with daily/weekly/covariates.csv")
    g.add_argument("--daily", help="daily.csv path")
    g.add_argument("--weekly", help="weekly.csv path")
    g.add_argument("--covariates", help="covariates.csv path")
    g.add_argument("--n-countries", type=int, default=24, help="required number of countries (0 disables)")
    g.add_argument("--drop-leading-zeros", action="store_true", help="treat leading zero mask values as missing")
    g.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="wavepanel", description=__doc__, parents=[common])
    parser.add_argument("--version", action="version", version=f"wavepanel {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("validate", parents=[common], help="load and validate the input files")

    p = sub.add_parser("waves", parents=[common], help="phase boundaries and per-country waves")
    _wave_flags(p)

    p = sub.add_parser("indices", parents=[common], help="five mask indices and per-wave records")
    _wave_flags(p)

    p = sub.add_parser("corr", parents=[common], help="correlation with basic bootstrap CI")
    _wave_flags(p)
    p.add_argument("--method", choices=["pearson", "spearman"], default="pearson")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--reps", type=int, default=DEFAULT_REPS)

    p = sub.add_parser("regress", parents=[common], help="main cross-country regression")
    _wave_flags(p)
    p.add_argument("--outcome", default="age_adjusted_excess")
    p.add_argument("--mask-index", default="maskall")

    p = sub.add_parser("twfe", parents=[common], help="two-way fixed effects lag sweep")
    p.add_argument("--outcome", choices=["weekly", "cumulative", "both"], default="both")
    p.add_argument("--lags", default="-1:4", help="range a:b or list a,b,c")
    p.add_argument("--residuals", help="directory for per-country residual CSVs and SVG grids")

    p = sub.add_parser("falsify", parents=[common], help="synthetic spurious-effect experiment")
    p.add_argument("--reps", type=int, default=500)
    p.add_argument("--shift-sd", type=float, default=3.0)
    p.add_argument("--scale-sd", type=float, default=0.5)
    p.add_argument("--reactivity", type=float, default=0.5)
    p.add_argument("--response", choices=["current", "cumulative"], default="cumulative")
    p.add_argument("--noise-sd", type=float, default=10.0)
    p.add_argument("--lags", default="-1:4")

    p = sub.add_parser("plot", parents=[common], help="SVG charts")
    _wave_flags(p)
    p.add_argument("what", choices=["waves", "phases", "scatter"])
    p.add_argument("--x")
    p.add_argument("--y")

    p = sub.add_parser("reproduce-all", parents=[common], help="every table and figure plus manifest.json")
    _wave_flags(p)
    p.add_argument("--lags", default="-1:4")
    p.add_argument("--reps", type=int, default=DEFAULT_REPS)
    return parser


COMMANDS = {
    "validate": cmd_validate,
    "waves": cmd_waves,
    "indices": cmd_indices,
    "corr": cmd_corr,
    "regress": cmd_regress,
    "twfe": cmd_twfe,
    "falsify": cmd_falsify,
    "plot": cmd_plot,
    "reproduce-all": cmd_reproduce_all,
}


def _glue_negative_values(argv):
    # argparse reads "-1:4" as an option; bind it to its flag explicitly
    out = []
    it = iter(argv)
    for tok in it:
        if tok in ("--lags", "--boundaries"):
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    argv = _glue_negative_values(list(sys.argv[1:] if argv is None else argv))
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.n_countries == 0:
        args.n_countries = None
    an = Analysis(args)
    try:
        writer = Writer(Path(args.out), args.seed)
        COMMANDS[args.command](an, writer)
    except DataError as e:
        print(f"wavepanel: input error: {e}", file=sys.stderr)
        return 2
    except StageError as e:
        if isinstance(e.exc, DataError):
            print(f"wavepanel: input error in stage '{e.stage}': {e.exc}", file=sys.stderr)
            return 2
        print(f"wavepanel: {e}", file=sys.stderr)
        return 1
    except (ValueError, RuntimeError, KeyError) as e:
        print(f"wavepanel: analysis error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
