"""Two-way fixed-effects regression of lagged outcomes on weekly mask usage.

Model: ``Y[i, t+d] = a_i + b_t + beta * M[i, t] + e[i, t]`` with country and
week effects swept out by alternating demeaning, standard errors clustered by
country, and t intervals with ``G - 1`` degrees of freedom.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy import stats as sps

from .ingest import PanelDataset

OUTCOME_COLUMNS = {"weekly": "excess_weekly", "cumulative": "excess_cumulative"}
MAX_LAG = 8


class TwfeError(ValueError):
    pass


@dataclass(frozen=True)
class LaggedPanel:
    """Rows ``(country, week, exposure, outcome)``; ``week`` is the exposure week."""

    frame: pd.DataFrame
    lag: int
    outcome_kind: str

    def __len__(self):
        return len(self.frame)


@dataclass(frozen=True)
class TwfeFit:
    beta: float
    se: float
    ci: tuple[float, float]
    n_obs: int
    n_countries: int
    n_weeks: int
    residuals: pd.DataFrame  # country, week, residual
    country_effects: pd.Series
    week_effects: pd.Series
    lag: int = 0
    outcome_kind: str = ""

    @property
    def excludes_zero(self) -> bool:
        return self.ci[0] > 0 or self.ci[1] < 0


def build_lagged_panel(dataset: PanelDataset, outcome_kind: str, lag: int) -> LaggedPanel:
    """Pair each week's mask average with the outcome ``lag`` weeks later.

    Rows are kept only when both values are observed; negative lags put the
    outcome before the exposure.
    """
    if outcome_kind not in OUTCOME_COLUMNS:
        raise TwfeError(f"outcome_kind must be one of {sorted(OUTCOME_COLUMNS)}")
    if not -MAX_LAG <= lag <= MAX_LAG:
        raise TwfeError(f"lag must be in [-{MAX_LAG}, {MAX_LAG}]")
    w = dataset.weekly
    if w.empty or w["mask_pct_weekly"].isna().all():
        raise TwfeError("weekly mask usage missing; run weekly_mask_average first")
    col = OUTCOME_COLUMNS[outcome_kind]
    exposure = w[["country", "week_start", "mask_pct_weekly"]].rename(
        columns={"week_start": "week", "mask_pct_weekly": "exposure"}
    )
    outcome = w[["country", "week_start", col]].rename(columns={col: "outcome"})
    outcome["week"] = outcome.pop("week_start") - pd.Timedelta(weeks=lag)
    frame = exposure.merge(outcome, on=["country", "week"], how="inner").dropna()
    frame = frame[["country", "week", "exposure", "outcome"]].sort_values(["country", "week"]).reset_index(drop=True)
    if frame.empty:
        raise TwfeError(f"no usable rows for outcome {outcome_kind} at lag {lag}")
    return LaggedPanel(frame, lag, outcome_kind)


def _group_mean(v, codes, n):
    return np.bincount(codes, weights=v, minlength=n) / np.bincount(codes, minlength=n)


def demean_two_way(v, g, t, G, T, tol=1e-10, max_iter=10_000):
    """Residual of ``v`` after projecting out country and week dummies (alternating projections)."""
    r = np.asarray(v, dtype=float).copy()
    scale = max(1.0, np.abs(r).max())
    for _ in range(max_iter):
        r -= _group_mean(r, g, G)[g]
        step = _group_mean(r, t, T)
        r -= step[t]
        if np.abs(step).max() <= tol * scale:
            return r
    raise TwfeError("alternating demeaning did not converge")


def two_way_effects(r, g, t, G, T, tol=1e-12, max_iter=10_000):
    """Country and week effects fitting ``r`` additively; country effects sum to zero."""
    a = np.zeros(G)
    b = np.zeros(T)
    scale = max(1.0, np.abs(r).max())
    for _ in range(max_iter):
        a_new = _group_mean(r - b[t], g, G)
        b_new = _group_mean(r - a_new[g], t, T)
        done = max(np.abs(a_new - a).max(), np.abs(b_new - b).max()) <= tol * scale
        a, b = a_new, b_new
        if done:
            break
    m = a.mean()
    return a - m, b + m


def twfe_core(g, t, x, y, G, T, alpha=0.05, tol=1e-10):
    """beta, clustered se, CI and demeaned residuals from integer-coded arrays."""
    N = len(y)
    xd = demean_two_way(x, g, t, G, T, tol)
    yd = demean_two_way(y, g, t, G, T, tol)
    sxx = xd @ xd
    if sxx <= 1e-12 * max(1.0, x @ x):
        raise TwfeError("exposure absorbed by fixed effects")
    beta = (xd @ yd) / sxx
    e = yd - beta * xd
    score = np.bincount(g, weights=xd * e, minlength=G)
    n_clusters = int((np.bincount(g, minlength=G) > 0).sum())
    if n_clusters < 2:
        raise TwfeError("need at least 2 countries")
    # country effects are nested in the clusters and not counted in K
    K = 1 + (T - 1)
    c = n_clusters / (n_clusters - 1) * (N - 1) / (N - K)
    se = float(np.sqrt(c * (score @ score)) / sxx)
    q = sps.t.ppf(1 - alpha / 2, n_clusters - 1)
    return float(beta), se, (float(beta - q * se), float(beta + q * se)), e


def _codes(values):
    cats = pd.Index(sorted(pd.unique(values)))
    return cats, cats.get_indexer(values)


def twfe_fit(panel: LaggedPanel, alpha: float = 0.05, tol: float = 1e-10) -> TwfeFit:
    f = panel.frame
    countries, g = _codes(f["country"].to_numpy())
    weeks, t = _codes(f["week"].to_numpy())
    G, T = len(countries), len(weeks)
    if G < 2 or T < 2:
        raise TwfeError("need at least 2 countries and 2 weeks")
    x = f["exposure"].to_numpy(dtype=float)
    y = f["outcome"].to_numpy(dtype=float)
    beta, se, ci, _ = twfe_core(g, t, x, y, G, T, alpha, tol)

    a, b = two_way_effects(y - beta * x, g, t, G, T)
    resid = y - (a[g] + b[t] + beta * x)
    residuals = pd.DataFrame({"country": f["country"].to_numpy(), "week": f["week"].to_numpy(), "residual": resid})
    return TwfeFit(
        beta=beta,
        se=se,
        ci=ci,
        n_obs=len(y),
        n_countries=G,
        n_weeks=T,
        residuals=residuals,
        country_effects=pd.Series(a, index=countries, name="country_effect"),
        week_effects=pd.Series(b, index=weeks, name="week_effect"),
        lag=panel.lag,
        outcome_kind=panel.outcome_kind,
    )


def lag_sweep(dataset: PanelDataset, lags, outcomes=("weekly", "cumulative"), alpha: float = 0.05) -> pd.DataFrame:
    lags = list(lags)
    if not lags:
        raise TwfeError("lags must be nonempty")
    rows = []
    for outcome in outcomes:
        for lag in lags:
            fit = twfe_fit(build_lagged_panel(dataset, outcome, lag), alpha)
            rows.append(
                {
                    "lag": lag,
                    "outcome": outcome,
                    "beta": fit.beta,
                    "se": fit.se,
                    "ci_low": fit.ci[0],
                    "ci_high": fit.ci[1],
                    "n_obs": fit.n_obs,
                }
            )
    return pd.DataFrame(rows)


def format_sweep(table: pd.DataFrame) -> pd.DataFrame:
    """Lag x outcome grid of ``beta [low; high]`` strings, 4 decimals."""
    cell = table.apply(lambda r: f"{r['beta']:.4f} [{r['ci_low']:.4f}; {r['ci_high']:.4f}]", axis=1)
    return table.assign(cell=cell).pivot(index="lag", columns="outcome", values="cell")


def _lag1_autocorr(e):
    if len(e) < 3:
        return float("nan")
    d = e - e.mean()
    den = d @ d
    if den <= 1e-24 * max(1.0, len(e)):
        return float("nan")
    return float((d[:-1] @ d[1:]) / den)


def runs_test(e) -> tuple[float, float]:
    """Wald-Wolfowitz runs test on residual signs; returns (z, two-sided p)."""
    s = np.sign(e)
    s = s[s != 0]
    n1 = int((s > 0).sum())
    n2 = int((s < 0).sum())
    n = n1 + n2
    if n1 == 0 or n2 == 0 or n < 3:
        return float("nan"), float("nan")
    runs = 1 + int((s[1:] != s[:-1]).sum())
    mu = 2 * n1 * n2 / n + 1
    var = 2 * n1 * n2 * (2 * n1 * n2 - n) / (n**2 * (n - 1))
    z = (runs - mu) / np.sqrt(var)
    return float(z), float(2 * sps.norm.sf(abs(z)))


def residual_diagnostics(fit: TwfeFit) -> tuple[dict[str, pd.Series], pd.DataFrame]:
    """Per-country residual series plus lag-1 autocorrelation and runs-test summary."""
    series = {}
    rows = []
    for country, grp in fit.residuals.groupby("country", sort=True):
        s = grp.sort_values("week").set_index("week")["residual"]
        series[country] = s
        e = s.to_numpy()
        z, p = runs_test(e)
        rows.append({"country": country, "n": len(e), "lag1_autocorr": _lag1_autocorr(e), "runs_z": z, "runs_p": p})
    return series, pd.DataFrame(rows)
