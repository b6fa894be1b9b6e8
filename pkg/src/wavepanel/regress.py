"""Cross-sectional OLS with standardized coefficients and delta-method intervals."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy import linalg
from scipy import stats as sps

from .indices import INDEX_NAMES, total_deaths_pm


class RegressionError(ValueError):
    pass


@dataclass(frozen=True)
class RegressionFit:
    """OLS results. Index 0 of every coefficient array is the intercept.

    ``std_coef`` and ``std_ci`` are NaN for the intercept.
    """

    names: tuple[str, ...]
    coef: np.ndarray
    se: np.ndarray
    p: np.ndarray
    std_coef: np.ndarray
    std_se: np.ndarray
    std_ci: np.ndarray
    n: int
    r_squared: float
    residuals: np.ndarray
    df_resid: int

    def table(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "coef": self.coef,
                "se": self.se,
                "p": self.p,
                "std_coef": self.std_coef,
                "std_ci_low": self.std_ci[:, 0],
                "std_ci_high": self.std_ci[:, 1],
            },
            index=pd.Index(self.names, name="name"),
        )

    def __getitem__(self, name: str) -> pd.Series:
        return self.table().loc[name]


def _as_design(X):
    if isinstance(X, pd.DataFrame):
        return [str(c) for c in X.columns], X.to_numpy(dtype=float)
    if isinstance(X, dict):
        names = list(X)
        return names, np.column_stack([np.asarray(X[k], dtype=float) for k in names])
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    return [f"x{j + 1}" for j in range(X.shape[1])], X


def _check_rank(Z, names):
    _, R, piv = linalg.qr(Z, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = diag.max() * max(Z.shape) * np.finfo(float).eps
    rank = int((diag > tol).sum())
    if rank < Z.shape[1]:
        bad = [names[j] for j in piv[rank:]]
        raise RegressionError(f"design is rank deficient; collinear column(s): {', '.join(bad)}")


def standardized_jacobian(S: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Standardized slopes and their derivatives w.r.t. the unique entries of ``S``.

    ``S`` is the covariance matrix of ``(y, x_1..x_k)``. Returns ``(beta_std,
    J)`` where ``J[j, m]`` is the derivative of slope j with respect to the
    m-th entry of ``S`` in upper-triangular row-major order.
    """
    p = S.shape[0]
    Sxx = S[1:, 1:]
    sxy = S[1:, 0]
    syy = S[0, 0]
    b = np.linalg.solve(Sxx, sxy)
    sx = np.sqrt(np.diag(Sxx))
    sy = np.sqrt(syy)
    beta = b * sx / sy

    pairs = [(a, c) for a in range(p) for c in range(a, p)]
    J = np.zeros((p - 1, len(pairs)))
    for m, (a, c) in enumerate(pairs):
        E = np.zeros((p, p))
        E[a, c] = E[c, a] = 1.0
        dSxx = E[1:, 1:]
        dsxy = E[1:, 0]
        dsyy = E[0, 0]
        db = np.linalg.solve(Sxx, dsxy - dSxx @ b)
        J[:, m] = db * sx / sy + b * np.diag(dSxx) / (2 * sx * sy) - b * sx * dsyy / (2 * sy**3)
    return beta, J


def normal_theory_acov(S: np.ndarray, n: int) -> np.ndarray:
    """Asymptotic covariance of the unique entries of a sample covariance under normality."""
    p = S.shape[0]
    pairs = [(a, c) for a in range(p) for c in range(a, p)]
    G = np.empty((len(pairs), len(pairs)))
    for u, (i, j) in enumerate(pairs):
        for v, (k, l) in enumerate(pairs):
            G[u, v] = S[i, k] * S[j, l] + S[i, l] * S[j, k]
    return G / n


def ols_fit(y, X, standardize: bool = True, alpha: float = 0.05) -> RegressionFit:
    """OLS with intercept; classical SEs and two-sided t p-values on raw slopes.

    Standardized slopes are ``b * sd(x) / sd(y)``; their intervals are Wald
    intervals with normal quantiles whose SEs come from the delta method
    applied to the sample covariance matrix under multivariate normality.
    """
    names, Xm = _as_design(X)
    y = np.asarray(y, dtype=float)
    n, k = Xm.shape
    if len(y) != n:
        raise RegressionError("y and X have different lengths")
    if n <= k + 1:
        raise RegressionError(f"need more than {k + 1} observations, got {n}")
    if not (np.isfinite(y).all() and np.isfinite(Xm).all()):
        raise RegressionError("non-finite values in regression data")
    Z = np.column_stack([np.ones(n), Xm])
    all_names = ["intercept", *names]
    _check_rank(Z, all_names)

    Q, R = np.linalg.qr(Z)
    coef = linalg.solve_triangular(R, Q.T @ y)
    resid = y - Z @ coef
    df = n - (k + 1)
    s2 = resid @ resid / df
    Rinv = linalg.solve_triangular(R, np.eye(k + 1))
    cov = s2 * (Rinv @ Rinv.T)
    se = np.sqrt(np.diag(cov))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = coef / se
    p = 2 * sps.t.sf(np.abs(t), df)
    p = np.where(se == 0, np.where(coef == 0, 1.0, 0.0), p)
    yc = y - y.mean()
    r2 = 1 - (resid @ resid) / (yc @ yc) if yc @ yc > 0 else float("nan")

    std_coef = np.full(k + 1, np.nan)
    std_se = np.full(k + 1, np.nan)
    std_ci = np.full((k + 1, 2), np.nan)
    if standardize:
        S = np.cov(np.column_stack([y, Xm]), rowvar=False)
        beta, J = standardized_jacobian(S)
        acov = J @ normal_theory_acov(S, n) @ J.T
        bse = np.sqrt(np.clip(np.diag(acov), 0, None))
        z = sps.norm.ppf(1 - alpha / 2)
        std_coef[1:] = beta
        std_se[1:] = bse
        std_ci[1:, 0] = beta - z * bse
        std_ci[1:, 1] = beta + z * bse
    return RegressionFit(tuple(all_names), coef, se, p, std_coef, std_se, std_ci, n, float(r2), resid, df)


def health_pc(covariates: pd.DataFrame) -> pd.Series:
    """First principal component of z-scored cardiovascular death rate and life expectancy.

    Oriented so that higher scores mean a higher cardiovascular death rate.
    """
    cols = ["cardio_death_rate", "life_expectancy"]
    V = covariates[cols].to_numpy(dtype=float)
    sd = V.std(axis=0, ddof=1)
    if np.any(sd == 0):
        raise RegressionError("constant variable in health principal component")
    Z = (V - V.mean(axis=0)) / sd
    C = np.corrcoef(Z, rowvar=False)
    w, vecs = np.linalg.eigh(C)
    v = vecs[:, np.argmax(w)]
    if v[0] < 0:
        v = -v
    return pd.Series(Z @ v, index=covariates.index, name="health_pc")


def main_regression(covariates: pd.DataFrame, mask: pd.Series, mask_name: str = "mask") -> RegressionFit:
    """Age-adjusted excess mortality on vaccination, one mask index, HDI and the health PC."""
    mask = mask.reindex(covariates.index)
    X = pd.DataFrame(
        {
            "vaccination_rate": covariates["vaccination_rate"],
            mask_name: mask,
            "hdi": covariates["hdi"],
            "health_pc": health_pc(covariates),
        }
    )
    return ols_fit(covariates["age_adjusted_excess"].to_numpy(), X)


def mask_index_regressions(covariates: pd.DataFrame, indices: pd.DataFrame) -> pd.DataFrame:
    """One main regression per mask index; the mask row of each fit."""
    rows = []
    for name in INDEX_NAMES:
        fit = main_regression(covariates, indices[name], name)
        r = fit[name]
        rows.append(
            {
                "index": name,
                "std_coef": r["std_coef"],
                "std_ci_low": r["std_ci_low"],
                "std_ci_high": r["std_ci_high"],
                "p": r["p"],
            }
        )
    return pd.DataFrame(rows)


def reverse_causality_regressions(records: pd.DataFrame, indices: pd.DataFrame, dataset) -> tuple[RegressionFit, RegressionFit]:
    """(per wave) peak ~ begin + wave mortality; (per country) inwave ~ interwave + total mortality."""
    r = records.dropna(subset=["begin_avg", "peak_avg", "wave_deaths_pm_mean"])
    fit_a = ols_fit(
        r["peak_avg"].to_numpy(),
        pd.DataFrame({"maskbeginwave": r["begin_avg"].to_numpy(), "mortality": r["wave_deaths_pm_mean"].to_numpy()}),
    )
    total = total_deaths_pm(dataset).reindex(indices.index)
    fit_b = ols_fit(
        indices["maskinwave"].to_numpy(),
        pd.DataFrame({"maskinterwave": indices["maskinterwave"].to_numpy(), "mortality": total.to_numpy()}),
    )
    return fit_a, fit_b
