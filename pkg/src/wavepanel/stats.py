"""Correlations, basic bootstrap intervals, paired Wilcoxon test, quartiles."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import stats as sps

DEFAULT_SEED = 20250101
DEFAULT_REPS = 10000


class DegenerateError(ValueError):
    pass


class BootstrapError(RuntimeError):
    pass


@dataclass(frozen=True)
class CorrelationResult:
    estimate: float
    ci_low: float
    ci_high: float
    method: str
    n: int
    bootstrap_reps: int
    seed: int


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float  # sum of ranks of positive differences x - y
    p_value: float
    n_effective: int
    alternative: str
    method: str  # "exact" or "normal"


def _pair(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    if len(x) < 3:
        raise ValueError("need at least 3 pairs")
    return x, y


def pearson(x, y) -> float:
    x, y = _pair(x, y)
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = dx @ dx
    syy = dy @ dy
    if sxx == 0 or syy == 0:
        raise DegenerateError("degenerate variance")
    r = (dx @ dy) / np.sqrt(sxx * syy)
    return float(np.clip(r, -1.0, 1.0))


def spearman(x, y) -> float:
    x, y = _pair(x, y)
    return pearson(sps.rankdata(x), sps.rankdata(y))


def _stream(seed: int, k: int) -> np.random.Generator:
    # resample k owns counter block k of the Philox stream keyed by seed
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, k, 0, 0]))


def bootstrap_replicates(
    data: Sequence[np.ndarray] | np.ndarray,
    statistic: Callable[..., float],
    reps: int = DEFAULT_REPS,
    seed: int = DEFAULT_SEED,
) -> np.ndarray:
    """Statistic on ``reps`` row resamples of ``data``.

    ``data`` is one array or a sequence of equal-length arrays resampled
    jointly (paired). Resamples on which the statistic raises ``ValueError``
    or returns a non-finite value are redrawn from the same stream; more than
    ``10 * reps`` draws in total is an error.
    """
    arrays = [np.asarray(data, dtype=float)] if isinstance(data, np.ndarray) and np.ndim(data) == 1 else [
        np.asarray(a, dtype=float) for a in data
    ]
    n = len(arrays[0])
    if any(len(a) != n for a in arrays):
        raise ValueError("paired arrays must have equal length")
    budget = 10 * reps
    draws = 0
    out = np.empty(reps)
    for k in range(reps):
        rng = _stream(seed, k)
        while True:
            draws += 1
            if draws > budget:
                raise BootstrapError("bootstrap failed to converge: too many undefined resamples")
            idx = rng.integers(0, n, size=n)
            try:
                with np.errstate(all="ignore"):
                    v = statistic(*(a[idx] for a in arrays))
            except (ValueError, ZeroDivisionError, FloatingPointError):
                continue
            if np.isfinite(v):
                out[k] = v
                break
    return out


def basic_interval(estimate: float, replicates: np.ndarray, alpha: float = 0.05) -> tuple[float, float]:
    q_lo, q_hi = np.quantile(replicates, [alpha / 2, 1 - alpha / 2])
    return float(2 * estimate - q_hi), float(2 * estimate - q_lo)


def bootstrap_ci(
    data,
    statistic: Callable[..., float],
    reps: int = DEFAULT_REPS,
    alpha: float = 0.05,
    seed: int = DEFAULT_SEED,
    min_reps: int = 1000,
) -> tuple[float, float]:
    """Basic (reverse-percentile) bootstrap interval for ``statistic``."""
    if reps < min_reps:
        raise ValueError(f"reps must be at least {min_reps}")
    if not 0 < alpha < 1:
        raise ValueError("alpha must be in (0, 1)")
    arrays = [np.asarray(data, dtype=float)] if isinstance(data, np.ndarray) and np.ndim(data) == 1 else [
        np.asarray(a, dtype=float) for a in data
    ]
    estimate = statistic(*arrays)
    return basic_interval(estimate, bootstrap_replicates(arrays, statistic, reps, seed), alpha)


def correlation(x, y, method: str = "pearson", reps: int = DEFAULT_REPS, alpha: float = 0.05, seed: int = DEFAULT_SEED):
    fn = {"pearson": pearson, "spearman": spearman}[method]
    x, y = _pair(x, y)
    est = fn(x, y)
    lo, hi = bootstrap_ci((x, y), fn, reps=reps, alpha=alpha, seed=seed)
    return CorrelationResult(est, lo, hi, method, len(x), reps, seed)


def _signed_rank_counts(doubled_ranks: np.ndarray) -> np.ndarray:
    """Number of sign assignments giving each value of 2 * W+ (index = 2 * W+)."""
    total = int(doubled_ranks.sum())
    counts = np.zeros(total + 1, dtype=object)
    counts[0] = 1
    for r in doubled_ranks.astype(int):
        counts[r:] = counts[r:] + counts[: total + 1 - r]
    return counts


def wilcoxon_one_sided(x, y, alternative: str = "greater", exact_max_n: int = 25) -> WilcoxonResult:
    """One-sided paired signed-rank test of ``x - y``.

    Zero differences are dropped and tied absolute differences get average
    ranks. Up to ``exact_max_n`` nonzero differences the p-value comes from the
    exact permutation distribution of the observed ranks (which handles ties
    exactly); beyond that a normal approximation with tie and continuity
    corrections is used.
    """
    if alternative not in ("greater", "less"):
        raise ValueError("alternative must be 'greater' or 'less'")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError("length mismatch")
    d = x - y
    d = d[d != 0]
    n = len(d)
    if n == 0:
        raise DegenerateError("no nonzero differences")
    ranks = sps.rankdata(np.abs(d))
    w_plus = float(ranks[d > 0].sum())

    if n <= exact_max_n:
        doubled = np.rint(2 * ranks).astype(int)
        counts = _signed_rank_counts(doubled)
        w2 = int(round(2 * w_plus))
        hits = counts[w2:].sum() if alternative == "greater" else counts[: w2 + 1].sum()
        p = float(hits / (2**n))
        return WilcoxonResult(w_plus, p, n, alternative, "exact")

    mean = n * (n + 1) / 4
    _, t = np.unique(ranks, return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24 - (t**3 - t).sum() / 48
    sd = np.sqrt(var)
    if alternative == "greater":
        p = sps.norm.sf((w_plus - mean - 0.5) / sd)
    else:
        p = sps.norm.cdf((w_plus - mean + 0.5) / sd)
    p = float(np.clip(p, np.finfo(float).tiny, 1.0))
    return WilcoxonResult(w_plus, p, n, alternative, "normal")


def quartiles(v) -> tuple[float, float, float]:
    """(Q1, median, Q3) with linear interpolation between order statistics."""
    v = np.asarray(v, dtype=float)
    if v.size == 0:
        raise ValueError("empty vector")
    q1, q2, q3 = np.quantile(v, [0.25, 0.5, 0.75])
    return float(q1), float(q2), float(q3)
