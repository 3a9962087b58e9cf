"""Nonparametric comparison of paired cross-validation accuracies."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2, rankdata

SUPERIOR, INFERIOR, TIED = "superior", "inferior", "tied"
GLYPHS = {SUPERIOR: "▲", INFERIOR: "▼", TIED: "•"}

EXACT_MAX_N = 12


@dataclass(frozen=True)
class FriedmanResult:
    statistic: float
    p_value: float


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float      # W = min(T+, T-)
    p_value: float        # two-sided
    n_effective: int
    exact: bool
    all_zero: bool = False


def friedman(acc) -> FriedmanResult:
    """Friedman test over an ``(n_experiments, k_methods)`` matrix.

    Ranks within rows (average ranks for ties) and applies the tie
    correction. A matrix tied in every row gives statistic 0 and p 1.
    """
    acc = np.asarray(acc, dtype=float)
    if acc.ndim != 2 or acc.shape[0] < 2 or acc.shape[1] < 2:
        raise ValueError(f"need at least a 2x2 matrix, got shape {acc.shape}")
    n, k = acc.shape
    ranks = np.vstack([rankdata(row) for row in acc])
    rank_sums = ranks.sum(axis=0)
    stat = 12.0 / (n * k * (k + 1)) * np.sum(rank_sums ** 2) - 3.0 * n * (k + 1)
    ties = 0.0
    for row in acc:
        _, t = np.unique(row, return_counts=True)
        ties += np.sum(t ** 3 - t)
    correction = 1.0 - ties / (n * k * (k * k - 1))
    if correction <= 1e-12:
        return FriedmanResult(0.0, 1.0)
    stat = max(stat / correction, 0.0)
    return FriedmanResult(float(stat), float(chi2.sf(stat, k - 1)))


def _exact_two_sided(ranks: np.ndarray, w: float) -> float:
    """P(min(T+, T-) <= w) under random signs, via rank-sum counting.

    Ranks are multiples of 0.5, so they are doubled to integers.
    """
    r2 = np.rint(2 * ranks).astype(int)
    total = int(r2.sum())
    counts = np.zeros(total + 1, dtype=np.int64)
    counts[0] = 1
    for r in r2:  # r >= 2 since ranks start at 1
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[:-r]
        counts = counts + shifted
    t = np.arange(total + 1)
    hit = np.minimum(t, total - t) <= int(round(2 * w))
    return float(counts[hit].sum() / 2.0 ** len(r2))


def wilcoxon_signed_rank(a, b) -> WilcoxonResult:
    """Two-sided Wilcoxon signed-rank test on paired samples.

    Zero differences are dropped. Exact p for up to 12 nonzero pairs,
    otherwise the tie-corrected normal approximation with continuity
    correction.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1 or len(a) == 0:
        raise ValueError("wilcoxon needs two equal-length, non-empty 1-D samples")
    d = a - b
    d = d[d != 0]
    n = len(d)
    if n == 0:
        return WilcoxonResult(0.0, 1.0, 0, True, all_zero=True)
    ranks = rankdata(np.abs(d))
    t_plus = float(ranks[d > 0].sum())
    t_minus = float(ranks[d < 0].sum())
    w = min(t_plus, t_minus)
    if n <= EXACT_MAX_N:
        return WilcoxonResult(w, min(1.0, _exact_two_sided(ranks, w)), n, True)
    mean = n * (n + 1) / 4.0
    _, t = np.unique(np.abs(d), return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24.0 - np.sum(t ** 3 - t) / 48.0
    z = max(abs(w - mean) - 0.5, 0.0) / math.sqrt(var)
    return WilcoxonResult(w, min(1.0, math.erfc(z / math.sqrt(2.0))), n, False)


def bonferroni(p_values, m: int | None = None) -> np.ndarray:
    p = np.asarray(p_values, dtype=float)
    m = p.size if m is None else m
    if m < 1:
        raise ValueError("m must be >= 1")
    return np.minimum(1.0, p * m)


@dataclass(frozen=True)
class Verdict:
    baseline: str
    verdict: str
    mean_difference: float
    p_value: float
    p_adjusted: float

    @property
    def glyph(self) -> str:
        return GLYPHS[self.verdict]


@dataclass(frozen=True)
class Comparison:
    friedman: FriedmanResult
    verdicts: dict


def verdicts(reference_acc, baseline_accs: dict, alpha: float = 0.05) -> Comparison:
    """Compare a reference method against each baseline on paired accuracies.

    A baseline is tied with the reference unless both the Friedman test over
    all methods and the Bonferroni-adjusted Wilcoxon test reject at
    ``alpha``; otherwise the sign of the mean paired difference decides.
    """
    ref = np.asarray(reference_acc, dtype=float)
    names = list(baseline_accs)
    if not names:
        raise ValueError("no baselines to compare against")
    matrix = np.column_stack([ref] + [np.asarray(baseline_accs[k], dtype=float) for k in names])
    fr = friedman(matrix)
    tests = [wilcoxon_signed_rank(ref, matrix[:, i + 1]) for i in range(len(names))]
    adjusted = bonferroni([t.p_value for t in tests])
    out = {}
    for i, name in enumerate(names):
        diff = float(np.mean(ref - matrix[:, i + 1]))
        if fr.p_value >= alpha or adjusted[i] >= alpha or diff == 0:
            v = TIED
        else:
            v = SUPERIOR if diff > 0 else INFERIOR
        out[name] = Verdict(name, v, diff, tests[i].p_value, float(adjusted[i]))
    return Comparison(fr, out)
