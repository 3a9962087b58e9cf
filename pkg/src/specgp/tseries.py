"""Monthly time-series preprocessing, DTW 1-NN classification and 5x2 cross-validation."""
from __future__ import annotations

import datetime as dt
import logging
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numba
import numpy as np

from .classify import ConfusionSummary, confusion
from .expr import ExprTree, evaluate_batch

logger = logging.getLogger(__name__)


class GapError(ValueError):
    """A series has too many missing months to be interpolated reliably."""


@dataclass
class LabeledSeries:
    """Monthly series of one area.

    ``months`` are integer month indices (``year * 12 + month - 1``);
    ``values`` is ``(T, n_bands)`` for raw series or ``(T,)`` once projected.
    """

    area_id: str
    label: int
    months: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.months = np.asarray(self.months, dtype=int)
        self.values = np.asarray(self.values, dtype=float)
        if len(self.months) != len(self.values):
            raise ValueError(f"{self.area_id}: {len(self.months)} months but "
                             f"{len(self.values)} values")
        if np.any(np.diff(self.months) <= 0):
            raise ValueError(f"{self.area_id}: months must be strictly increasing")


def month_index(when) -> int:
    """Month index of a date, datetime, ``"YYYY-MM[-DD]"`` string or integer."""
    if isinstance(when, (int, np.integer)):
        return int(when)
    if isinstance(when, str):
        parts = when.strip().split("-")
        if len(parts) < 2:
            raise ValueError(f"bad month {when!r}, expected YYYY-MM")
        year, month = int(parts[0]), int(parts[1])
    elif isinstance(when, (dt.date, dt.datetime)):
        year, month = when.year, when.month
    else:
        raise TypeError(f"cannot interpret {when!r} as a month")
    if not 1 <= month <= 12:
        raise ValueError(f"bad month {when!r}")
    return year * 12 + month - 1


def month_label(index: int) -> str:
    year, m = divmod(int(index), 12)
    return f"{year:04d}-{m + 1:02d}"


def monthly_composite(observations, start=None, end=None) -> tuple[np.ndarray, np.ndarray]:
    """Average observations per calendar month.

    ``observations`` is an iterable of ``(date, band_vector)``. Returns
    ``(months, values)`` covering every month from ``start`` (default: first
    observed) to ``end`` (default: last observed); months without
    observations are NaN rows.
    """
    obs = list(observations)
    if not obs:
        raise ValueError("no observations to composite")
    idx = np.array([month_index(d) for d, _ in obs])
    vals = np.array([np.atleast_1d(np.asarray(v, dtype=float)) for _, v in obs])
    lo = idx.min() if start is None else month_index(start)
    hi = idx.max() if end is None else month_index(end)
    months = np.arange(lo, hi + 1)
    keep = (idx >= lo) & (idx <= hi)
    pos = idx[keep] - lo
    sums = np.zeros((len(months), vals.shape[1]))
    counts = np.zeros(len(months))
    np.add.at(sums, pos, vals[keep])
    np.add.at(counts, pos, 1)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = sums / counts[:, None]
    out[counts == 0] = np.nan
    return months, out


def interpolate_gaps(values, max_missing_fraction: float = 0.5) -> np.ndarray:
    """Fill NaN gaps: linear inside, nearest present value at the ends.

    Works per column for ``(T, n_bands)`` input. Raises :class:`GapError`
    when any column's missing fraction exceeds ``max_missing_fraction`` or
    has no present value at all.
    """
    values = np.asarray(values, dtype=float)
    flat = values.ndim == 1
    cols = values[:, None] if flat else values
    out = cols.copy()
    t = np.arange(len(cols))
    for j in range(cols.shape[1]):
        col = cols[:, j]
        present = np.isfinite(col)
        if not present.any():
            raise GapError("series has no observed values")
        missing = 1.0 - present.mean()
        if missing > max_missing_fraction:
            raise GapError(f"{missing:.1%} of months missing "
                           f"(limit {max_missing_fraction:.1%})")
        out[:, j] = np.interp(t, t[present], col[present])
    return out[:, 0] if flat else out


def preprocess(observations, area_id: str, label: int, start=None, end=None,
               max_missing_fraction: float = 0.5) -> LabeledSeries:
    months, vals = monthly_composite(observations, start, end)
    try:
        filled = interpolate_gaps(vals, max_missing_fraction)
    except GapError as exc:
        raise GapError(f"area {area_id}: {exc}") from None
    return LabeledSeries(area_id, label, months, filled)


# -- DTW ----------------------------------------------------------------------

@numba.njit(cache=True)
def _dtw(x, y):
    n, m = len(x), len(y)
    prev = np.full(m + 1, np.inf)
    cur = np.full(m + 1, np.inf)
    prev[0] = 0.0
    for i in range(1, n + 1):
        cur[0] = np.inf
        for j in range(1, m + 1):
            best = prev[j]
            if cur[j - 1] < best:
                best = cur[j - 1]
            if prev[j - 1] < best:
                best = prev[j - 1]
            cur[j] = abs(x[i - 1] - y[j - 1]) + best
        prev, cur = cur, prev
    return prev[m]


def dtw(x, y) -> float:
    """Unconstrained DTW with absolute-difference local cost."""
    x = np.ascontiguousarray(x, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    if x.ndim != 1 or y.ndim != 1:
        raise ValueError("dtw expects 1-D series")
    if len(x) == 0 or len(y) == 0:
        raise ValueError("dtw of an empty series")
    return float(_dtw(x, y))


def _as_values(s):
    return s.values if isinstance(s, LabeledSeries) else s


def knn1_dtw(train: Sequence, train_labels: Optional[Sequence[int]], query) -> int:
    """Label of the DTW-nearest training series; ties keep the earliest.

    ``train`` may hold :class:`LabeledSeries` (then ``train_labels`` may be
    None) or plain arrays.
    """
    if len(train) == 0:
        raise ValueError("empty training set")
    if train_labels is None:
        train_labels = [s.label for s in train]
    q = np.ascontiguousarray(_as_values(query), dtype=float)
    best, best_label = np.inf, None
    for s, label in zip(train, train_labels):
        d = _dtw(np.ascontiguousarray(_as_values(s), dtype=float), q)
        if best_label is None or d < best:
            best, best_label = d, label
    return int(best_label)


# -- 5x2 cross-validation -------------------------------------------------------

@dataclass(frozen=True)
class CVSplit:
    repetition: int    # 1..5
    fold: str          # "A": first half trains, "B": swapped
    train: np.ndarray
    test: np.ndarray


def _labels_of(dataset) -> np.ndarray:
    items = list(dataset)
    if items and isinstance(items[0], LabeledSeries):
        return np.array([s.label for s in items], dtype=int)
    return np.asarray(items, dtype=int)


def cv_5x2(rng: np.random.Generator, dataset, repetitions: int = 5) -> list[CVSplit]:
    """Stratified 5x2 splits over positions ``0..n-1`` of ``dataset``.

    ``dataset`` is a sequence of labels or of :class:`LabeledSeries`.
    """
    labels = _labels_of(dataset)
    classes, counts = np.unique(labels, return_counts=True)
    if len(classes) < 2 or counts.min() < 2:
        raise ValueError("5x2 cross-validation needs at least 2 samples of each of 2 classes")
    splits = []
    for rep in range(1, repetitions + 1):
        half_a, half_b = [], []
        for c in classes:
            ids = rng.permutation(np.flatnonzero(labels == c))
            k = len(ids) // 2
            half_a.extend(ids[:k].tolist())
            half_b.extend(ids[k:].tolist())
        a, b = np.sort(half_a), np.sort(half_b)
        splits.append(CVSplit(rep, "A", a, b))
        splits.append(CVSplit(rep, "B", b, a))
    return splits


def project_series(index: ExprTree, series: LabeledSeries) -> LabeledSeries:
    """Apply the index at every timestamp independently."""
    vals = series.values
    if vals.ndim == 1:
        vals = vals[:, None]
    return replace(series, values=evaluate_batch(index, vals))


def run_ts_experiment(index: ExprTree, dataset: Sequence[LabeledSeries],
                      rng: Optional[np.random.Generator] = None,
                      splits: Optional[list[CVSplit]] = None) -> list[ConfusionSummary]:
    """Project the series, then score 1-NN DTW on each 5x2 experiment.

    Pass ``splits`` to share partitions between methods; otherwise they are
    drawn from ``rng``.
    """
    projected = [project_series(index, s) for s in dataset]
    if splits is None:
        if rng is None:
            raise ValueError("either rng or splits is required")
        splits = cv_5x2(rng, projected)
    labels = np.array([s.label for s in projected])
    values = [np.ascontiguousarray(s.values) for s in projected]
    out = []
    for split in splits:
        train_vals = [values[i] for i in split.train]
        train_lab = labels[split.train]
        pred = [knn1_dtw(train_vals, train_lab, values[i]) for i in split.test]
        out.append(confusion(pred, labels[split.test]))
    return out


def class_mean_series(series: Sequence[LabeledSeries]) -> dict:
    """Per-class mean and std at each timestamp of projected, aligned series."""
    out = {}
    for label in sorted({s.label for s in series}):
        members = [s for s in series if s.label == label]
        stack = np.vstack([s.values for s in members])
        out[label] = (members[0].months, stack.mean(axis=0), stack.std(axis=0))
    return out
