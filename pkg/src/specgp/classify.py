"""Nearest-centroid classification in index space, confidence scores and accuracy metrics."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .engine import DatasetError, PixelDataset
from .expr import ExprTree, evaluate_batch


@dataclass(frozen=True)
class Centroids:
    values: tuple  # centroid of class 0, class 1

    def __getitem__(self, label):
        return self.values[label]


def centroids_from_projections(values, labels) -> Centroids:
    values = np.asarray(values, dtype=float)
    labels = np.asarray(labels)
    cents = []
    for c in (0, 1):
        v = values[labels == c]
        if len(v) == 0:
            raise DatasetError(f"class {c} missing from training data")
        cents.append(float(v.mean()))
    return Centroids(tuple(cents))


def ncc_fit(train: PixelDataset, index: ExprTree) -> Centroids:
    """Per-class mean of the index projections."""
    return centroids_from_projections(evaluate_batch(index, train.X), train.y)


def predict_projections(centroids: Centroids, values) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    d0 = np.abs(values - centroids[0])
    d1 = np.abs(values - centroids[1])
    # ties go to class 0
    return (d1 < d0).astype(int)


def ncc_predict(centroids: Centroids, index: ExprTree, pixels) -> np.ndarray:
    return predict_projections(centroids, evaluate_batch(index, pixels))


# -- confidence ----------------------------------------------------------------

@dataclass(frozen=True)
class LogisticModel:
    """One-feature logistic regression ``P(y=1|x) = expit(intercept + slope * x)``.

    Coefficients are fitted on standardised inputs; ``separated`` flags
    perfectly separable training data, where the standardised coefficients
    hit the ``beta_cap`` bound.
    """

    intercept: float
    slope: float
    center: float
    scale: float
    iterations: int
    converged: bool
    separated: bool

    def predict_proba(self, x) -> np.ndarray:
        z = (np.asarray(x, dtype=float) - self.center) / self.scale
        p = expit(self.intercept + self.slope * z)
        eps = np.finfo(float).eps
        return np.clip(p, eps, 1.0 - eps)

    @property
    def raw_slope(self) -> float:
        return self.slope / self.scale

    @property
    def raw_intercept(self) -> float:
        return self.intercept - self.slope * self.center / self.scale


def fit_logistic(x, y, max_iter: int = 100, tol: float = 1e-8,
                 beta_cap: float = 30.0) -> LogisticModel:
    """Iteratively reweighted least squares, no regularisation."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if set(np.unique(y).tolist()) != {0.0, 1.0}:
        raise DatasetError("logistic fit needs both classes")
    center = float(x.mean())
    scale = float(x.std())
    if not math.isfinite(scale) or scale <= 1e-12:
        scale = 1.0
    z = (x - center) / scale
    A = np.column_stack([np.ones_like(z), z])
    separated = bool(z[y == 0].max() < z[y == 1].min() or z[y == 1].max() < z[y == 0].min())

    beta = np.zeros(2)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        p = expit(A @ beta)
        w = np.maximum(p * (1 - p), 1e-12)
        H = A.T @ (A * w[:, None])
        g = A.T @ (y - p)
        try:
            step = np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(H, g, rcond=None)[0]
        new = np.clip(beta + step, -beta_cap, beta_cap)
        delta = np.max(np.abs(new - beta))
        beta = new
        if delta < tol:
            converged = True
            break
    return LogisticModel(float(beta[0]), float(beta[1]), center, scale, it,
                         converged, separated)


@dataclass(frozen=True)
class ConfidenceResult:
    probabilities: np.ndarray   # P(class 1)
    confidence: np.ndarray      # max(p, 1 - p)
    model: LogisticModel

    @property
    def separated(self) -> bool:
        return self.model.separated


def confidence_scores(train_values, train_labels, eval_values, **kwargs) -> ConfidenceResult:
    """Fit on training projections, score the evaluation projections."""
    model = fit_logistic(train_values, train_labels, **kwargs)
    p = model.predict_proba(eval_values)
    return ConfidenceResult(p, np.maximum(p, 1.0 - p), model)


# -- accuracy -----------------------------------------------------------------

@dataclass(frozen=True)
class ConfusionSummary:
    """2x2 confusion table (rows: truth, columns: prediction) and accuracies.

    Undefined accuracies (class absent from truth or predictions) are NaN;
    normalized accuracy averages the defined producer accuracies.
    """

    counts: np.ndarray
    producer: tuple
    user: tuple
    normalized: float

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def as_dict(self) -> dict:
        return {
            "counts": self.counts.tolist(),
            "producer": [None if math.isnan(v) else v for v in self.producer],
            "user": [None if math.isnan(v) else v for v in self.user],
            "normalized": None if math.isnan(self.normalized) else self.normalized,
        }


def _ratio(num, den) -> float:
    return float(num) / float(den) if den else math.nan


def confusion(predicted, truth) -> ConfusionSummary:
    predicted = np.asarray(predicted, dtype=int)
    truth = np.asarray(truth, dtype=int)
    if predicted.shape != truth.shape:
        raise ValueError(f"length mismatch: {predicted.shape} vs {truth.shape}")
    counts = np.zeros((2, 2), dtype=int)
    np.add.at(counts, (truth, predicted), 1)
    producer = tuple(_ratio(counts[c, c], counts[c, :].sum()) for c in (0, 1))
    user = tuple(_ratio(counts[c, c], counts[:, c].sum()) for c in (0, 1))
    defined = [v for v in producer if not math.isnan(v)]
    normalized = float(np.mean(defined)) if defined else math.nan
    return ConfusionSummary(counts, producer, user, normalized)
