"""Synthetic labelled pixels and series with a known separating index."""
from __future__ import annotations

import numpy as np

from .engine import PixelDataset
from .expr import BandSchema
from .indices import LANDSAT


def planted_ratio_pixels(rng: np.random.Generator, n_per_class: int = 1000,
                         schema: BandSchema = LANDSAT, bands: tuple = (4, 5),
                         ratio: float = 0.3, noise: float = 0.05) -> PixelDataset:
    """Two classes that differ only in ``(b_i - b_j) / (b_i + b_j)``.

    Each pixel gets a shared brightness ``B ~ U(0.2, 0.6)``; the planted
    pair is ``B * (1 +- r)`` with ``r = -ratio`` for class 0 and ``+ratio``
    for class 1, so neither band alone separates the classes. Remaining
    bands are ``U(0.05, 0.5)`` for both classes. Gaussian noise with std
    ``noise`` is then added to every band.
    """
    i, j = bands
    n = 2 * n_per_class
    y = np.repeat([0, 1], n_per_class)
    X = rng.uniform(0.05, 0.5, size=(n, schema.arity))
    brightness = rng.uniform(0.2, 0.6, size=n)
    r = np.where(y == 1, ratio, -ratio)
    X[:, i] = brightness * (1 + r)
    X[:, j] = brightness * (1 - r)
    X += rng.normal(0.0, noise, size=X.shape)
    order = rng.permutation(n)
    return PixelDataset(X[order], y[order], schema)


def planted_level_series(rng: np.random.Generator, n_per_class: int = 10,
                         length: int = 24, n_bands: int = 6, offset: float = 10.0,
                         noise: float = 0.5) -> tuple[list, list]:
    """Band-vector series whose class-1 members sit ``offset`` above class 0.

    Returns ``(series, labels)`` where each series is a ``(length, n_bands)``
    array with a shared seasonal shape.
    """
    t = np.arange(length)
    season = np.sin(2 * np.pi * t / 12.0)
    series, labels = [], []
    for label in (0, 1):
        for _ in range(n_per_class):
            level = 1.0 + offset * label
            s = level + season[:, None] + rng.normal(0.0, noise, size=(length, n_bands))
            series.append(s)
            labels.append(label)
    return series, labels


def planted_area_table(rng: np.random.Generator, n_areas_per_class: int = 10,
                       n_months: int = 72, start: str = "2000-01",
                       schema: BandSchema = LANDSAT, bands: tuple = (4, 5),
                       ratio: float = 0.3, noise: float = 0.05,
                       missing: float = 0.1, class_names=("forest", "savanna")) -> list:
    """Rows ``(area_id, "YYYY-MM", class_name, band values...)`` for a pixel CSV.

    Every area is observed monthly with seasonal brightness; a ``missing``
    share of its months is dropped at random to exercise gap filling.
    """
    from .tseries import month_index, month_label

    first = month_index(start)
    rows = []
    for label in (0, 1):
        for a in range(n_areas_per_class):
            area = f"{class_names[label]}_{a:03d}"
            phase = rng.uniform(0, 2 * np.pi)
            for m in range(n_months):
                if rng.random() < missing:
                    continue
                b = 0.4 + 0.15 * np.sin(2 * np.pi * m / 12 + phase)
                x = rng.uniform(0.05, 0.5, schema.arity)
                r = ratio if label else -ratio
                x[bands[0]], x[bands[1]] = b * (1 + r), b * (1 - r)
                x += rng.normal(0.0, noise, schema.arity)
                rows.append((area, month_label(first + m), class_names[label], *x.tolist()))
    return rows


def write_pixel_csv(path, rows, schema: BandSchema = LANDSAT) -> None:
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["area_id", "year_month", "label", *schema.names])
        for row in rows:
            w.writerow([row[0], row[1], row[2], *(repr(float(v)) for v in row[3:])])
