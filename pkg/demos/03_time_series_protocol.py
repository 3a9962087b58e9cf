"""
Comparing indices on monthly time series
========================================

Areas become gap-filled monthly series, each index projects them to one
value per month, and 1-NN DTW is scored with 5x2 cross-validation.
"""

import numpy as np

from specgp.indices import LANDSAT, evi, ndvi
from specgp.expr import parse_formula
from specgp.engine import PixelDataset
from specgp.synthetic import planted_area_table
from specgp.io import pixels_to_series
from specgp.stats import verdicts
from specgp.tseries import cv_5x2, month_index, run_ts_experiment

rng = np.random.default_rng(4)
rows = planted_area_table(rng, n_areas_per_class=8, n_months=48, missing=0.2)
data = PixelDataset(
    X=np.array([r[3:] for r in rows]),
    y=np.array([0 if r[2] == "forest" else 1 for r in rows]),
    schema=LANDSAT,
    area_ids=np.array([r[0] for r in rows], dtype=object),
    months=np.array([month_index(r[1]) for r in rows]),
)
series, rejected = pixels_to_series(data)
print(len(series), "series of", len(series[0].months), "months;", len(rejected), "rejected")

# All methods share the same ten train/test partitions
splits = cv_5x2(np.random.default_rng(0), series)
methods = {
    "ratio": parse_formula("(SWIR - SWIR2) % (SWIR + SWIR2)", LANDSAT),
    "NDVI": ndvi(LANDSAT),
    "EVI": evi(LANDSAT),
}
acc = {name: [s.normalized for s in run_ts_experiment(tree, series, splits=splits)]
       for name, tree in methods.items()}
for name, a in acc.items():
    print(f"{name:>6}: mean {np.mean(a):.3f}  std {np.std(a):.3f}")

# Friedman test across methods, then Wilcoxon with Bonferroni per baseline
cmp = verdicts(acc["ratio"], {k: v for k, v in acc.items() if k != "ratio"})
print("Friedman p =", round(cmp.friedman.p_value, 4))
for name, v in cmp.verdicts.items():
    print(f"ratio vs {name}: {v.glyph} ({v.verdict}, adjusted p {v.p_adjusted:.4f})")
