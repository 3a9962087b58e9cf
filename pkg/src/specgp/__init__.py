"""Evolve discriminative spectral indices with genetic programming.

Core pieces: :mod:`specgp.expr` (index formulas as trees), :mod:`specgp.engine`
(the evolutionary search), :mod:`specgp.classify` (nearest-centroid
classification and accuracy), :mod:`specgp.tseries` (monthly series, DTW,
5x2 cross-validation), :mod:`specgp.stats` (Friedman / Wilcoxon comparison)
and :mod:`specgp.analysis` (structure of learned formulas).
"""

__version__ = "0.1.0"

from .engine import GPConfig, Individual, PixelDataset, evolve, fitness
from .expr import evaluate, evaluate_batch, parse_formula, to_formula
from .indices import LANDSAT, MODIS, builtin_schemas, evi, evi2, ndvi

__all__ = [
    "GPConfig", "Individual", "PixelDataset", "evolve", "fitness",
    "evaluate", "evaluate_batch", "parse_formula", "to_formula",
    "LANDSAT", "MODIS", "builtin_schemas", "ndvi", "evi", "evi2",
]
