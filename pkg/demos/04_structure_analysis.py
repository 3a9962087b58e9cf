"""
What do evolved indices contain?
================================

Band usage and the most common subexpressions among the ten best
individuals of a final population.
"""

import numpy as np

from specgp import GPConfig, evolve
from specgp.analysis import band_histogram, element_frequency, top_k_individuals
from specgp.indices import LANDSAT
from specgp.synthetic import planted_ratio_pixels

data = planted_ratio_pixels(np.random.default_rng(5), n_per_class=500)
result = evolve(GPConfig(generations=30, seed=2), data)

top = top_k_individuals(result.population, k=10)
hist = band_histogram(top, LANDSAT)
for band in LANDSAT.names:
    print(f"{band:>6} {'#' * hist.get(band, 0)}")

# Bands, operators and whole subtrees are counted side by side
for rank, (element, count) in enumerate(element_frequency(top, LANDSAT, top_n=10), 1):
    print(f"{rank:2d}. {count:4d}  {element}")
