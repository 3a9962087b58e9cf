"""
Evolving an index on synthetic pixels
=====================================

Two classes differ only in the normalised difference of SWIR and SWIR2.
NDVI cannot see that; an evolved index should.
"""

import numpy as np

from specgp import GPConfig, evolve, fitness, to_formula
from specgp.classify import confusion, ncc_fit, ncc_predict
from specgp.indices import LANDSAT, ndvi
from specgp.synthetic import planted_ratio_pixels

train = planted_ratio_pixels(np.random.default_rng(0), n_per_class=1000)
test = planted_ratio_pixels(np.random.default_rng(1), n_per_class=1000)

# Separability of the baseline on the training pixels
print("NDVI fitness:", round(fitness(ndvi(LANDSAT), train), 3))

# A shorter run than the default 200 generations is enough here
cfg = GPConfig(generations=40, seed=3)
result = evolve(cfg, train, progress=lambda r: r.generation % 10 or print(
    f"gen {r.generation:3d}  best {r.best_fitness:7.3f}  mean {r.mean_fitness:7.3f}"))
best = result.best
print("evolved:", to_formula(best.tree, LANDSAT, digits=4), "fitness", round(best.fitness, 3))

# Nearest-centroid classification of held-out pixels in index space
for name, tree in (("evolved", best.tree), ("NDVI", ndvi(LANDSAT))):
    summary = confusion(ncc_predict(ncc_fit(train, tree), tree, test.X), test.y)
    print(f"{name:>8}: normalized accuracy {summary.normalized:.3f}")
