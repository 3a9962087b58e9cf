"""
Formulas, band schemas and baseline indices
===========================================

An index is an expression tree over the bands of a sensor. Trees print as
infix formulas and parse back from them.
"""

import numpy as np

from specgp import LANDSAT, MODIS, evaluate_batch, parse_formula, to_formula
from specgp.indices import evi, evi2, ndvi

# The two built-in sensors and their bands (name, wavelength range in um)
for schema in (LANDSAT, MODIS):
    print(schema.sensor_name, [(n, schema.wavelength(n)) for n in schema.names])

# Baselines are ordinary trees bound to a schema
for make in (ndvi, evi, evi2):
    print(f"{make.__name__:>5}: {to_formula(make(LANDSAT), LANDSAT)}")

# A hand-written index; % is protected division, srt and rlog are protected
# square root and log, so any formula evaluates to finite values
tree = parse_formula("rlog(SWIR2) - rlog(SWIR) * srt(NIR % Red)", LANDSAT)
print(to_formula(tree, LANDSAT), "size", tree.size, "depth", tree.depth)

pixels = np.array([[0.05, 0.08, 0.06, 0.40, 0.25, 0.12],
                   [0.0, 0.0, 0.0, 0.0, 0.0, 0.0]])
print(evaluate_batch(tree, pixels))
print(evaluate_batch(ndvi(LANDSAT), pixels))   # 0/0 is defined as 1
