"""Sensor band schemas and the NDVI / EVI / EVI2 baselines as expression trees."""
from __future__ import annotations

from .expr import Band, BandSchema, Binary, Const, ExprTree

LANDSAT = BandSchema("landsat", (
    ("Blue", (0.45, 0.52), "B1"),
    ("Green", (0.52, 0.60), "B2"),
    ("Red", (0.63, 0.69), "B3"),
    ("NIR", (0.76, 0.90), "B4"),
    ("SWIR", (1.55, 1.75), "B5"),
    ("SWIR2", (2.08, 2.35), "B7"),
))

MODIS = BandSchema("modis", (
    ("Blue", (0.46, 0.48), "B3"),
    ("Green", (0.55, 0.57), "B4"),
    ("Red", (0.62, 0.67), "B1"),
    ("NIR", (0.84, 0.88), "B2"),
    ("NIR2", (1.23, 1.25), "B5"),
    ("SWIR", (1.63, 1.65), "B6"),
    ("SWIR2", (2.11, 2.16), "B7"),
))


def builtin_schemas() -> dict[str, BandSchema]:
    return {"landsat": LANDSAT, "modis": MODIS}


def get_schema(name: str) -> BandSchema:
    try:
        return builtin_schemas()[name.lower()]
    except KeyError:
        raise KeyError(f"unknown schema {name!r}; expected one of "
                       f"{sorted(builtin_schemas())}") from None


def ndvi(schema: BandSchema) -> ExprTree:
    """(NIR - Red) % (NIR + Red)"""
    nir, red = Band(schema.index("NIR")), Band(schema.index("Red"))
    return Binary("pdiv", Binary("sub", nir, red), Binary("add", nir, red))


def evi(schema: BandSchema) -> ExprTree:
    """2.5 * (NIR - Red) % (NIR + 6 * Red - 7.5 * Blue + 1)"""
    nir, red = Band(schema.index("NIR")), Band(schema.index("Red"))
    blue = Band(schema.index("Blue"))
    num = Binary("mul", Const(2.5), Binary("sub", nir, red))
    den = Binary("add",
                 Binary("sub",
                        Binary("add", nir, Binary("mul", Const(6.0), red)),
                        Binary("mul", Const(7.5), blue)),
                 Const(1.0))
    return Binary("pdiv", num, den)


def evi2(schema: BandSchema) -> ExprTree:
    """2.5 * (NIR - Red) % (NIR + 2.4 * Red + 1)"""
    nir, red = Band(schema.index("NIR")), Band(schema.index("Red"))
    num = Binary("mul", Const(2.5), Binary("sub", nir, red))
    den = Binary("add", Binary("add", nir, Binary("mul", Const(2.4), red)), Const(1.0))
    return Binary("pdiv", num, den)


BASELINES = {"ndvi": ndvi, "evi": evi, "evi2": evi2}


def baseline(name: str, schema: BandSchema) -> ExprTree:
    try:
        return BASELINES[name.lower()](schema)
    except KeyError:
        raise KeyError(f"unknown baseline {name!r}; expected one of "
                       f"{sorted(BASELINES)}") from None
