"""Pixel CSV ingestion and formula / population file formats.

Pixel CSV: header ``area_id,year_month,label,<band names in schema order>``.

Formula file (UTF-8)::

    # schema: landsat
    # fitness: 4.93          (optional)
    rlog(SWIR2) - rlog(SWIR)

Population file: the schema header, then one ``fitness<TAB>formula`` line
per individual.
"""
from __future__ import annotations

import csv
import logging
import math
from pathlib import Path

import numpy as np

from .engine import DatasetError, Individual, PixelDataset
from .expr import BandSchema, ExprTree, parse_formula, to_formula
from .indices import get_schema
from .tseries import GapError, LabeledSeries, month_index, preprocess

logger = logging.getLogger(__name__)

FIXED_COLUMNS = ["area_id", "year_month", "label"]


class FormatError(ValueError):
    pass


def load_pixels(path, schema: BandSchema) -> PixelDataset:
    """Read a labelled pixel CSV.

    Rows with non-finite band values are skipped and listed in
    ``rejected_rows`` as ``(row_number, reason)``; row numbers count the
    header as row 1. Class names map to 0/1 in order of first appearance.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise FormatError(f"{path}: empty file")
        header = [h.strip() for h in header]
        expected = FIXED_COLUMNS + schema.names
        if header != expected:
            raise FormatError(f"{path}: header {header} does not match schema "
                              f"{schema.sensor_name!r}, expected {expected}")
        label_map: dict[str, int] = {}
        rows, rejected = [], []
        for rownum, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(expected):
                raise FormatError(f"{path}: row {rownum} has {len(row)} fields, "
                                  f"expected {len(expected)}")
            area, ym, label = (c.strip() for c in row[:3])
            try:
                bands = [float(c) for c in row[3:]]
                month = month_index(ym)
            except ValueError as exc:
                raise FormatError(f"{path}: row {rownum}: {exc}") from None
            if not all(math.isfinite(v) for v in bands):
                reason = "non-finite band value"
                rejected.append((rownum, reason))
                logger.warning("%s: row %d rejected: %s", path, rownum, reason)
                continue
            if label not in label_map:
                if len(label_map) == 2:
                    raise FormatError(f"{path}: row {rownum}: third class {label!r}; "
                                      f"only two classes are supported")
                label_map[label] = len(label_map)
            rows.append((area, month, label_map[label], bands))
    if not rows:
        raise FormatError(f"{path}: no usable data rows")
    names = tuple(sorted(label_map, key=label_map.get))
    return PixelDataset(
        X=np.array([r[3] for r in rows]),
        y=np.array([r[2] for r in rows]),
        schema=schema,
        area_ids=np.array([r[0] for r in rows], dtype=object),
        months=np.array([r[1] for r in rows]),
        label_names=names,
        rejected_rows=tuple(rejected),
    )


def temporal_split(data: PixelDataset, train_months: int) -> tuple[PixelDataset, PixelDataset]:
    """Samples from the first ``train_months`` months train; the rest test."""
    if data.months is None:
        raise DatasetError("dataset has no month information")
    first = int(data.months.min())
    last = int(data.months.max())
    boundary = first + train_months
    if not first < boundary <= last:
        raise DatasetError(f"train split of {train_months} months is outside the "
                           f"dataset's {last - first + 1}-month range")
    is_train = data.months < boundary
    return data.subset(is_train), data.subset(~is_train)


def pixels_to_series(data: PixelDataset, max_missing_fraction: float = 0.5):
    """Group pixels by area into gap-filled monthly series on a shared month grid.

    Returns ``(series, rejected)`` where ``rejected`` lists ``(area_id, reason)``.
    """
    if data.area_ids is None or data.months is None:
        raise DatasetError("dataset lacks area ids or months")
    start, end = int(data.months.min()), int(data.months.max())
    series, rejected = [], []
    order = list(dict.fromkeys(data.area_ids.tolist()))
    for area in order:
        idx = np.flatnonzero(data.area_ids == area)
        labels = set(data.y[idx].tolist())
        if len(labels) != 1:
            raise DatasetError(f"area {area!r} has conflicting labels")
        obs = [(int(data.months[i]), data.X[i]) for i in idx]
        try:
            series.append(preprocess(obs, str(area), labels.pop(), start, end,
                                     max_missing_fraction))
        except GapError as exc:
            logger.warning("%s", exc)
            rejected.append((str(area), str(exc)))
    return series, rejected


# -- formula files -------------------------------------------------------------

def _read_headers(lines):
    meta, body = {}, []
    for line in lines:
        s = line.strip()
        if not s:
            continue
        if s.startswith("#"):
            key, _, value = s[1:].partition(":")
            meta[key.strip().lower()] = value.strip()
        else:
            body.append(s)
    return meta, body


def write_formula(path, tree: ExprTree, schema: BandSchema, fitness: float | None = None) -> None:
    lines = [f"# schema: {schema.sensor_name}"]
    if fitness is not None:
        lines.append(f"# fitness: {fitness!r}")
    lines.append(to_formula(tree, schema))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_formula(path) -> tuple[ExprTree, BandSchema, dict]:
    path = Path(path)
    meta, body = _read_headers(path.read_text(encoding="utf-8").splitlines())
    if "schema" not in meta:
        raise FormatError(f"{path}: missing '# schema:' header line")
    if len(body) != 1:
        raise FormatError(f"{path}: expected exactly one formula line, found {len(body)}")
    schema = get_schema(meta["schema"])
    return parse_formula(body[0], schema), schema, meta


def write_population(path, population, schema: BandSchema) -> None:
    lines = [f"# schema: {schema.sensor_name}"]
    for ind in population:
        lines.append(f"{ind.fitness!r}\t{to_formula(ind.tree, schema)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_population(path) -> tuple[list[Individual], BandSchema]:
    path = Path(path)
    meta, body = _read_headers(path.read_text(encoding="utf-8").splitlines())
    if "schema" not in meta:
        raise FormatError(f"{path}: missing '# schema:' header line")
    schema = get_schema(meta["schema"])
    out = []
    for line in body:
        fit, sep, formula = line.partition("\t")
        if not sep:
            raise FormatError(f"{path}: population line without a tab: {line!r}")
        out.append(Individual(parse_formula(formula, schema), float(fit)))
    return out, schema
