"""Command-line front end: ``specgp train|classify|eval-ts|analyze``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .analysis import band_histogram, element_frequency, top_k_individuals
from .classify import (
    centroids_from_projections, confidence_scores, confusion, predict_projections,
)
from .engine import GPConfig, Individual, evolve
from .expr import evaluate_batch, to_formula
from .indices import baseline, get_schema
from .io import (
    FormatError, load_pixels, pixels_to_series, read_formula, read_population,
    temporal_split, write_formula, write_population,
)
from .stats import verdicts
from .tseries import class_mean_series, cv_5x2, month_label, project_series, run_ts_experiment

logger = logging.getLogger("specgp")


@dataclass
class ExperimentConfig:
    schema: str = "landsat"
    data: Optional[str] = None
    out: str = "out"
    seed: int = 0
    train_months: int = 60
    index: list = field(default_factory=list)
    baseline: list = field(default_factory=list)
    k: int = 10
    max_missing_fraction: float = 0.5
    alpha: float = 0.05
    gp: GPConfig = field(default_factory=GPConfig)

    def gp_config(self) -> GPConfig:
        return GPConfig(**{**asdict(self.gp), "seed": self.seed})

    def provenance(self) -> dict:
        d = asdict(self)
        d["gp"] = asdict(self.gp_config())
        return {"version": __version__, "config": d}


_LIST_KEYS = {"index", "baseline"}


def _coerce(template, value: str):
    if isinstance(template, bool):
        return value.strip().lower() in ("1", "true", "yes", "on")
    if isinstance(template, int):
        return int(value)
    if isinstance(template, float):
        return float(value)
    return value.strip()


def read_config(path) -> dict:
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    out: dict = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise FormatError(f"{path}:{lineno}: expected key = value")
        key = key.strip().replace("-", "_")
        if key in _LIST_KEYS:
            out.setdefault(key, []).extend(v.strip() for v in value.split(",") if v.strip())
        else:
            out[key] = value.strip()
    return out


def build_config(file_values: dict, overrides: dict) -> ExperimentConfig:
    cfg = ExperimentConfig()
    gp_defaults = GPConfig()
    gp_values = {}
    top = {f.name for f in fields(ExperimentConfig)} - {"gp"}
    for source in (file_values, overrides):
        for key, value in source.items():
            if value is None or value == []:
                continue
            if key in _LIST_KEYS:
                setattr(cfg, key, list(value))
            elif key in top:
                setattr(cfg, key, _coerce(getattr(cfg, key), value)
                        if isinstance(value, str) else value)
            elif key in GPConfig.field_names():
                template = getattr(gp_defaults, key)
                gp_values[key] = _coerce(template, value) if isinstance(value, str) else value
            else:
                raise FormatError(f"unknown configuration key {key!r}")
    cfg.gp = GPConfig(**{**asdict(gp_defaults), **gp_values})
    return cfg


# -- helpers -------------------------------------------------------------------

def _out_dir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load(cfg: ExperimentConfig):
    if not cfg.data:
        raise FormatError("no dataset given (use --data)")
    if not Path(cfg.data).exists():
        raise FileNotFoundError(f"dataset {cfg.data} does not exist")
    return load_pixels(cfg.data, get_schema(cfg.schema))


def _methods(cfg: ExperimentConfig, schema):
    """(name, tree) for every --index file, then every --baseline."""
    methods = []
    for path in cfg.index:
        tree, file_schema, _ = read_formula(path)
        if file_schema.sensor_name != schema.sensor_name:
            raise FormatError(f"{path}: formula is for schema {file_schema.sensor_name!r} "
                              f"but the dataset uses {schema.sensor_name!r}")
        methods.append((Path(path).stem, tree))
    for name in cfg.baseline:
        methods.append((name.upper(), baseline(name, schema)))
    return methods


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
                    encoding="utf-8")


def _write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _pct(v: float) -> str:
    return "   n/a" if v is None or math.isnan(v) else f"{100 * v:6.2f}"


# -- commands ------------------------------------------------------------------

def cmd_train(cfg: ExperimentConfig) -> dict:
    """Evolve an index on the temporal training slice and persist it."""
    data = _load(cfg)
    train, _ = temporal_split(data, cfg.train_months)
    gp = cfg.gp_config()
    result = evolve(gp, train)
    out = _out_dir(cfg)
    schema = data.schema
    write_formula(out / "index.gpvi", result.best.tree, schema, result.best.fitness)
    _write_csv(out / "history.csv",
               ["generation", "best_fitness", "generation_best", "mean_fitness", "best_size"],
               [[r.generation, repr(r.best_fitness), repr(r.generation_best),
                 repr(r.mean_fitness), r.best_size] for r in result.history])
    write_population(out / "population.tsv", result.population, schema)
    report = {
        **cfg.provenance(),
        "best_fitness": result.best.fitness,
        "best_formula": to_formula(result.best.tree, schema),
        "label_mapping": {name: i for i, name in enumerate(data.label_names)},
        "train_samples": len(train),
        "rejected_rows": [list(r) for r in data.rejected_rows],
    }
    _write_json(out / "train_report.json", report)
    print(f"best fitness: {result.best.fitness:.6g}")
    print(f"best formula: {report['best_formula']}")
    return report


def cmd_classify(cfg: ExperimentConfig) -> dict:
    """Nearest-centroid classification of the test slice plus confidence report."""
    data = _load(cfg)
    methods = _methods(cfg, data.schema)
    if len(methods) != 1:
        raise FormatError("classify needs exactly one --index or --baseline")
    name, tree = methods[0]
    train, test = temporal_split(data, cfg.train_months)
    train.require_both_classes()
    train_proj = evaluate_batch(tree, train.X)
    test_proj = evaluate_batch(tree, test.X)
    cents = centroids_from_projections(train_proj, train.y)
    pred = predict_projections(cents, test_proj)
    summary = confusion(pred, test.y)
    conf = confidence_scores(train_proj, train.y, test_proj)

    out = _out_dir(cfg)
    rows = []
    correct = pred == test.y
    for area in dict.fromkeys(test.area_ids.tolist()):
        m = test.area_ids == area
        rows.append([area, repr(float(conf.confidence[m].mean())),
                     repr(float(correct[m].mean()))])
    _write_csv(out / "confidence.csv", ["area_id", "mean_confidence", "mean_accuracy"], rows)

    names = data.label_names
    lines = [f"index: {name} = {to_formula(tree, data.schema)}",
             f"centroids: {names[0]}={cents[0]:.6g} {names[1]}={cents[1]:.6g}",
             "",
             f"{'class':<16}{'producer':>10}{'user':>10}"]
    for c in (0, 1):
        lines.append(f"{names[c]:<16}{_pct(summary.producer[c]):>10}{_pct(summary.user[c]):>10}")
    lines.append(f"{'normalized':<16}{_pct(summary.normalized):>10}")
    (out / "report.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    report = {
        **cfg.provenance(),
        "method": name,
        "formula": to_formula(tree, data.schema),
        "label_mapping": {n: i for i, n in enumerate(names)},
        "centroids": list(cents.values),
        "confusion": summary.as_dict(),
        "logistic": {"intercept": conf.model.raw_intercept, "slope": conf.model.raw_slope,
                     "separated": conf.separated, "converged": conf.model.converged},
        "test_samples": len(test),
    }
    _write_json(out / "report.json", report)
    print("\n".join(lines))
    return report


def cmd_eval_ts(cfg: ExperimentConfig) -> dict:
    """5x2 cross-validated DTW 1-NN comparison; the first method is the reference."""
    data = _load(cfg)
    methods = _methods(cfg, data.schema)
    if len(methods) < 2:
        raise FormatError("eval-ts needs at least two methods (--index / --baseline)")
    series, rejected = pixels_to_series(data, cfg.max_missing_fraction)
    splits = cv_5x2(np.random.default_rng(cfg.seed), series)
    # Duplicate method names (same baseline twice) get a numeric suffix.
    keys = []
    for name, _ in methods:
        key, i = name, 2
        while key in keys:
            key, i = f"{name}#{i}", i + 1
        keys.append(key)
    recs = [run_ts_experiment(tree, series, splits=splits) for _, tree in methods]
    acc = {k: [r.normalized for r in rs] for k, rs in zip(keys, recs)}
    ref = keys[0]
    comp = verdicts(acc[ref], {k: acc[k] for k in keys[1:]}, cfg.alpha)

    out = _out_dir(cfg)
    raw_rows = []
    for key, rs in zip(keys, recs):
        for split, r in zip(splits, rs):
            raw_rows.append([key, split.repetition, split.fold, repr(r.normalized),
                             repr(r.producer[0]), repr(r.producer[1]),
                             repr(r.user[0]), repr(r.user[1])])
    _write_csv(out / "experiments.csv",
               ["method", "repetition", "fold", "normalized", "producer_0", "producer_1",
                "user_0", "user_1"], raw_rows)

    table, summary_rows = [], []
    for key, rs in zip(keys, recs):
        a = np.array(acc[key])
        glyph = "" if key == ref else comp.verdicts[key].glyph
        cells = {}
        for label, attr in (("producer", "producer"), ("user", "user")):
            for c in (0, 1):
                v = np.array([getattr(r, attr)[c] for r in rs], dtype=float)
                cells[f"{label}_{c}"] = (float(np.nanmean(v)) if np.isfinite(v).any() else math.nan,
                                         float(np.nanstd(v)) if np.isfinite(v).any() else math.nan)
        summary_rows.append([key, glyph, repr(float(a.mean())), repr(float(a.std()))]
                            + [repr(cells[c][j]) for c in cells for j in (0, 1)])
        table.append(f"{key:<12} {glyph:1} {100 * a.mean():6.2f} ± {100 * a.std():5.2f}")
    _write_csv(out / "comparison.csv",
               ["method", "verdict", "mean_accuracy", "std_accuracy",
                "producer_0_mean", "producer_0_std", "producer_1_mean", "producer_1_std",
                "user_0_mean", "user_0_std", "user_1_mean", "user_1_std"], summary_rows)

    mean_rows = []
    for (name, tree), key in zip(methods, keys):
        projected = [project_series(tree, s) for s in series]
        for label, (months, mean, std) in class_mean_series(projected).items():
            for m, mu, sd in zip(months, mean, std):
                mean_rows.append([key, data.label_names[label], month_label(m), repr(float(mu)),
                                  repr(float(sd))])
    _write_csv(out / "mean_series.csv", ["method", "class", "month", "mean", "std"], mean_rows)

    report = {
        **cfg.provenance(),
        "reference": ref,
        "friedman": {"statistic": comp.friedman.statistic, "p_value": comp.friedman.p_value},
        "verdicts": {k: {"verdict": v.verdict, "glyph": v.glyph,
                         "mean_difference": v.mean_difference, "p_value": v.p_value,
                         "p_adjusted": v.p_adjusted} for k, v in comp.verdicts.items()},
        "accuracies": acc,
        "label_mapping": {n: i for i, n in enumerate(data.label_names)},
        "areas_used": len(series),
        "areas_rejected": [list(r) for r in rejected],
    }
    _write_json(out / "comparison.json", report)
    text = table + [f"Friedman p = {comp.friedman.p_value:.3g}"]
    (out / "comparison.txt").write_text("\n".join(text) + "\n", encoding="utf-8")
    print("\n".join(text))
    return report


def _read_individuals(path: Path):
    if path.is_dir():
        files = sorted(p for p in path.iterdir() if p.is_file())
        if not files:
            raise FormatError(f"{path}: directory holds no formula files")
        individuals, schemas = [], set()
        for f in files:
            tree, schema, meta = read_formula(f)
            schemas.add(schema.sensor_name)
            fit = float(meta["fitness"]) if "fitness" in meta else -math.inf
            individuals.append(Individual(tree, fit))
        if len(schemas) > 1:
            raise FormatError(f"{path}: formulas mix schemas {sorted(schemas)}")
        return individuals, get_schema(schemas.pop())
    text = path.read_text(encoding="utf-8")
    if any("\t" in line for line in text.splitlines() if not line.startswith("#")):
        return read_population(path)
    tree, schema, meta = read_formula(path)
    return [Individual(tree, float(meta.get("fitness", "-inf")))], schema


def cmd_analyze(cfg: ExperimentConfig) -> dict:
    """Band histogram and top-k formula elements of the best individuals."""
    if len(cfg.index) != 1:
        raise FormatError("analyze needs one --index population file or directory")
    path = Path(cfg.index[0])
    if not path.exists():
        raise FileNotFoundError(f"{path} does not exist")
    individuals, schema = _read_individuals(path)
    top = top_k_individuals(individuals, min(cfg.k, len(individuals)))
    hist = band_histogram(top, schema)
    elements = element_frequency(top, schema, cfg.k)
    out = _out_dir(cfg)
    _write_csv(out / "bands.csv", ["band", "count"],
               [[b, hist[b]] for b in schema.names if b in hist])
    _write_csv(out / "elements.csv", ["element", "count", "rank"],
               [[e, c, i] for i, (e, c) in enumerate(elements, 1)])
    for e, c in elements:
        print(f"{c:6d}  {e}")
    return {"bands": hist, "elements": elements, "individuals": len(top)}


COMMANDS = {"train": cmd_train, "classify": cmd_classify,
            "eval-ts": cmd_eval_ts, "analyze": cmd_analyze}


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="specgp", description=__doc__)
    parser.add_argument("--version", action="version", version=f"specgp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key = value configuration file")
        p.add_argument("--schema", choices=["landsat", "modis"])
        p.add_argument("--data", help="labelled pixel CSV")
        p.add_argument("--index", action="append", default=[],
                       help="formula file (analyze: population file or directory)")
        p.add_argument("--baseline", action="append", default=[],
                       choices=["ndvi", "evi", "evi2"])
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output directory")
        p.add_argument("--k", type=int)
        p.add_argument("--generations", type=int)
        p.add_argument("--population-size", dest="population_size", type=int)
        p.add_argument("--train-months", dest="train_months", type=int)
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        file_values = read_config(args.config) if args.config else {}
        overrides = {k: v for k, v in vars(args).items()
                     if k not in ("config", "command", "verbose")}
        cfg = build_config(file_values, overrides)
        COMMANDS[args.command](cfg)
    except (ValueError, KeyError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"specgp {args.command}: error: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
