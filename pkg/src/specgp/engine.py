"""Genetic programming loop that evolves separability-maximising indices."""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from typing import Callable, Optional, Sequence

import numpy as np

from .expr import (
    BandSchema, ExprTree, evaluate_batch, get_node, random_tree, replace_node,
    select_node, to_formula,
)

logger = logging.getLogger(__name__)

FITNESS_CAP = 1e12
EPS = 1e-12


class DatasetError(ValueError):
    """The dataset violates a precondition (e.g. only one class present)."""


@dataclass
class PixelDataset:
    """Labelled pixels: ``X`` is ``(n_samples, n_bands)``, ``y`` holds 0/1.

    ``area_ids`` and ``months`` are optional per-sample metadata used for
    temporal splits and per-area reports; ``label_names`` maps 0/1 back to
    the original class names.
    """

    X: np.ndarray
    y: np.ndarray
    schema: BandSchema
    area_ids: Optional[np.ndarray] = None
    months: Optional[np.ndarray] = None
    label_names: tuple = ("0", "1")
    rejected_rows: tuple = ()

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=int)
        if self.X.ndim != 2 or self.X.shape[1] != self.schema.arity:
            raise DatasetError(
                f"expected samples with {self.schema.arity} bands, got shape {self.X.shape}")
        if self.y.shape != (self.X.shape[0],):
            raise DatasetError("labels and samples differ in length")
        if not np.isin(self.y, (0, 1)).all():
            raise DatasetError("labels must be 0 or 1")

    def __len__(self):
        return len(self.y)

    def subset(self, mask) -> "PixelDataset":
        mask = np.asarray(mask)
        return PixelDataset(
            self.X[mask], self.y[mask], self.schema,
            None if self.area_ids is None else self.area_ids[mask],
            None if self.months is None else self.months[mask],
            self.label_names, self.rejected_rows)

    def require_both_classes(self) -> None:
        present = set(np.unique(self.y).tolist())
        if present != {0, 1}:
            raise DatasetError(
                f"both classes are required, dataset only has {sorted(present)}")


@dataclass
class GPConfig:
    population_size: int = 100
    generations: int = 200
    max_initial_depth: int = 6
    max_tree_depth: int = 17
    tournament_k: int = 3
    p_crossover: float = 0.9
    p_mutation: float = 0.1
    p_replication: float = 0.0
    mutation_subtree_max_depth: int = 4
    seed: int = 0
    # "offspring": crossover-or-copy per parent pair, then every child mutates
    # with p_mutation. "operator": one exclusive operator per offspring slot.
    variation: str = "offspring"
    leaf_bias: float = 0.1
    n_jobs: int = 1

    def __post_init__(self):
        for name in ("p_crossover", "p_mutation", "p_replication", "leaf_bias"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {p}")
        if self.p_crossover + self.p_replication > 1.0 + 1e-12:
            raise ValueError("p_crossover + p_replication must not exceed 1")
        if self.variation == "operator" and self.p_crossover + self.p_mutation > 1.0 + 1e-12:
            raise ValueError("p_crossover + p_mutation must not exceed 1 in operator mode")
        if self.variation not in ("offspring", "operator"):
            raise ValueError(f"unknown variation mode {self.variation!r}")
        for name in ("population_size", "max_initial_depth", "max_tree_depth",
                     "tournament_k", "mutation_subtree_max_depth", "n_jobs"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.max_initial_depth > self.max_tree_depth:
            raise ValueError("max_initial_depth exceeds max_tree_depth")

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


@dataclass
class Individual:
    tree: ExprTree
    fitness: Optional[float] = None


@dataclass(frozen=True)
class GenerationRecord:
    generation: int
    best_fitness: float        # best so far, including this generation
    generation_best: float
    mean_fitness: float
    best_size: int


@dataclass
class EvolutionResult:
    best: Individual
    history: list
    population: list   # final population, kept for structure analysis

    def __iter__(self):
        yield self.best
        yield self.history


# -- fitness ------------------------------------------------------------------

def separability(values, labels) -> float:
    """``|mean_a - mean_b| / max(std_a, std_b)`` with population std.

    Zero spread with distinct means maps to the cap, zero spread with equal
    means to 0, and any non-finite projection to 0.
    """
    values = np.asarray(values, dtype=float)
    labels = np.asarray(labels)
    if not np.isfinite(values).all():
        return 0.0
    a, b = values[labels == 0], values[labels == 1]
    if len(a) == 0 or len(b) == 0:
        raise DatasetError("separability needs at least one sample of each class")
    gap = abs(a.mean() - b.mean())
    spread = max(a.std(), b.std())
    if not (np.isfinite(gap) and np.isfinite(spread)):
        return 0.0
    if spread <= EPS:
        return FITNESS_CAP if gap > EPS else 0.0
    return float(min(gap / spread, FITNESS_CAP))


def fitness(tree: ExprTree, data: PixelDataset) -> float:
    data.require_both_classes()
    return separability(evaluate_batch(tree, data.X), data.y)


# -- selection and variation -------------------------------------------------

def tournament_select(rng: np.random.Generator, population: Sequence[Individual],
                      k: int = 3) -> Individual:
    """Best of ``k`` individuals drawn uniformly with replacement."""
    if not population:
        raise ValueError("empty population")
    best = None
    for i in rng.integers(len(population), size=k):
        ind = population[int(i)]
        if best is None or ind.fitness > best.fitness:
            best = ind
    return best


def crossover(rng: np.random.Generator, p1: ExprTree, p2: ExprTree,
              max_depth: int = 17, leaf_bias: float = 0.1) -> tuple[ExprTree, ExprTree]:
    """Swap one randomly chosen subtree between the parents.

    A child deeper than ``max_depth`` is replaced by its parent.
    """
    a = select_node(rng, p1, leaf_bias)
    b = select_node(rng, p2, leaf_bias)
    c1 = replace_node(p1, a, get_node(p2, b))
    c2 = replace_node(p2, b, get_node(p1, a))
    if c1.depth > max_depth:
        c1 = p1
    if c2.depth > max_depth:
        c2 = p2
    return c1, c2


def mutate(rng: np.random.Generator, tree: ExprTree, schema, *,
           subtree_max_depth: int = 4, max_depth: int = 17,
           leaf_bias: float = 0.1, attempts: int = 10) -> ExprTree:
    """Replace one node with a fresh grow-method subtree."""
    path = select_node(rng, tree, leaf_bias)
    for _ in range(attempts):
        new = replace_node(tree, path,
                           random_tree(rng, schema, subtree_max_depth, "grow"))
        if new.depth <= max_depth:
            return new
    return tree


def ramped_half_and_half(rng: np.random.Generator, schema, size: int,
                         max_depth: int) -> list[ExprTree]:
    depths = list(range(2, max_depth + 1)) or [max_depth]
    trees = []
    for i in range(size):
        method = "full" if (i // len(depths)) % 2 == 0 else "grow"
        trees.append(random_tree(rng, schema, depths[i % len(depths)], method))
    return trees


# -- main loop ----------------------------------------------------------------

class _Scorer:
    """Fitness evaluation with a per-run memo keyed on tree structure."""

    def __init__(self, data: PixelDataset, n_jobs: int):
        self.X, self.y = data.X, data.y
        self.cache: dict = {}
        self.n_jobs = n_jobs

    def _score(self, tree):
        return separability(evaluate_batch(tree, self.X), self.y)

    def __call__(self, individuals: list[Individual]) -> None:
        todo = [ind for ind in individuals if ind.tree not in self.cache]
        unique = list({ind.tree: None for ind in todo})
        if self.n_jobs > 1 and len(unique) > 1:
            with ThreadPoolExecutor(self.n_jobs) as pool:
                scores = list(pool.map(self._score, unique))
        else:
            scores = [self._score(t) for t in unique]
        self.cache.update(zip(unique, scores))
        for ind in individuals:
            ind.fitness = self.cache[ind.tree]


def _best(population: Sequence[Individual]) -> Individual:
    best = population[0]
    for ind in population[1:]:
        if ind.fitness > best.fitness:
            best = ind
    return best


def _offspring(rng, cfg: GPConfig, population, schema) -> list[ExprTree]:
    def mut(t):
        return mutate(rng, t, schema, subtree_max_depth=cfg.mutation_subtree_max_depth,
                      max_depth=cfg.max_tree_depth, leaf_bias=cfg.leaf_bias)

    def pick():
        return tournament_select(rng, population, cfg.tournament_k).tree

    children: list[ExprTree] = []
    while len(children) < cfg.population_size:
        u = rng.random()
        if cfg.variation == "offspring":
            p1, p2 = pick(), pick()
            if u < cfg.p_crossover:
                kids = crossover(rng, p1, p2, cfg.max_tree_depth, cfg.leaf_bias)
            else:
                kids = (p1, p2)
            for kid in kids:
                children.append(mut(kid) if rng.random() < cfg.p_mutation else kid)
        elif u < cfg.p_crossover:
            children.extend(crossover(rng, pick(), pick(), cfg.max_tree_depth, cfg.leaf_bias))
        elif u < cfg.p_crossover + cfg.p_mutation:
            children.append(mut(pick()))
        else:
            children.append(pick())
    return children[:cfg.population_size]


def evolve(config: GPConfig, data: PixelDataset,
           progress: Optional[Callable[[GenerationRecord], None]] = None) -> EvolutionResult:
    """Run the evolutionary search and return the best index found.

    Returns an :class:`EvolutionResult`; unpacking it yields
    ``(best, history)``. ``progress`` receives one record per generation.
    """
    data.require_both_classes()
    rng = np.random.default_rng(config.seed)
    schema = data.schema
    score = _Scorer(data, config.n_jobs)

    population = [Individual(t) for t in ramped_half_and_half(
        rng, schema, config.population_size, config.max_initial_depth)]
    score(population)
    best = _best(population)
    history: list[GenerationRecord] = []

    for gen in range(1, config.generations + 1):
        population = [Individual(t) for t in _offspring(rng, config, population, schema)]
        score(population)
        gen_best = _best(population)
        if gen_best.fitness > best.fitness:
            best = gen_best
        record = GenerationRecord(
            generation=gen,
            best_fitness=best.fitness,
            generation_best=gen_best.fitness,
            mean_fitness=float(np.mean([ind.fitness for ind in population])),
            best_size=best.tree.size,
        )
        history.append(record)
        if progress is not None:
            progress(record)
        logger.debug("gen %d best %.6g mean %.6g", gen, record.best_fitness,
                     record.mean_fitness)

    logger.info("best fitness %.6g: %s", best.fitness, to_formula(best.tree, schema))
    return EvolutionResult(Individual(best.tree, best.fitness), history, population)
