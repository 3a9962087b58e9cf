"""Structure of learned indices: band usage and frequent formula elements."""
from __future__ import annotations

from collections import Counter
from typing import Sequence

from .engine import Individual
from .expr import Band, BandSchema, Binary, SYMBOLS, Unary, iter_nodes, subtrees, to_formula

CONST_DIGITS = 6


def top_k_individuals(population: Sequence[Individual], k: int = 10) -> list[Individual]:
    """Highest fitness first; ties prefer smaller trees, then earlier entries."""
    if k > len(population):
        raise ValueError(f"k={k} exceeds population size {len(population)}")
    order = sorted(range(len(population)),
                   key=lambda i: (-population[i].fitness, population[i].tree.size, i))
    return [population[i] for i in order[:k]]


def _trees(items):
    return [it.tree if isinstance(it, Individual) else it for it in items]


def band_histogram(individuals, schema: BandSchema) -> dict[str, int]:
    """Occurrences of each band terminal, summed over all trees."""
    counts: Counter = Counter()
    for tree in _trees(individuals):
        if tree.max_band >= schema.arity:
            raise ValueError(f"tree uses band {tree.max_band} outside schema "
                             f"{schema.sensor_name!r}")
        for _, node in iter_nodes(tree):
            if isinstance(node, Band):
                counts[schema.names[node.index]] += 1
    return dict(counts)


def element_counts(individuals, schema: BandSchema) -> Counter:
    """Counts of bands, operator symbols and rendered subexpressions."""
    counts: Counter = Counter()
    for tree in _trees(individuals):
        for _, node in iter_nodes(tree):
            if isinstance(node, Band):
                counts[schema.names[node.index]] += 1
            elif isinstance(node, Unary):
                counts[node.op] += 1
            elif isinstance(node, Binary):
                counts[SYMBOLS[node.op]] += 1
        for sub in subtrees(tree):
            counts[to_formula(sub, schema, digits=CONST_DIGITS)] += 1
    return counts


def element_frequency(individuals, schema: BandSchema,
                      top_n: int = 10) -> list[tuple[str, int]]:
    """The ``top_n`` most frequent elements, ties broken lexicographically."""
    trees = _trees(individuals)
    if not trees:
        raise ValueError("no individuals to analyse")
    counts = element_counts(trees, schema)
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:top_n]
