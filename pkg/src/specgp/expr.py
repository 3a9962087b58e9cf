"""Expression trees encoding spectral index formulas.

Trees are immutable. Leaves are band references or constants, inner nodes
are the closed function set ``+ - * %`` plus the unary ``srt`` and ``rlog``.
Nodes are addressed by *paths*: tuples of child positions from the root.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterator, Sequence, Union

import numpy as np

__all__ = [
    "BandSchema", "Band", "Const", "Unary", "Binary", "ExprTree",
    "BandIndexError", "FormulaParseError", "UnknownBandError",
    "pdiv", "srt", "rlog", "evaluate", "evaluate_batch",
    "random_tree", "to_formula", "parse_formula",
    "iter_nodes", "get_node", "replace_node", "subtrees",
    "node_count", "depth", "select_node",
    "UNARY_OPS", "BINARY_OPS", "CONST_RANGE",
]

EPS = 1e-12
# Every binary result is clipped here, so products of two clipped values
# stay below the float64 overflow threshold.
MAGNITUDE_LIMIT = 1e150
CONST_RANGE = (0.0, 1000.0)

UNARY_OPS = ("srt", "rlog")
BINARY_OPS = ("add", "sub", "mul", "pdiv")
SYMBOLS = {"add": "+", "sub": "-", "mul": "*", "pdiv": "%"}
PRECEDENCE = {"add": 1, "sub": 1, "mul": 2, "pdiv": 2}


class BandIndexError(IndexError):
    """A band terminal refers to a band the pixel does not have."""


class UnknownBandError(KeyError):
    pass


class FormulaParseError(ValueError):
    """Malformed formula text. ``position`` is the 0-based character offset."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at offset {position}")
        self.position = position


@dataclass(frozen=True)
class BandSchema:
    """Ordered band set of one sensor family.

    ``bands`` holds ``(name, (lo_um, hi_um), code)`` triples.
    """

    sensor_name: str
    bands: tuple

    def __post_init__(self):
        names = [b[0] for b in self.bands]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate band names in schema {self.sensor_name!r}")

    @property
    def names(self) -> list[str]:
        return [b[0] for b in self.bands]

    @property
    def arity(self) -> int:
        return len(self.bands)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise UnknownBandError(
                f"band {name!r} not in schema {self.sensor_name!r}") from None

    def wavelength(self, name: str) -> tuple[float, float]:
        return self.bands[self.index(name)][1]


# -- node types ---------------------------------------------------------------

@dataclass(frozen=True)
class Band:
    index: int
    size: int = field(default=1, init=False, compare=False, repr=False)
    depth: int = field(default=1, init=False, compare=False, repr=False)
    max_band: int = field(default=-1, init=False, compare=False, repr=False)

    def __post_init__(self):
        if self.index < 0:
            raise BandIndexError(f"negative band index {self.index}")
        object.__setattr__(self, "max_band", self.index)

    @property
    def children(self) -> tuple:
        return ()


@dataclass(frozen=True)
class Const:
    value: float
    size: int = field(default=1, init=False, compare=False, repr=False)
    depth: int = field(default=1, init=False, compare=False, repr=False)
    max_band: int = field(default=-1, init=False, compare=False, repr=False)

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError(f"non-finite constant {self.value!r}")
        object.__setattr__(self, "value", float(self.value))

    @property
    def children(self) -> tuple:
        return ()


@dataclass(frozen=True)
class Unary:
    op: str
    child: "ExprTree"
    size: int = field(default=0, init=False, compare=False, repr=False)
    depth: int = field(default=0, init=False, compare=False, repr=False)
    max_band: int = field(default=-1, init=False, compare=False, repr=False)

    def __post_init__(self):
        if self.op not in UNARY_OPS:
            raise ValueError(f"unknown unary operator {self.op!r}")
        object.__setattr__(self, "size", self.child.size + 1)
        object.__setattr__(self, "depth", self.child.depth + 1)
        object.__setattr__(self, "max_band", self.child.max_band)

    @property
    def children(self) -> tuple:
        return (self.child,)


@dataclass(frozen=True)
class Binary:
    op: str
    left: "ExprTree"
    right: "ExprTree"
    size: int = field(default=0, init=False, compare=False, repr=False)
    depth: int = field(default=0, init=False, compare=False, repr=False)
    max_band: int = field(default=-1, init=False, compare=False, repr=False)

    def __post_init__(self):
        if self.op not in BINARY_OPS:
            raise ValueError(f"unknown binary operator {self.op!r}")
        object.__setattr__(self, "size", self.left.size + self.right.size + 1)
        object.__setattr__(self, "depth", max(self.left.depth, self.right.depth) + 1)
        object.__setattr__(self, "max_band", max(self.left.max_band, self.right.max_band))

    @property
    def children(self) -> tuple:
        return (self.left, self.right)


ExprTree = Union[Band, Const, Unary, Binary]


def _with_children(node: ExprTree, children: Sequence[ExprTree]) -> ExprTree:
    if isinstance(node, Unary):
        return Unary(node.op, children[0])
    if isinstance(node, Binary):
        return Binary(node.op, children[0], children[1])
    return node


# -- protected operators ------------------------------------------------------

def _out(value):
    return float(value) if np.ndim(value) == 0 else value


def pdiv(x, y):
    """Protected division: ``x / y``, or 1.0 where ``|y| <= 1e-12``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    small = np.abs(y) <= EPS
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        q = x / np.where(small, 1.0, y)
    return _out(np.where(small, 1.0, q))


def srt(x):
    """Protected square root, ``sqrt(|x|)``."""
    return _out(np.sqrt(np.abs(np.asarray(x, dtype=float))))


def rlog(x):
    """Protected natural log: ``ln|x|``, and 0 where ``|x| <= 1e-12``."""
    a = np.abs(np.asarray(x, dtype=float))
    small = a <= EPS
    return _out(np.where(small, 0.0, np.log(np.where(small, 1.0, a))))


def _clip(v):
    return np.clip(v, -MAGNITUDE_LIMIT, MAGNITUDE_LIMIT)


_UNARY_FUNCS = {"srt": srt, "rlog": rlog}
_BINARY_FUNCS = {
    "add": np.add,
    "sub": np.subtract,
    "mul": np.multiply,
    "pdiv": pdiv,
}


def _scalar_binary(op: str, a: float, b: float) -> float:
    if op == "add":
        r = a + b
    elif op == "sub":
        r = a - b
    elif op == "mul":
        r = a * b
    else:
        r = a / b if abs(b) > EPS else 1.0
    return min(max(r, -MAGNITUDE_LIMIT), MAGNITUDE_LIMIT)


def _scalar_unary(op: str, a: float) -> float:
    if op == "srt":
        return math.sqrt(abs(a))
    return 0.0 if abs(a) <= EPS else math.log(abs(a))


def _check_bands(tree: ExprTree, n_bands: int) -> None:
    if tree.max_band >= n_bands:
        raise BandIndexError(
            f"tree uses band index {tree.max_band} but pixel has {n_bands} bands")


def evaluate(tree: ExprTree, pixel: Sequence[float]) -> float:
    """Evaluate ``tree`` on a single pixel (plain-float path)."""
    pixel = [min(max(float(v), -MAGNITUDE_LIMIT), MAGNITUDE_LIMIT) for v in pixel]
    _check_bands(tree, len(pixel))

    def rec(node):
        if isinstance(node, Band):
            return pixel[node.index]
        if isinstance(node, Const):
            return node.value
        if isinstance(node, Unary):
            return _scalar_unary(node.op, rec(node.child))
        return _scalar_binary(node.op, rec(node.left), rec(node.right))

    return rec(tree)


def evaluate_batch(tree: ExprTree, X) -> np.ndarray:
    """Evaluate ``tree`` on every row of the ``(n_samples, n_bands)`` array ``X``.

    Also accepts a 1-D array, treated as a single pixel, and returns a
    length-1 array in that case.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    _check_bands(tree, X.shape[1])
    X = _clip(X)
    n = X.shape[0]

    def rec(node):
        if isinstance(node, Band):
            return X[:, node.index]
        if isinstance(node, Const):
            return np.full(n, node.value)
        if isinstance(node, Unary):
            return _UNARY_FUNCS[node.op](rec(node.child))
        with np.errstate(over="ignore", invalid="ignore"):
            return _clip(_BINARY_FUNCS[node.op](rec(node.left), rec(node.right)))

    out = rec(tree)
    return np.array(out, dtype=float, copy=True)


# -- random generation --------------------------------------------------------

def _arity(schema) -> int:
    return schema if isinstance(schema, int) else schema.arity


def _random_terminal(rng: np.random.Generator, n_bands: int) -> ExprTree:
    # One ephemeral-constant symbol alongside the bands.
    k = int(rng.integers(n_bands + 1))
    if k < n_bands:
        return Band(k)
    return Const(float(rng.uniform(*CONST_RANGE)))


def _random_function(rng: np.random.Generator) -> str:
    ops = UNARY_OPS + BINARY_OPS
    return ops[int(rng.integers(len(ops)))]


def random_tree(rng: np.random.Generator, schema, max_depth: int,
                method: str = "grow") -> ExprTree:
    """Generate a random tree no deeper than ``max_depth``.

    ``method="full"`` puts every leaf at exactly ``max_depth``; ``"grow"``
    picks terminals or functions at each level in proportion to their
    counts, so leaves may appear at any depth.
    """
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    if method not in ("grow", "full"):
        raise ValueError(f"unknown method {method!r}")
    n_bands = _arity(schema)
    n_terminals = n_bands + 1
    p_terminal = n_terminals / (n_terminals + len(UNARY_OPS) + len(BINARY_OPS))

    def build(d):
        if d == max_depth or (method == "grow" and rng.random() < p_terminal):
            return _random_terminal(rng, n_bands)
        op = _random_function(rng)
        if op in UNARY_OPS:
            return Unary(op, build(d + 1))
        left = build(d + 1)
        return Binary(op, left, build(d + 1))

    return build(1)


# -- structure ----------------------------------------------------------------

def iter_nodes(tree: ExprTree, path: tuple = ()) -> Iterator[tuple[tuple, ExprTree]]:
    """Yield ``(path, node)`` pairs in preorder."""
    stack = [(path, tree)]
    while stack:
        p, node = stack.pop()
        yield p, node
        kids = node.children
        for i in range(len(kids) - 1, -1, -1):
            stack.append((p + (i,), kids[i]))


def get_node(tree: ExprTree, path: tuple) -> ExprTree:
    node = tree
    for i in path:
        node = node.children[i]
    return node


def replace_node(tree: ExprTree, path: tuple, new: ExprTree) -> ExprTree:
    """Return a copy of ``tree`` with the subtree at ``path`` swapped for ``new``."""
    if not path:
        return new
    kids = list(tree.children)
    kids[path[0]] = replace_node(kids[path[0]], path[1:], new)
    return _with_children(tree, kids)


def subtrees(tree: ExprTree) -> list[ExprTree]:
    """One subtree per inner node, each rooted at that node (preorder)."""
    return [node for _, node in iter_nodes(tree) if node.children]


def node_count(tree: ExprTree) -> int:
    return tree.size


def depth(tree: ExprTree) -> int:
    return tree.depth


def select_node(rng: np.random.Generator, tree: ExprTree,
                leaf_bias: float = 0.1) -> tuple:
    """Pick a node path: a leaf with probability ``leaf_bias``, else an inner node."""
    inner, leaves = [], []
    for p, node in iter_nodes(tree):
        (inner if node.children else leaves).append(p)
    if not inner:
        return ()
    pool = leaves if rng.random() < leaf_bias else inner
    return pool[int(rng.integers(len(pool)))]


# -- formula text -------------------------------------------------------------

def _format_const(value: float, digits: int | None) -> str:
    text = repr(value) if digits is None else format(value, f".{digits}g")
    return f"({text})" if value < 0 else text


def to_formula(tree: ExprTree, schema: BandSchema | None = None,
               digits: int | None = None) -> str:
    """Render ``tree`` as infix text.

    Bands are named from ``schema`` (``b0, b1, ...`` without one). Constants
    use ``repr`` for an exact round trip unless ``digits`` significant
    digits are requested.
    """
    names = schema.names if schema is not None else None

    def rec(node):
        if isinstance(node, Band):
            if names is None:
                return f"b{node.index}"
            if node.index >= len(names):
                raise BandIndexError(
                    f"band index {node.index} outside schema {schema.sensor_name!r}")
            return names[node.index]
        if isinstance(node, Const):
            return _format_const(node.value, digits)
        if isinstance(node, Unary):
            return f"{node.op}({rec(node.child)})"
        prec = PRECEDENCE[node.op]
        left, right = rec(node.left), rec(node.right)
        if isinstance(node.left, Binary) and PRECEDENCE[node.left.op] < prec:
            left = f"({left})"
        if isinstance(node.right, Binary) and PRECEDENCE[node.right.op] <= prec:
            right = f"({right})"
        return f"{left} {SYMBOLS[node.op]} {right}"

    return rec(tree)


_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*%()−])
""", re.VERBOSE)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens, pos = [], 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise FormulaParseError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            value = m.group()
            if value == "−":
                value = "-"
            tokens.append((kind, value, pos))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, schema: BandSchema | None):
        self.tokens = _tokenize(text)
        self.i = 0
        self.schema = schema

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, v, pos = self.take()
        if v != value or kind == "end":
            what = "end of input" if kind == "end" else repr(v)
            raise FormulaParseError(f"expected {value!r}, got {what}", pos)

    def parse(self) -> ExprTree:
        tree = self.expr()
        kind, v, pos = self.peek()
        if kind != "end":
            raise FormulaParseError(f"unexpected {v!r}", pos)
        return tree

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = "add" if self.take()[1] == "+" else "sub"
            node = Binary(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek()[1] in ("*", "%") and self.peek()[0] == "op":
            op = "mul" if self.take()[1] == "*" else "pdiv"
            node = Binary(op, node, self.factor())
        return node

    def factor(self):
        kind, v, pos = self.take()
        if kind == "num":
            return Const(float(v))
        if kind == "op" and v == "-" and self.peek()[0] == "num":
            return Const(-float(self.take()[1]))
        if kind == "op" and v == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "name":
            if v in UNARY_OPS and self.peek()[1] == "(":
                self.take()
                node = self.expr()
                self.expect(")")
                return Unary(v, node)
            return self.band(v, pos)
        what = "end of input" if kind == "end" else repr(v)
        raise FormulaParseError(f"unexpected {what}", pos)

    def band(self, name: str, pos: int) -> Band:
        if self.schema is None:
            m = re.fullmatch(r"b(\d+)", name)
            if m is None:
                raise UnknownBandError(f"unknown band {name!r} at offset {pos}")
            return Band(int(m.group(1)))
        if name not in self.schema.names:
            raise UnknownBandError(
                f"unknown band {name!r} at offset {pos} for schema "
                f"{self.schema.sensor_name!r}")
        return Band(self.schema.index(name))


def parse_formula(text: str, schema: BandSchema | None = None) -> ExprTree:
    """Parse infix formula text produced by :func:`to_formula`.

    Accepts ``+ - * %``, ``srt(...)``, ``rlog(...)``, numeric literals and
    band names from ``schema``. The Unicode minus sign is read as ``-``.
    """
    return _Parser(text, schema).parse()
