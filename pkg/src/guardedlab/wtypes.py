"""Well-founded trees of a finite polynomial and their plump ordering."""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass

from .order import FinitePreorder, PosetReflection, WfRelation, poset_reflection

MAX_TREES = 20_000


@dataclass(frozen=True)
class Polynomial:
    """Shapes ``b`` with fibers ``0 .. fiber_size[b]-1``."""

    shapes: tuple
    fiber_size: tuple

    def __post_init__(self):
        object.__setattr__(self, "shapes", tuple(self.shapes))
        object.__setattr__(self, "fiber_size", tuple(self.fiber_size))
        if len(self.shapes) != len(self.fiber_size):
            raise ValueError("one fiber size per shape")
        if any(n < 0 for n in self.fiber_size):
            raise ValueError("fiber sizes are non-negative")
        if self.shapes and 0 not in self.fiber_size:
            warnings.warn("no shape has an empty fiber: there are no finite trees", stacklevel=2)

    def fiber(self, shape) -> range:
        return range(self.fiber_size[self.shapes.index(shape)])


def unary_chain() -> Polynomial:
    """Two shapes with fibers empty and a point; its trees are the natural numbers."""
    return Polynomial(("leaf", "node"), (0, 1))


def binary_trees() -> Polynomial:
    return Polynomial(("leaf", "node"), (0, 2))


@dataclass(frozen=True)
class WTree:
    shape: object
    children: tuple = ()

    def depth(self) -> int:
        """Edges on the longest branch; a leaf has depth 0."""
        return max((1 + c.depth() for c in self.children), default=0)

    def subtrees(self) -> set:
        out = {self}
        for c in self.children:
            out |= c.subtrees()
        return out

    def __str__(self):
        if not self.children:
            return str(self.shape)
        return f"{self.shape}({', '.join(map(str, self.children))})"


def count_wtrees(p: Polynomial, depth: int) -> int:
    """Number of trees of depth below ``depth``, without building them."""
    n = 0
    for _ in range(depth):
        n = sum(n**k for k in p.fiber_size)
    return n


def build_wtrees(p: Polynomial, depth: int, cap: int = MAX_TREES) -> list:
    """All trees of depth below ``depth``: ``depth`` rounds of growth from nothing."""
    if depth < 0:
        raise ValueError("depth must be non-negative")
    total = count_wtrees(p, depth)
    if total > cap:
        raise OverflowError(f"{total} trees below depth {depth} exceeds the cap of {cap}")
    trees: list = []
    for _ in range(depth):
        trees = [
            WTree(shape, kids)
            for shape, k in zip(p.shapes, p.fiber_size)
            for kids in itertools.product(trees, repeat=k)
        ]
    return sorted(trees, key=lambda t: (t.depth(), str(t)))


def plump_order(trees) -> tuple[frozenset, frozenset]:
    """Least pair (weak, strict) closed under the two plump rules.

    ``sigma(a, c)`` is weakly below ``w`` when every child is strictly below
    ``w``; ``w`` is strictly below ``sigma(a, c)`` when ``w`` is weakly below
    some child.  Computed by simultaneous Kleene iteration.
    """
    trees = list(trees)
    pool = set(trees)
    for t in trees:
        if not set(t.children) <= pool:
            raise ValueError(f"tree set is not closed under subtrees at {t}")
    weak: set = set()
    strict: set = set()
    while True:
        new_weak = {
            (t, w) for t in trees for w in trees if all((c, w) in strict for c in t.children)
        }
        new_strict = {
            (w, t) for t in trees for w in trees if any((w, c) in weak for c in t.children)
        }
        if new_weak == weak and new_strict == strict:
            return frozenset(weak), frozenset(strict)
        weak, strict = new_weak, new_strict


def plump_preorder(p: Polynomial, depth: int, cap: int = MAX_TREES) -> WfRelation:
    trees = build_wtrees(p, depth, cap)
    weak, strict = plump_order(trees)
    return WfRelation(FinitePreorder(tuple(trees), weak), strict)


def plump_poset(p: Polynomial, depth: int, cap: int = MAX_TREES) -> PosetReflection:
    w = plump_preorder(p, depth, cap)
    return poset_reflection(w.base, w.prec)
