"""Propositional geometric theories, filter theories of posets, and bag theories.

Models are boolean assignments; a bag model is an index set ``K`` with a
family of models of the underlying theory.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb
from typing import Iterable, NamedTuple

from .order import FinitePreorder

# -- formulas ------------------------------------------------------------------


class Top(NamedTuple):
    def __str__(self):
        return "T"


class Sym(NamedTuple):
    name: object

    def __str__(self):
        return f"<{self.name}>"


class And(NamedTuple):
    parts: tuple

    def __str__(self):
        return "(" + " & ".join(map(str, self.parts)) + ")" if self.parts else "T"


class Or(NamedTuple):
    parts: tuple

    def __str__(self):
        return "(" + " | ".join(map(str, self.parts)) + ")" if self.parts else "F"


TOP = Top()


def conj(*parts) -> And:
    return And(tuple(parts))


def disj(parts: Iterable) -> Or:
    return Or(tuple(parts))


def symbols_of(phi) -> set:
    if isinstance(phi, Sym):
        return {phi.name}
    if isinstance(phi, (And, Or)):
        return set().union(*(symbols_of(p) for p in phi.parts))
    return set()


def holds(phi, true_set) -> bool:
    if isinstance(phi, Top):
        return True
    if isinstance(phi, Sym):
        return phi.name in true_set
    if isinstance(phi, And):
        return all(holds(p, true_set) for p in phi.parts)
    if isinstance(phi, Or):
        return any(holds(p, true_set) for p in phi.parts)
    raise TypeError(f"not a formula: {phi!r}")


def rename_formula(phi, ren: dict):
    if isinstance(phi, Sym):
        return Sym(ren[phi.name])
    if isinstance(phi, And):
        return And(tuple(rename_formula(p, ren) for p in phi.parts))
    if isinstance(phi, Or):
        return Or(tuple(rename_formula(p, ren) for p in phi.parts))
    return phi


class Sequent(NamedTuple):
    lhs: object
    rhs: object

    def __str__(self):
        return f"{self.lhs} |- {self.rhs}"


@dataclass(frozen=True)
class GeometricTheory:
    symbols: tuple
    sequents: tuple

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(self.symbols))
        object.__setattr__(self, "sequents", tuple(Sequent(*s) for s in self.sequents))
        declared = set(self.symbols)
        if len(declared) != len(self.symbols):
            raise ValueError("duplicate symbol")
        for i, s in enumerate(self.sequents):
            extra = (symbols_of(s.lhs) | symbols_of(s.rhs)) - declared
            if extra:
                raise ValueError(f"sequent {i} uses undeclared symbol(s) {sorted(map(str, extra))}")

    def satisfied_by(self, true_set) -> bool:
        return all(not holds(s.lhs, true_set) or holds(s.rhs, true_set) for s in self.sequents)


def enumerate_models(t: GeometricTheory) -> list:
    """True-sets of every satisfying assignment, in a stable order."""
    out = []
    for bits in itertools.product((False, True), repeat=len(t.symbols)):
        true_set = frozenset(s for s, b in zip(t.symbols, bits) if b)
        if t.satisfied_by(true_set):
            out.append(true_set)
    return out


def rename_theory(t: GeometricTheory, ren: dict) -> GeometricTheory:
    """Push a theory along an injective symbol renaming."""
    if len(set(ren.values())) != len(ren):
        raise ValueError("renaming must be injective")
    return GeometricTheory(
        tuple(ren[s] for s in t.symbols),
        tuple(Sequent(rename_formula(s.lhs, ren), rename_formula(s.rhs, ren)) for s in t.sequents),
    )


# -- filters -----------------------------------------------------------------


def filt_theory(p: FinitePreorder) -> GeometricTheory:
    """Up-closure, inhabitation and downward directedness as sequents."""
    el = p.elements
    seqs = [Sequent(Sym(u), Sym(v)) for u in el for v in el if p.le(u, v) and u != v]
    seqs.append(Sequent(TOP, disj(Sym(u) for u in el)))
    for u, v in itertools.combinations_with_replacement(el, 2):
        lower = [w for w in el if p.le(w, u) and p.le(w, v)]
        seqs.append(Sequent(conj(Sym(u), Sym(v)), disj(Sym(w) for w in lower)))
    return GeometricTheory(el, seqs)


def chain_simplify(p: FinitePreorder) -> GeometricTheory:
    """Filter theory of a total order without the directedness sequents."""
    el = p.elements
    if not all(p.le(u, v) or p.le(v, u) for u in el for v in el):
        raise ValueError("the directedness sequents can only be dropped for a total order")
    seqs = [Sequent(Sym(u), Sym(v)) for u in el for v in el if p.le(u, v) and u != v]
    seqs.append(Sequent(TOP, disj(Sym(u) for u in el)))
    return GeometricTheory(el, seqs)


def _meet(p: FinitePreorder, u, v):
    lower = [w for w in p.elements if p.le(w, u) and p.le(w, v)]
    best = [w for w in lower if all(p.le(x, w) for x in lower)]
    return best[0] if best else None


def cartesian_simplify(p: FinitePreorder) -> GeometricTheory:
    """Filter theory of a meet-semilattice with top, using only cartesian sequents."""
    el = p.elements
    tops = [t for t in el if all(p.le(u, t) for u in el)]
    if not tops:
        raise ValueError("poset has no top element")
    seqs = [Sequent(Sym(u), Sym(v)) for u in el for v in el if p.le(u, v) and u != v]
    seqs.append(Sequent(TOP, Sym(tops[0])))
    for u, v in itertools.combinations(el, 2):
        m = _meet(p, u, v)
        if m is None:
            raise ValueError(f"{u!r} and {v!r} have no meet")
        seqs.append(Sequent(conj(Sym(u), Sym(v)), Sym(m)))
    return GeometricTheory(el, seqs)


def filters_oracle(p: FinitePreorder) -> list:
    """Nonempty, up-closed, down-directed subsets, by direct subset enumeration."""
    el = p.elements
    out = []
    for bits in itertools.product((False, True), repeat=len(el)):
        s = frozenset(e for e, b in zip(el, bits) if b)
        if not s:
            continue
        if any(p.le(u, v) and v not in s for u in s for v in el):
            continue
        if all(any(p.le(w, u) and p.le(w, v) for w in s) for u in s for v in s):
            out.append(s)
    return out


# -- bag theories --------------------------------------------------------------


@dataclass(frozen=True)
class BagTheory:
    """Index sort ``K`` with a predicate ``phi[k]`` per symbol and the sequents read at each ``k``."""

    base: GeometricTheory
    inhabited: bool = False

    @property
    def predicates(self) -> tuple:
        return self.base.symbols

    @property
    def indexed_sequents(self) -> tuple:
        return tuple(("k:K", s) for s in self.base.sequents)

    @property
    def sequents(self) -> tuple:
        extra = (("", Sequent(TOP, "exists k:K. T")),) if self.inhabited else ()
        return self.indexed_sequents + extra

    def __str__(self):
        lines = [f"sort K; predicates {', '.join(f'{s}[k]' for s in self.predicates) or '(none)'}"]
        lines += [f"{ctx} | {seq}" for ctx, seq in self.sequents]
        return "\n".join(lines)


def bag_theory(t: GeometricTheory) -> BagTheory:
    return BagTheory(t, False)


def ibag_theory(t: GeometricTheory) -> BagTheory:
    return BagTheory(t, True)


EMPTY_THEORY = GeometricTheory((), ())
# a single sort and nothing else
THEORY_OF_AN_OBJECT = BagTheory(EMPTY_THEORY, False)
THEORY_OF_AN_INHABITED_OBJECT = BagTheory(EMPTY_THEORY, True)


class BagModel(NamedTuple):
    index: tuple  # the index set K, as 0 .. |K|-1
    family: tuple  # one true-set per index


def bag_model_holds(b: BagTheory, m: BagModel) -> bool:
    if b.inhabited and not m.index:
        return False
    return all(b.base.satisfied_by(m.family[k]) for k in m.index)


def enumerate_bag_models(b: BagTheory, max_index: int, exact: int | None = None) -> list:
    """Labelled bag models with ``|K| <= max_index`` (or ``|K| == exact``), filtered by the sequents.

    Families range over all assignments, not just models, so the count is an
    independent check of ``|models|^|K|``.
    """
    sizes = [exact] if exact is not None else range(max_index + 1)
    assignments = [
        frozenset(s for s, bit in zip(b.base.symbols, bits) if bit)
        for bits in itertools.product((False, True), repeat=len(b.base.symbols))
    ]
    out = []
    for n in sizes:
        for fam in itertools.product(assignments, repeat=n):
            m = BagModel(tuple(range(n)), fam)
            if bag_model_holds(b, m):
                out.append(m)
    return out


def bag_models_up_to_iso(models: Iterable[BagModel]) -> list:
    """One representative per multiset of family members."""
    seen = {}
    for m in models:
        key = (len(m.index), tuple(sorted(m.family, key=lambda s: sorted(map(repr, s)))))
        seen.setdefault(key, m)
    return list(seen.values())


def bag_count(n_models: int, max_index: int, inhabited: bool = False) -> tuple[int, int]:
    """(raw, up to iso) counts: ``sum |M|^k`` and ``sum C(|M|+k-1, k)`` over admitted ``k``."""
    ks = range(1 if inhabited else 0, max_index + 1)
    raw = sum(n_models**k for k in ks)
    iso = sum(comb(n_models + k - 1, k) if n_models else int(k == 0) for k in ks)
    return raw, iso


def reduct(model: frozenset, ren: dict) -> frozenset:
    """Carry a model of the renamed theory back along the renaming."""
    return frozenset(s for s, t in ren.items() if t in model)


def check_bag_naturality(t: GeometricTheory, ren: dict, max_index: int, inhabited: bool = False) -> bool:
    """Renaming then taking bag models agrees with taking bag models then reducts."""
    make = ibag_theory if inhabited else bag_theory
    here = set(enumerate_bag_models(make(t), max_index))
    there = enumerate_bag_models(make(rename_theory(t, ren)), max_index)
    carried = {BagModel(m.index, tuple(reduct(s, ren) for s in m.family)) for m in there}
    return carried == here and len(carried) == len(there)
