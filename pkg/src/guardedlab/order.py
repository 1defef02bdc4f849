"""Finite preorders, compatible well-founded relations and poset reflection.

Relations are stored as frozensets of pairs over a small carrier.  Every
check here is decidable by brute force because the carriers are finite.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Hashable, Iterable

Relation = frozenset  # of (u, v) pairs


def reflexive_transitive_closure(elements: Iterable[Hashable], pairs: Iterable[tuple]) -> frozenset:
    elements = list(elements)
    rel = set(pairs) | {(u, u) for u in elements}
    return transitive_closure(rel)


def transitive_closure(pairs: Iterable[tuple]) -> frozenset:
    rel = set(pairs)
    while True:
        extra = {(a, d) for (a, b) in rel for (c, d) in rel if b == c} - rel
        if not extra:
            return frozenset(rel)
        rel |= extra


def _is_transitive(rel: frozenset) -> tuple | None:
    succ: dict = {}
    for a, b in rel:
        succ.setdefault(a, set()).add(b)
    for a, b in sorted(rel, key=repr):
        for c in sorted(succ.get(b, ()), key=repr):
            if (a, c) not in rel:
                return (a, b, c)
    return None


@dataclass(frozen=True)
class FinitePreorder:
    elements: tuple
    leq: frozenset

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        object.__setattr__(self, "leq", frozenset(map(tuple, self.leq)))
        if len(set(self.elements)) != len(self.elements):
            raise ValueError("duplicate element names")
        carrier = set(self.elements)
        for u, v in self.leq:
            if u not in carrier or v not in carrier:
                raise ValueError(f"pair {(u, v)!r} mentions an unknown element")
        for u in self.elements:
            if (u, u) not in self.leq:
                raise ValueError(f"leq is not reflexive at {u!r}")
        bad = _is_transitive(self.leq)
        if bad is not None:
            raise ValueError(f"leq is not transitive: {bad!r}")

    def le(self, u, v) -> bool:
        return (u, v) in self.leq

    def is_antisymmetric(self) -> bool:
        return all(u == v or (v, u) not in self.leq for u, v in self.leq)

    def strict(self) -> frozenset:
        """Pairs u <= v with not v <= u."""
        return frozenset((u, v) for u, v in self.leq if (v, u) not in self.leq)

    def down(self, u) -> frozenset:
        return frozenset(x for x in self.elements if (x, u) in self.leq)

    def up(self, u) -> frozenset:
        return frozenset(x for x in self.elements if (u, x) in self.leq)

    def restrict(self, subset: Iterable) -> "FinitePreorder":
        keep = set(subset)
        elems = tuple(e for e in self.elements if e in keep)
        return FinitePreorder(elems, frozenset((u, v) for u, v in self.leq if u in keep and v in keep))

    @classmethod
    def from_pairs(cls, elements: Iterable, pairs: Iterable[tuple]) -> "FinitePreorder":
        elements = tuple(elements)
        return cls(elements, reflexive_transitive_closure(elements, pairs))


FinitePoset = FinitePreorder


@dataclass(frozen=True)
class WfRelation:
    base: FinitePreorder
    prec: frozenset

    def __post_init__(self):
        object.__setattr__(self, "prec", frozenset(map(tuple, self.prec)))
        carrier = set(self.base.elements)
        for u, v in self.prec:
            if u not in carrier or v not in carrier:
                raise ValueError(f"prec pair {(u, v)!r} mentions an unknown element")

    def strict_part(self) -> frozenset:
        """Elements lying strictly below another element."""
        return frozenset(u for u, _ in self.prec)


def chain(n: int, strict: bool = True) -> WfRelation:
    """The chain 0 <= 1 <= ... <= n-1, with < as the well-founded part when ``strict``."""
    elems = tuple(range(n))
    leq = frozenset((i, j) for i in elems for j in elems if i <= j)
    prec = frozenset((i, j) for i in elems for j in elems if i < j) if strict else frozenset()
    return WfRelation(FinitePreorder(elems, leq), prec)


def antichain(n: int) -> FinitePreorder:
    elems = tuple(range(n))
    return FinitePreorder(elems, frozenset((i, i) for i in elems))


def accessible_set(carrier: Iterable, rel: Iterable[tuple]) -> frozenset:
    """Least fixed point of ``S -> {u | every v R u lies in S}``, by Kleene iteration."""
    carrier = tuple(carrier)
    below: dict = {u: set() for u in carrier}
    for v, u in rel:
        below.setdefault(u, set()).add(v)
    acc: frozenset = frozenset()
    while True:
        nxt = frozenset(u for u in carrier if below[u] <= acc)
        if nxt == acc:
            return acc
        acc = nxt


@dataclass
class Check:
    name: str
    ok: bool
    witness: object = None

    def __bool__(self):
        return self.ok


@dataclass
class WfReport:
    checks: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def __bool__(self):
        return self.ok

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def failures(self) -> list:
        return [c for c in self.checks if not c.ok]


def is_compatible_wf(w: WfRelation) -> WfReport:
    """Check the axioms of a compatible well-founded relation, one by one.

    Each failing axiom carries a witness: a pair for the subrelation check,
    a triple for transitivity and compatibility, and an inaccessible
    element (with a prec-loop through it when one exists) for
    well-foundedness.
    """
    leq, prec = w.base.leq, w.prec
    order = {e: i for i, e in enumerate(w.base.elements)}
    key = lambda t: tuple(order[x] for x in t)  # noqa: E731
    report = WfReport()

    outside = sorted((p for p in prec if p not in leq), key=key)
    report.checks.append(Check("subrelation", not outside, outside[0] if outside else None))

    trans = None
    for a, b in sorted(prec, key=key):
        for c in w.base.elements:
            if (b, c) in prec and (a, c) not in prec:
                trans = (a, b, c)
                break
        if trans:
            break
    report.checks.append(Check("transitive", trans is None, trans))

    elems = w.base.elements
    left = right = None
    for u, v, x in itertools.product(elems, repeat=3):
        if left is None and (u, v) in leq and (v, x) in prec and (u, x) not in prec:
            left = (u, v, x)
        if right is None and (u, v) in prec and (v, x) in leq and (u, x) not in prec:
            right = (u, v, x)
    report.checks.append(Check("left_compatible", left is None, left))
    report.checks.append(Check("right_compatible", right is None, right))

    acc = accessible_set(elems, prec)
    missing = [e for e in elems if e not in acc]
    witness = None
    if missing:
        loops = [(u, v) for (u, v) in sorted(prec, key=key) if u in missing and v in missing]
        witness = loops[0] if loops else missing[0]
    report.checks.append(Check("well_founded", not missing, witness))
    return report


@dataclass(frozen=True)
class PosetReflection:
    quotient: FinitePreorder
    map: dict
    reflected_prec: frozenset

    def as_wf(self) -> WfRelation:
        return WfRelation(self.quotient, self.reflected_prec)


def poset_reflection(pre: FinitePreorder, prec: Iterable[tuple]) -> PosetReflection:
    prec = frozenset(prec)
    report = is_compatible_wf(WfRelation(pre, prec))
    if not report.ok:
        raise ValueError(f"not a compatible well-founded relation: {report.failures()[0]}")
    classes: dict = {}
    for e in pre.elements:
        for rep in classes:
            if pre.le(e, rep) and pre.le(rep, e):
                classes[rep].append(e)
                break
        else:
            classes[e] = [e]
    qmap = {e: rep for rep, members in classes.items() for e in members}
    reps = tuple(classes)
    qleq = frozenset((qmap[u], qmap[v]) for u, v in pre.leq)
    qprec = frozenset(
        (a, b)
        for a in reps
        for b in reps
        if all((x, y) in prec for x in classes[a] for y in classes[b])
    )
    return PosetReflection(FinitePreorder(reps, qleq), qmap, qprec)


def is_connected(p: FinitePreorder) -> bool:
    """Connectedness of the comparability graph; the empty poset counts as connected."""
    if not p.elements:
        return True
    seen = {p.elements[0]}
    todo = [p.elements[0]]
    while todo:
        u = todo.pop()
        for v in p.elements:
            if v not in seen and (p.le(u, v) or p.le(v, u)):
                seen.add(v)
                todo.append(v)
    return len(seen) == len(p.elements)


def _locally_constant(domain: tuple, values: tuple, p: FinitePreorder):
    """Families domain -> values that agree along comparable pairs, as tuples."""
    out = []
    for fam in itertools.product(values, repeat=len(domain)):
        assign = dict(zip(domain, fam))
        if all(assign[u] == assign[v] for u in domain for v in domain if p.le(u, v)):
            out.append(fam)
    return out


def global_sections(w: WfRelation, values: Iterable) -> tuple[list, list, dict]:
    """Global sections of the constant presheaf A and of its later, plus the comparison map.

    Returns ``(gamma_a, gamma_later_a, pred_of)`` where sections of the
    later are dicts ``u -> family over Pred(down u)`` and ``pred_of[u]`` is
    that predecessor downset in element order.
    """
    from .frames import downset_frame, predecessor

    p = w.base
    values = tuple(values)
    bf = downset_frame(w)
    pred_of = {u: tuple(e for e in p.elements if e in predecessor(bf, p.down(u))) for u in p.elements}
    gamma_a = _locally_constant(p.elements, values, p)

    local = {u: _locally_constant(pred_of[u], values, p) for u in p.elements}
    order = sorted(p.elements, key=lambda u: len(p.down(u)))
    sections: list = []

    def extend(i: int, chosen: dict):
        if i == len(order):
            sections.append(dict(chosen))
            return
        u = order[i]
        for fam in local[u]:
            here = dict(zip(pred_of[u], fam))
            ok = True
            for v, other in chosen.items():
                lo, hi = (v, u) if p.le(v, u) else (u, v) if p.le(u, v) else (None, None)
                if lo is None:
                    continue
                lo_fam = here if lo == u else dict(zip(pred_of[v], other))
                hi_fam = here if hi == u else dict(zip(pred_of[v], other))
                if any(hi_fam[x] != lo_fam[x] for x in lo_fam):
                    ok = False
                    break
            if ok:
                chosen[u] = fam
                extend(i + 1, chosen)
                del chosen[u]

    extend(0, {})
    return gamma_a, sections, pred_of


def check_global_adequacy(w: WfRelation, values: Iterable) -> bool:
    """Is the comparison map from sections of A to sections of later-A a bijection?"""
    gamma_a, gamma_later, pred_of = global_sections(w, values)
    elems = w.base.elements
    image = set()
    for fam in gamma_a:
        a = dict(zip(elems, fam))
        image.add(tuple((u, tuple(a[v] for v in pred_of[u])) for u in elems))
    targets = {tuple((u, s[u]) for u in elems) for s in gamma_later}
    return len(image) == len(gamma_a) and image == targets


# -- exhaustive generation ---------------------------------------------------


@lru_cache(maxsize=None)
def all_posets(n: int) -> tuple:
    """Every poset on ``range(n)`` up to isomorphism, labelled along a linear extension."""
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    perms = list(itertools.permutations(range(n)))
    seen = set()
    out = []
    for mask in range(1 << len(pairs)):
        lt = {pairs[b] for b in range(len(pairs)) if mask >> b & 1}
        if _is_transitive(frozenset(lt)) is not None:
            continue
        canon = min(tuple(sorted((s[a], s[b]) for a, b in lt)) for s in perms)
        if canon in seen:
            continue
        seen.add(canon)
        elems = tuple(range(n))
        out.append(FinitePreorder(elems, frozenset(lt) | {(i, i) for i in elems}))
    return tuple(out)


def compatible_wf_relations(p: FinitePreorder) -> list:
    """All compatible well-founded relations on ``p``, by subset enumeration of the strict order."""
    strict = sorted(p.strict(), key=repr)
    out = []
    for mask in range(1 << len(strict)):
        prec = frozenset(strict[b] for b in range(len(strict)) if mask >> b & 1)
        w = WfRelation(p, prec)
        if is_compatible_wf(w).ok:
            out.append(w)
    return out


def _components(nodes, linked) -> dict:
    """Union-find over ``nodes``; ``linked`` yields pairs to merge. Returns node -> root."""
    parent = {x: x for x in nodes}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in linked:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
    return {x: find(x) for x in nodes}


def strict_pair_components(w: WfRelation) -> dict:
    """Components of the pairs ``(v, u)`` with ``v < u``, joined when they share ``v`` along
    ``u <= u'`` or share ``u`` along ``v <= v'``."""
    p = w.base
    pairs = sorted(w.prec, key=repr)
    links = [
        ((v, u), (v2, u2))
        for (v, u) in pairs
        for (v2, u2) in pairs
        if (v == v2 and p.le(u, u2)) or (u == u2 and p.le(v, v2))
    ]
    return _components(pairs, links)


def adequacy_predicted(w: WfRelation) -> bool:
    """Sharp criterion for adequacy with at least two values: each component of the
    pairs category sits over a distinct component of the poset, and every poset
    component carries one."""
    p = w.base
    poset_comp = _components(p.elements, [(u, v) for u, v in p.leq])
    pair_comp = strict_pair_components(w)
    image: dict = {}
    for (v, u), c in pair_comp.items():
        image.setdefault(c, poset_comp[v])
    over = list(image.values())
    return len(set(over)) == len(over) and set(over) == set(poset_comp.values())


def strict_lower_part(w: WfRelation) -> FinitePreorder:
    """The subposet of elements lying strictly below some element."""
    lower = {v for v, _ in w.prec}
    return w.base.restrict(e for e in w.base.elements if e in lower)


def adequacy_hypothesis(w: WfRelation) -> bool:
    """The poset and its strictly-lower part are both connected (empty counts as connected)."""
    return is_connected(w.base) and is_connected(strict_lower_part(w))


def is_isomorphic(a: WfRelation, b: WfRelation) -> bool:
    """Brute-force search for a bijection carrying both the order and the strict relation."""
    ea, eb = a.base.elements, b.base.elements
    if len(ea) != len(eb) or len(a.base.leq) != len(b.base.leq) or len(a.prec) != len(b.prec):
        return False
    for perm in itertools.permutations(eb):
        m = dict(zip(ea, perm))
        if all((m[u], m[v]) in b.base.leq for u, v in a.base.leq) and all(
            (m[u], m[v]) in b.prec for u, v in a.prec
        ):
            return True
    return False
