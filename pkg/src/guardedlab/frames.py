"""Finite frames with a well-founded basis, and the propositional later modality.

A finite frame is the same thing as a finite distributive lattice, so frames
are given extensionally by their opens and order; joins and meets are
tabulated at construction.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property, lru_cache, reduce

from .order import Check, FinitePreorder, WfRelation, reflexive_transitive_closure


@dataclass(frozen=True)
class FiniteFrame:
    opens: tuple
    leq: frozenset
    bottom: object = field(init=False)
    top: object = field(init=False)
    _join: dict = field(init=False, repr=False, compare=False)
    _meet: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        FinitePreorder(self.opens, self.leq)
        if any(u != v and (v, u) in self.leq for u, v in self.leq):
            raise ValueError("frame order is not antisymmetric")
        if not self.opens:
            raise ValueError("a frame has at least one open")
        join, meet = {}, {}
        for u, v in itertools.product(self.opens, repeat=2):
            ub = [w for w in self.opens if (u, w) in self.leq and (v, w) in self.leq]
            lb = [w for w in self.opens if (w, u) in self.leq and (w, v) in self.leq]
            lub = [w for w in ub if all((w, x) in self.leq for x in ub)]
            glb = [w for w in lb if all((x, w) in self.leq for x in lb)]
            if len(lub) != 1 or len(glb) != 1:
                raise ValueError(f"not a lattice: {u!r}, {v!r} lack a join or meet")
            join[u, v], meet[u, v] = lub[0], glb[0]
        bottoms = [w for w in self.opens if all((w, x) in self.leq for x in self.opens)]
        tops = [w for w in self.opens if all((x, w) in self.leq for x in self.opens)]
        object.__setattr__(self, "_join", join)
        object.__setattr__(self, "_meet", meet)
        object.__setattr__(self, "bottom", bottoms[0])
        object.__setattr__(self, "top", tops[0])
        for a, b, c in itertools.product(self.opens, repeat=3):
            if meet[a, join[b, c]] != join[meet[a, b], meet[a, c]]:
                raise ValueError(f"not distributive at {(a, b, c)!r}")

    def le(self, u, v) -> bool:
        return (u, v) in self.leq

    def meet(self, u, v):
        return self._meet[u, v]

    def join(self, u, v):
        return self._join[u, v]

    def join_all(self, us) -> object:
        return reduce(self.join, us, self.bottom)

    def meet_all(self, us) -> object:
        return reduce(self.meet, us, self.top)


@dataclass(frozen=True)
class BasedFrame:
    frame: FiniteFrame
    basis: tuple
    basis_prec: frozenset

    def __post_init__(self):
        object.__setattr__(self, "basis", tuple(self.basis))
        object.__setattr__(self, "basis_prec", frozenset(map(tuple, self.basis_prec)))
        fr = self.frame
        for k in self.basis:
            if k not in fr.opens:
                raise ValueError(f"basis element {k!r} is not an open")
        for u in fr.opens:
            if fr.join_all(k for k in self.basis if fr.le(k, u)) != u:
                raise ValueError(f"open {u!r} is not the join of the basis elements below it")
        for k, l in self.basis_prec:
            if k not in self.basis or l not in self.basis:
                raise ValueError(f"basis_prec pair {(k, l)!r} leaves the basis")

    @cached_property
    def pred_table(self) -> dict:
        fr = self.frame
        table = {}
        for u in fr.opens:
            below_u = [l for l in self.basis if fr.le(l, u)]
            table[u] = fr.join_all(
                k for k in self.basis if any((k, l) in self.basis_prec for l in below_u)
            )
        return table

    def basis_wf(self) -> WfRelation:
        """The basis as a preorder with its candidate well-founded relation."""
        leq = frozenset((k, l) for k in self.basis for l in self.basis if self.frame.le(k, l))
        return WfRelation(FinitePreorder(self.basis, leq), self.basis_prec)


def _downsets(p: FinitePreorder) -> list:
    elems = p.elements
    out = []
    for bits in itertools.product((False, True), repeat=len(elems)):
        s = frozenset(e for e, b in zip(elems, bits) if b)
        if all(x in s for e in s for x in p.down(e)):
            out.append(s)
    index = {e: i for i, e in enumerate(elems)}
    out.sort(key=lambda s: (len(s), sorted(index[e] for e in s)))
    return out


@lru_cache(maxsize=256)
def _downset_lattice(poset: FinitePreorder) -> FiniteFrame:
    opens = _downsets(poset)
    return FiniteFrame(tuple(opens), frozenset((u, v) for u in opens for v in opens if u <= v))


def downset_frame(p) -> BasedFrame:
    """Downsets of a poset under inclusion, based on the principal downsets.

    ``p`` is a :class:`WfRelation` (its strict relation becomes the basis
    relation) or a bare :class:`FinitePreorder` (empty basis relation).
    """
    if isinstance(p, WfRelation):
        poset, prec = p.base, p.prec
    else:
        poset, prec = p, frozenset()
    if not poset.is_antisymmetric():
        raise ValueError("downset_frame needs a poset; take the poset reflection first")
    frame = _downset_lattice(poset)
    principal = {e: poset.down(e) for e in poset.elements}
    basis = tuple(principal[e] for e in poset.elements)
    return BasedFrame(frame, basis, frozenset((principal[u], principal[v]) for u, v in prec))


def explicit_frame(opens, leq_pairs, basis, basis_prec) -> BasedFrame:
    opens = tuple(opens)
    frame = FiniteFrame(opens, reflexive_transitive_closure(opens, map(tuple, leq_pairs)))
    return BasedFrame(frame, tuple(basis), frozenset(map(tuple, basis_prec)))


def loop_frame() -> BasedFrame:
    """Two opens, one basis element related to itself: well-foundedness fails."""
    return explicit_frame(["bot", "u"], [("bot", "u")], ["u"], [("u", "u")])


def heyting_implies(fr: FiniteFrame, u, v):
    return fr.join_all(w for w in fr.opens if fr.le(fr.meet(w, u), v))


def predecessor(bf: BasedFrame, u):
    """Join of the basis elements related by basis_prec to some basis element below ``u``."""
    return bf.pred_table[u]


def later_prop(bf: BasedFrame, phi):
    fr = bf.frame
    return fr.join_all(u for u in fr.opens if fr.le(predecessor(bf, u), phi))


def check_wellpointed_lex(bf: BasedFrame) -> list:
    """Monotonicity, preservation of top and binary meets by the later modality."""
    fr = bf.frame
    lat = {u: later_prop(bf, u) for u in fr.opens}
    mono = next(((u, v) for u, v in sorted(fr.leq, key=repr) if not fr.le(lat[u], lat[v])), None)
    meets = next(
        (
            (u, v)
            for u, v in itertools.product(fr.opens, repeat=2)
            if lat[fr.meet(u, v)] != fr.meet(lat[u], lat[v])
        ),
        None,
    )
    return [
        Check("monotone", mono is None, mono),
        Check("preserves_top", lat[fr.top] == fr.top, None if lat[fr.top] == fr.top else lat[fr.top]),
        Check("preserves_meets", meets is None, meets),
    ]


def check_loeb(bf: BasedFrame) -> Check:
    """Loeb induction: whenever (later phi => phi) is top, phi is top.

    Opens are tried in frame order and the first failing one is the witness.
    """
    fr = bf.frame
    for phi in fr.opens:
        if heyting_implies(fr, later_prop(bf, phi), phi) == fr.top and phi != fr.top:
            return Check("loeb", False, phi)
    return Check("loeb", True)
