"""Clock contexts, presheaves over them, clock quantification and coinductive streams.

Two views of the clock category live here.  For the category-level checks
(free finite product completion, the opposite-category comparison, the
semidirect product) objects are depth tuples indexed by a finite cardinal.
For presheaves, contexts carry clock *names* so a presheaf can mention the
clocks it depends on.
"""
from __future__ import annotations

import itertools
import random
import threading
from dataclasses import dataclass
from typing import Callable, Iterable, NamedTuple

from .trees import (
    STAR,
    GlobalElement,
    GuardedStream,
    StagedMap,
    StagedSet,
    cons_step,
    gfix,
    later,
)

# -- finite categories -------------------------------------------------------


class FiniteCategory:
    """Objects plus enumerable hom-sets; ``compose(g, f)`` is g after f."""

    name = "C"

    def __init__(self, objects, hom, compose, identity, name: str = "C"):
        self.objects = tuple(objects)
        self._hom, self._compose, self._identity = hom, compose, identity
        self.name = name

    def hom(self, a, b) -> list:
        return self._hom(a, b)

    def compose(self, g, f):
        return self._compose(g, f)

    def identity(self, a):
        return self._identity(a)


def omega_category(max_depth: int) -> FiniteCategory:
    """The fragment ``0 <= 1 <= ... <= max_depth`` of the ordinal omega."""
    return FiniteCategory(
        range(max_depth + 1),
        lambda m, n: [(m, n)] if m <= n else [],
        lambda g, f: (f[0], g[1]),
        lambda m: (m, m),
        f"omega<={max_depth}",
    )


def terminal_category() -> FiniteCategory:
    return FiniteCategory(["*"], lambda a, b: [("*", "*")], lambda g, f: ("*", "*"), lambda a: ("*", "*"), "1")


class FPMorphism(NamedTuple):
    """``Phi -> Psi``: a renaming ``|Psi| -> |Phi|`` and base maps ``Phi[renaming[i]] -> Psi[i]``."""

    src: tuple
    dst: tuple
    renaming: tuple
    comps: tuple


class FPCompletion(FiniteCategory):
    """Free finite product completion of a base category, up to a maximal arity."""

    def __init__(self, base: FiniteCategory, max_arity: int):
        self.base = base
        self.max_arity = max_arity
        objs = [t for n in range(max_arity + 1) for t in itertools.product(base.objects, repeat=n)]
        super().__init__(objs, self._homs, self._comp, self._ident, f"FP({base.name})")

    def _homs(self, phi: tuple, psi: tuple) -> list:
        slots = [
            [(j, m) for j in range(len(phi)) for m in self.base.hom(phi[j], psi[i])]
            for i in range(len(psi))
        ]
        return [
            FPMorphism(phi, psi, tuple(j for j, _ in choice), tuple(m for _, m in choice))
            for choice in itertools.product(*slots)
        ]

    def _comp(self, g: FPMorphism, f: FPMorphism) -> FPMorphism:
        if g.src != f.dst:
            raise ValueError("morphisms are not composable")
        ren = tuple(f.renaming[g.renaming[i]] for i in range(len(g.dst)))
        comps = tuple(self.base.compose(g.comps[i], f.comps[g.renaming[i]]) for i in range(len(g.dst)))
        return FPMorphism(f.src, g.dst, ren, comps)

    def _ident(self, phi: tuple) -> FPMorphism:
        return FPMorphism(phi, phi, tuple(range(len(phi))), tuple(self.base.identity(o) for o in phi))


def fp_completion(base: FiniteCategory, max_arity: int) -> FPCompletion:
    return FPCompletion(base, max_arity)


class KMorphism(NamedTuple):
    src: tuple
    dst: tuple
    h: tuple


class KCategory(FiniteCategory):
    """Depth tuples ``f`` with maps ``h`` such that ``g(h(u)) <= f(u)``; ``nonempty`` gives CLK."""

    def __init__(self, max_clocks: int, max_depth: int, nonempty: bool = False):
        lo = 1 if nonempty else 0
        objs = [
            t for n in range(lo, max_clocks + 1) for t in itertools.product(range(max_depth + 1), repeat=n)
        ]
        super().__init__(objs, self._homs, self._comp, lambda a: KMorphism(a, a, tuple(range(len(a)))),
                         "CLK" if nonempty else "K")

    @staticmethod
    def _homs(a: tuple, b: tuple) -> list:
        slots = [[v for v in range(len(b)) if b[v] <= a[u]] for u in range(len(a))]
        return [KMorphism(a, b, h) for h in itertools.product(*slots)]

    @staticmethod
    def _comp(g: KMorphism, f: KMorphism) -> KMorphism:
        if g.src != f.dst:
            raise ValueError("morphisms are not composable")
        return KMorphism(f.src, g.dst, tuple(g.h[f.h[u]] for u in range(len(f.src))))


def check_category_laws(cat: FiniteCategory, objects=None, sample: int | None = None, seed: int = 0) -> list:
    """Identity and associativity failures, exhaustively or on ``sample`` random triples."""
    objects = list(objects if objects is not None else cat.objects)
    failures = []
    for a, b in itertools.product(objects, repeat=2):
        for f in cat.hom(a, b):
            if cat.compose(cat.identity(b), f) != f or cat.compose(f, cat.identity(a)) != f:
                failures.append(("identity", f))
    triples = _triples(objects, sample, seed)
    for a, b, c, d in triples:
        for f in cat.hom(a, b):
            for g in cat.hom(b, c):
                for h in cat.hom(c, d):
                    if cat.compose(h, cat.compose(g, f)) != cat.compose(cat.compose(h, g), f):
                        failures.append(("associativity", (f, g, h)))
    return failures


def _triples(objects, sample, seed, width=4):
    if sample is None:
        return itertools.product(objects, repeat=width)
    rng = random.Random(seed)
    return [tuple(rng.choice(objects) for _ in range(width)) for _ in range(sample)]


def kcat_hom_valid(src: "ClockContext", dst: "ClockContext", h: dict) -> bool:
    """Is ``h`` a map of clock contexts, i.e. ``depth_dst(h(u)) <= depth_src(u)`` everywhere?"""
    if set(h) != set(src.clocks) or not set(h.values()) <= set(dst.clocks):
        return False
    return all(dst.depth(h[u]) <= src.depth(u) for u in src.clocks)


@dataclass
class IsoReport:
    homs_checked: int = 0
    hom_mismatches: list = None
    functor_failures: list = None

    @property
    def ok(self) -> bool:
        return not self.hom_mismatches and not self.functor_failures


def check_fp_op_iso(max_clocks: int, max_depth: int | None = None, nonempty: bool = False,
                    sample: int = 2000, seed: int = 0) -> IsoReport:
    """Identity-on-objects comparison of ``FP(omega)^op`` (or its nonempty part) with the clock category.

    An FP morphism ``Phi -> Psi`` goes to the clock-context map ``Psi -> Phi``
    given by its renaming.  Hom-sets are compared exhaustively; contravariant
    functoriality is checked on ``sample`` random composable triples.
    """
    max_depth = max_clocks if max_depth is None else max_depth
    fp = FPCompletion(omega_category(max_depth), max_clocks)
    kc = KCategory(max_clocks, max_depth, nonempty)
    report = IsoReport(hom_mismatches=[], functor_failures=[])
    if set(kc.objects) != {o for o in fp.objects if len(o) >= (1 if nonempty else 0)}:
        report.hom_mismatches.append(("objects", None))
        return report

    def to_k(m: FPMorphism) -> KMorphism:
        return KMorphism(m.dst, m.src, m.renaming)

    for a, b in itertools.product(kc.objects, repeat=2):
        fp_side = [to_k(m) for m in fp.hom(b, a)]
        k_side = kc.hom(a, b)
        report.homs_checked += 1
        if len(set(fp_side)) != len(fp_side) or set(fp_side) != set(k_side):
            report.hom_mismatches.append((a, b))
    rng = random.Random(seed)
    objs = list(kc.objects)
    for _ in range(sample):
        a, b, c = (rng.choice(objs) for _ in range(3))
        fs, gs = fp.hom(a, b), fp.hom(b, c)
        if not fs or not gs:
            continue
        f, g = rng.choice(fs), rng.choice(gs)
        if to_k(fp.compose(g, f)) != kc.compose(to_k(f), to_k(g)):
            report.functor_failures.append((f, g))
    return report


# -- the semidirect product with the generic clock -----------------------------


class GrothMorphism(NamedTuple):
    src: tuple  # (object, clock index)
    dst: tuple
    base: FPMorphism


class Semidirect(FiniteCategory):
    """Grothendieck construction of the clock presheaf ``Psi |-> |Psi|`` over ``FP(C)``.

    Objects are pairs ``(Psi, c)`` with ``c < |Psi|``; a morphism
    ``(Phi, c) -> (Psi, c')`` is an FP morphism whose renaming sends ``c'``
    to ``c`` (the fibres are discrete, so the second component is an
    identity).
    """

    def __init__(self, fp: FPCompletion):
        self.fp = fp
        objs = [(psi, c) for psi in fp.objects for c in range(len(psi))]
        super().__init__(objs, self._homs, self._comp, lambda o: GrothMorphism(o, o, fp.identity(o[0])),
                         f"{fp.name}|x|Clk")

    def _homs(self, a, b) -> list:
        return [GrothMorphism(a, b, m) for m in self.fp.hom(a[0], b[0]) if m.renaming[b[1]] == a[1]]

    def _comp(self, g: GrothMorphism, f: GrothMorphism) -> GrothMorphism:
        return GrothMorphism(f.src, g.dst, self.fp.compose(g.base, f.base))

    def project(self, obj) -> object:
        """The value of the generic clock."""
        psi, c = obj
        return psi[c]


class LastSlotFragment(FiniteCategory):
    """Objects ``Gamma x <n>`` of ``FP(C)`` with maps keeping the last factor last."""

    def __init__(self, fp: FPCompletion):
        self.fp = fp
        objs = [psi for psi in fp.objects if len(psi) >= 1]
        super().__init__(objs, self._homs, fp.compose, fp.identity, f"{fp.name}/last")

    def _homs(self, a, b) -> list:
        return [m for m in self.fp.hom(a, b) if m.renaming[-1] == len(a) - 1]


def _move_last(psi: tuple, c: int) -> tuple:
    """Permutation putting index ``c`` last; returns new->old index list."""
    return tuple(i for i in range(len(psi)) if i != c) + (c,)


def semidirect_to_fragment(obj) -> tuple:
    psi, c = obj
    return tuple(psi[i] for i in _move_last(psi, c))


def semidirect_morphism_to_fragment(m: GrothMorphism) -> FPMorphism:
    (phi, c), (psi, d) = m.src, m.dst
    new_to_old_src = _move_last(phi, c)
    old_to_new_src = {old: new for new, old in enumerate(new_to_old_src)}
    new_to_old_dst = _move_last(psi, d)
    ren = tuple(old_to_new_src[m.base.renaming[i]] for i in new_to_old_dst)
    comps = tuple(m.base.comps[i] for i in new_to_old_dst)
    return FPMorphism(semidirect_to_fragment(m.src), semidirect_to_fragment(m.dst), ren, comps)


@dataclass
class EquivalenceReport:
    objects_surjective: bool
    hom_failures: list
    functor_failures: list
    fibre_failures: list
    cartesian_failures: list

    @property
    def ok(self) -> bool:
        return self.objects_surjective and not (
            self.hom_failures or self.functor_failures or self.fibre_failures or self.cartesian_failures
        )


def check_semidirect(max_clocks: int, max_depth: int, sample: int = 2000, seed: int = 0,
                     cartesian_clocks: int = 2, cartesian_depth: int = 2) -> EquivalenceReport:
    """Compare the semidirect product with the last-slot fragment of ``FP(omega)``.

    Checks that moving the distinguished clock last is surjective on objects
    and bijective on every hom-set, that it is functorial on sampled
    composable pairs, that the fibre over ``n`` is the set of objects
    ``Gamma x <n>``, and that the lifts changing only the generic clock's
    value are cartesian for the projection to omega (on a smaller fragment).
    """
    fp = FPCompletion(omega_category(max_depth), max_clocks)
    sd = Semidirect(fp)
    frag = LastSlotFragment(fp)
    surj = {semidirect_to_fragment(o) for o in sd.objects} == set(frag.objects)
    hom_failures = []
    for a, b in itertools.product(sd.objects, repeat=2):
        mapped = [semidirect_morphism_to_fragment(m) for m in sd.hom(a, b)]
        target = frag.hom(semidirect_to_fragment(a), semidirect_to_fragment(b))
        if len(set(mapped)) != len(mapped) or set(mapped) != set(target):
            hom_failures.append((a, b))
    rng = random.Random(seed)
    functor_failures = []
    objs = list(sd.objects)
    for _ in range(sample):
        a, b, c = (rng.choice(objs) for _ in range(3))
        fs, gs = sd.hom(a, b), sd.hom(b, c)
        if fs and gs:
            f, g = rng.choice(fs), rng.choice(gs)
            lhs = semidirect_morphism_to_fragment(sd.compose(g, f))
            rhs = frag.compose(semidirect_morphism_to_fragment(g), semidirect_morphism_to_fragment(f))
            if lhs != rhs:
                functor_failures.append((f, g))
    fibre_failures = [
        n for n in range(max_depth + 1)
        if {semidirect_to_fragment(o) for o in sd.objects if sd.project(o) == n}
        != {o for o in frag.objects if o[-1] == n}
    ]
    small = Semidirect(FPCompletion(omega_category(cartesian_depth), cartesian_clocks))
    return EquivalenceReport(surj, hom_failures, functor_failures, fibre_failures, _cartesian_failures(small))


def _cartesian_failures(sd: Semidirect) -> list:
    """Lifts ``(Psi[c -> m], c) -> (Psi, c)`` along ``m <= Psi[c]`` must be cartesian."""
    fp, base = sd.fp, sd.fp.base
    failures = []
    for tgt in sd.objects:
        psi, c = tgt
        for m in range(psi[c] + 1):
            lifted = (psi[:c] + (m,) + psi[c + 1:], c)
            comps = tuple(base.identity(v) if i != c else (m, psi[c]) for i, v in enumerate(psi))
            lift = GrothMorphism(lifted, tgt, FPMorphism(lifted[0], psi, tuple(range(len(psi))), comps))
            if lift not in sd.hom(lifted, tgt):
                failures.append(("lift", tgt, m))
                continue
            for src in sd.objects:
                if sd.project(src) > m:
                    continue
                for chi in sd.hom(src, tgt):
                    through = [k for k in sd.hom(src, lifted) if sd.compose(lift, k) == chi]
                    if len(through) != 1:
                        failures.append(("cartesian", tgt, m, chi))
    return failures


# -- named clock contexts and presheaves ---------------------------------------


@dataclass(frozen=True)
class ClockContext:
    depths: tuple = ()  # sorted (clock name, depth) pairs

    def __post_init__(self):
        pairs = tuple(sorted(dict(self.depths).items()))
        if any(d < 0 for _, d in pairs):
            raise ValueError("depths are natural numbers")
        object.__setattr__(self, "depths", pairs)

    @classmethod
    def of(cls, **depths: int) -> "ClockContext":
        return cls(tuple(depths.items()))

    @property
    def clocks(self) -> tuple:
        return tuple(k for k, _ in self.depths)

    def depth(self, k: str) -> int:
        for name, d in self.depths:
            if name == k:
                return d
        raise KeyError(f"clock {k!r} is not in context {self}")

    def with_depth(self, k: str, n: int) -> "ClockContext":
        return ClockContext(tuple(dict(self.depths, **{k: n}).items()))

    def without(self, k: str) -> "ClockContext":
        return ClockContext(tuple((c, d) for c, d in self.depths if c != k))

    def __str__(self):
        return "{" + ", ".join(f"{c}:{d}" for c, d in self.depths) + "}"


@dataclass(frozen=True)
class ContextMap:
    src: ClockContext
    dst: ClockContext
    h: tuple  # sorted (clock, image) pairs

    def __post_init__(self):
        object.__setattr__(self, "h", tuple(sorted(dict(self.h).items())))
        if not kcat_hom_valid(self.src, self.dst, dict(self.h)):
            raise ValueError(f"not a map of clock contexts: {self.src} -> {self.dst} via {dict(self.h)}")

    def __call__(self, u: str) -> str:
        return dict(self.h)[u]

    def then(self, g: "ContextMap") -> "ContextMap":
        """``g`` after this map."""
        return ContextMap(self.src, g.dst, tuple((u, g(self(u))) for u in self.src.clocks))


def identity_map(ctx: ClockContext) -> ContextMap:
    return ContextMap(ctx, ctx, tuple((u, u) for u in ctx.clocks))


def decrement(ctx: ClockContext, k: str) -> ContextMap:
    """The identity renaming into the context with ``k`` one step shallower."""
    return ContextMap(ctx, ctx.with_depth(k, ctx.depth(k) - 1), tuple((u, u) for u in ctx.clocks))


def context_maps(src: ClockContext, dst: ClockContext, fixed: Iterable[str] = ()) -> list:
    """All maps ``src -> dst`` sending each clock in ``fixed`` to itself."""
    fixed = set(fixed)
    slots = []
    for u in src.clocks:
        if u in fixed:
            slots.append([u] if u in dst.clocks and dst.depth(u) <= src.depth(u) else [])
        else:
            slots.append([v for v in dst.clocks if dst.depth(v) <= src.depth(u)])
    return [ContextMap(src, dst, tuple(zip(src.clocks, choice))) for choice in itertools.product(*slots)]


class MultiPresheaf:
    """A covariant functor on clock contexts, demanded one context at a time.

    ``free`` lists the clocks the presheaf is about; it may only be demanded
    at contexts containing them, and only along maps fixing them.
    """

    free: frozenset = frozenset()
    name = "X"

    def _at(self, ctx: ClockContext) -> Iterable:
        raise NotImplementedError

    def _act(self, m: ContextMap, x):
        raise NotImplementedError

    def __init__(self):
        self._cache: dict = {}
        self._fibers: dict = {}
        self._lock = threading.RLock()

    def _require(self, ctx: ClockContext):
        missing = self.free - set(ctx.clocks)
        if missing:
            raise KeyError(f"{self.name} demanded at {ctx} without clock(s) {sorted(missing)}")

    def at(self, ctx: ClockContext) -> tuple:
        self._require(ctx)
        with self._lock:
            if ctx not in self._cache:
                self._cache[ctx] = tuple(self._at(ctx))
            return self._cache[ctx]

    def act(self, m: ContextMap, x):
        self._require(m.src)
        for k in self.free:
            if m(k) != k:
                raise ValueError(f"{self.name} only moves along maps fixing {k!r}")
        return self._act(m, x)

    def size(self, ctx: ClockContext) -> int:
        return len(self.at(ctx))

    def contains(self, ctx: ClockContext, x) -> bool:
        return x in self.at(ctx)


class Constant(MultiPresheaf):
    def __init__(self, values: Iterable, name: str | None = None):
        super().__init__()
        self.values = tuple(values)
        self.name = name or f"const{self.values}"

    def _at(self, ctx):
        return self.values

    def _act(self, m, x):
        return x


class Pullback(MultiPresheaf):
    """A stage-indexed set read off the depth of one clock."""

    def __init__(self, staged: StagedSet, k: str):
        super().__init__()
        self.staged, self.clock = staged, k
        self.free = frozenset({k})
        self.name = f"{staged.name}[{k}]"

    def _at(self, ctx):
        return self.staged.at(ctx.depth(self.clock))

    def _act(self, m, x):
        return self.staged.restrict_to(m.dst.depth(self.clock), m.src.depth(self.clock), x)

    def size(self, ctx):
        self._require(ctx)
        return self.staged.size(ctx.depth(self.clock))

    def contains(self, ctx, x):
        return self.staged.contains(ctx.depth(self.clock), x)


def stream_in(k: str, values: Iterable) -> Pullback:
    """Guarded streams on clock ``k``."""
    return Pullback(GuardedStream(values), k)


class Product(MultiPresheaf):
    def __init__(self, *factors: MultiPresheaf):
        super().__init__()
        self.factors = factors
        self.free = frozenset().union(*(f.free for f in factors))
        self.name = " x ".join(f.name for f in factors)

    def _at(self, ctx):
        return itertools.product(*(f.at(ctx) for f in self.factors))

    def _act(self, m, x):
        return tuple(f.act(m, v) for f, v in zip(self.factors, x))


class LaterK(MultiPresheaf):
    """Later on clock ``k``: a point at depth 0, otherwise the value one step shallower."""

    def __init__(self, inner: MultiPresheaf, k: str):
        super().__init__()
        self.inner, self.clock = inner, k
        self.free = inner.free | {k}
        self.name = f"later_{k}({inner.name})"

    def _at(self, ctx):
        d = ctx.depth(self.clock)
        return (STAR,) if d == 0 else self.inner.at(ctx.with_depth(self.clock, d - 1))

    def _act(self, m, x):
        k = self.clock
        if m.dst.depth(k) == 0:
            return STAR
        shifted = ContextMap(
            m.src.with_depth(k, m.src.depth(k) - 1), m.dst.with_depth(k, m.dst.depth(k) - 1), m.h
        )
        return self.inner.act(shifted, x)

    def size(self, ctx):
        d = ctx.depth(self.clock)
        return 1 if d == 0 else self.inner.size(ctx.with_depth(self.clock, d - 1))

    def contains(self, ctx, x):
        d = ctx.depth(self.clock)
        return x is STAR if d == 0 else self.inner.contains(ctx.with_depth(self.clock, d - 1), x)


def later_k(x: MultiPresheaf, k: str) -> LaterK:
    return LaterK(x, k)


class PresheafMap:
    def __init__(self, source: MultiPresheaf, target: MultiPresheaf, component: Callable, name: str = "f"):
        self.source, self.target, self.component, self.name = source, target, component, name

    def __call__(self, ctx: ClockContext, x):
        return self.component(ctx, x)


def next_k(x: MultiPresheaf, k: str) -> PresheafMap:
    def comp(ctx, v):
        return STAR if ctx.depth(k) == 0 else x.act(decrement(ctx, k), v)

    return PresheafMap(x, LaterK(x, k), comp, f"next_{k}")


def later_k_map(f: PresheafMap, k: str) -> PresheafMap:
    def comp(ctx, v):
        d = ctx.depth(k)
        return STAR if d == 0 else f(ctx.with_depth(k, d - 1), v)

    return PresheafMap(LaterK(f.source, k), LaterK(f.target, k), comp, f"later_{k}({f.name})")


def demanded_contexts(clocks: Iterable[str], max_depth: int, required: Iterable[str] = ()) -> list:
    """Contexts over subsets of ``clocks`` containing ``required``, depths up to ``max_depth``."""
    clocks, required = list(clocks), set(required)
    out = []
    for r in range(len(clocks) + 1):
        for names in itertools.combinations(clocks, r):
            if not required <= set(names):
                continue
            for ds in itertools.product(range(max_depth + 1), repeat=len(names)):
                out.append(ClockContext(tuple(zip(names, ds))))
    return out


def functoriality_failures(x: MultiPresheaf, contexts: list, limit: int = 50_000) -> list:
    """Identity and composition laws on the demanded fragment."""
    failures = []
    ctxs = [c for c in contexts if x.free <= set(c.clocks)]
    homs = {(a, b): context_maps(a, b, x.free) for a in ctxs for b in ctxs}
    checked = 0
    for a in ctxs:
        for v in x.at(a):
            if x.act(identity_map(a), v) != v:
                failures.append(("identity", a, v))
    for a, b, c in itertools.product(ctxs, repeat=3):
        for f in homs[a, b]:
            for g in homs[b, c]:
                gf = f.then(g)
                for v in x.at(a):
                    checked += 1
                    if checked > limit:
                        return failures
                    if x.act(gf, v) != x.act(g, x.act(f, v)):
                        failures.append(("composition", f, g, v))
    return failures


def naturality_failures(f: PresheafMap, contexts: list) -> list:
    failures = []
    free = f.source.free | f.target.free
    ctxs = [c for c in contexts if free <= set(c.clocks)]
    for a, b in itertools.product(ctxs, repeat=2):
        for m in context_maps(a, b, free):
            for v in f.source.at(a):
                if f.target.act(m, f(a, v)) != f(b, f.source.act(m, v)):
                    failures.append((m, v))
    return failures


def wellpointed_failures(x: MultiPresheaf, k: str, contexts: list) -> list:
    """Pointwise comparison of ``next`` at ``later_k x`` with ``later_k(next)``."""
    lx = LaterK(x, k)
    a, b = next_k(lx, k), later_k_map(next_k(x, k), k)
    out = []
    for ctx in contexts:
        if not lx.free <= set(ctx.clocks):
            continue
        for v in lx.at(ctx):
            if a(ctx, v) != b(ctx, v):
                out.append((ctx, v))
    return out


# -- fibres, clock quantification and force ------------------------------------


def fiber(x: MultiPresheaf, k: str, ctx: ClockContext) -> StagedSet:
    """The stage-indexed set ``n |-> x(ctx, k:n)`` with restriction along decrements of ``k``.

    The fibre of ``later_k x`` is literally ``later`` of the fibre of ``x``.
    """
    if k in ctx.clocks:
        raise ValueError(f"clock {k!r} is already bound in {ctx}")
    key = (k, ctx)
    with x._lock:
        if key in x._fibers:
            return x._fibers[key]
    if isinstance(x, LaterK) and x.clock == k:
        out = later(fiber(x.inner, k, ctx))
    else:
        out = _Fiber(x, k, ctx)
    with x._lock:
        return x._fibers.setdefault(key, out)


class _Fiber(StagedSet):
    def __init__(self, x: MultiPresheaf, k: str, ctx: ClockContext):
        self.presheaf, self.clock, self.ctx = x, k, ctx
        super().__init__(
            lambda n: x.at(ctx.with_depth(k, n)),
            lambda n, v: x.act(decrement(ctx.with_depth(k, n + 1), k), v),
            f"{x.name}@{ctx}/{k}",
        )

    def size(self, n):
        return self.presheaf.size(self.ctx.with_depth(self.clock, n))

    def contains(self, n, v):
        return self.presheaf.contains(self.ctx.with_depth(self.clock, n), v)


def fiber_map(f: PresheafMap, k: str, ctx: ClockContext, check_upto: int = 8) -> StagedMap:
    src, dst = fiber(f.source, k, ctx), fiber(f.target, k, ctx)
    return StagedMap(src, dst, lambda n, v: f(ctx.with_depth(k, n), v), check_upto, f"{f.name}@{ctx}")


class Forall:
    """Clock quantification: elements at ``ctx`` are global elements of the ``k``-fibre.

    Elements are intensional choosers; equality is observational up to a bound.
    """

    def __init__(self, x: MultiPresheaf, k: str):
        self.inner, self.clock = x, k
        self.free = x.free - {k}
        self.name = f"forall {k}.{x.name}"

    def fiber(self, ctx: ClockContext) -> StagedSet:
        return fiber(self.inner, self.clock, ctx)

    def element(self, ctx: ClockContext, pick: Callable[[int], object]) -> GlobalElement:
        return GlobalElement(self.fiber(ctx), pick)

    def truncations(self, ctx: ClockContext, upto: int) -> list:
        """Compatible tuples ``(x_0 .. x_upto)`` in the fibre."""
        fib = self.fiber(ctx)
        fams = [(v,) for v in fib.at(0)]
        for n in range(upto):
            fams = [fam + (v,) for fam in fams for v in fib.at(n + 1) if fib.restrict(n, v) == fam[-1]]
        return fams

    def elements(self, ctx: ClockContext, upto: int) -> list:
        """One element per point of stage ``upto``, extended upward by the first available lift."""
        fib = self.fiber(ctx)
        return [self._from_top(fib, upto, top) for top in fib.at(upto)]

    @staticmethod
    def _from_top(fib: StagedSet, upto: int, top) -> GlobalElement:
        chain = [top]
        lock = threading.Lock()

        def pick(n):
            if n <= upto:
                return fib.restrict_to(n, upto, top)
            with lock:
                while len(chain) <= n - upto:
                    m = upto + len(chain) - 1
                    lifts = [v for v in fib.at(m + 1) if fib.restrict(m, v) == chain[-1]]
                    if not lifts:
                        raise ValueError(f"point {chain[-1]!r} of stage {m} does not lift further")
                    chain.append(lifts[0])
                return chain[n - upto]

        return GlobalElement(fib, pick)

    def act(self, m: ContextMap, e: GlobalElement) -> GlobalElement:
        k = self.clock

        def pick(n):
            ext = ContextMap(m.src.with_depth(k, n), m.dst.with_depth(k, n), m.h + ((k, k),))
            return self.inner.act(ext, e.pick(n))

        return GlobalElement(self.fiber(m.dst), pick)


def forall_k(x: MultiPresheaf, k: str) -> Forall:
    return Forall(x, k)


def force(x: MultiPresheaf, k: str, ctx: ClockContext):
    """``force`` from ``forall k. later_k x`` to ``forall k. x`` at ``ctx``, with its inverse."""
    lx = Forall(LaterK(x, k), k)
    fx = Forall(x, k)
    nxt = next_k(x, k)

    def forward(y: GlobalElement) -> GlobalElement:
        return fx.element(ctx, lambda n: y.pick(n + 1))

    def backward(e: GlobalElement) -> GlobalElement:
        return lx.element(ctx, lambda n: nxt(ctx.with_depth(k, n), e.pick(n)))

    return forward, backward


def check_force_iso(x: MultiPresheaf, k: str, ctx: ClockContext, upto: int) -> list:
    """Both round trips through ``force`` on every enumerated element, up to ``upto``."""
    forward, backward = force(x, k, ctx)
    failures = []
    for y in Forall(LaterK(x, k), k).elements(ctx, upto + 1):
        fy = forward(y)
        if not fy.compatible(upto) or not backward(fy).agrees(y, upto):
            failures.append(("backward.forward", y.prefix(upto)))
    for e in Forall(x, k).elements(ctx, upto):
        be = backward(e)
        if not be.compatible(upto) or not forward(be).agrees(e, upto):
            failures.append(("forward.backward", e.prefix(upto)))
    return failures


def inclusion(ctx: ClockContext, k: str, n: int) -> ContextMap:
    return ContextMap(ctx, ctx.with_depth(k, n), tuple((u, u) for u in ctx.clocks))


def check_clock_irrelevance(x: MultiPresheaf, k: str, ctx: ClockContext, upto: int) -> bool:
    """``forall k. x`` against ``x`` when ``x`` ignores ``k``, comparing truncated families.

    Weakening sends a point to its images along the inclusions
    ``ctx -> ctx, k:n``; it must be injective and hit every compatible
    family up to ``upto``.
    """
    if k in x.free:
        return False
    fams = Forall(x, k).truncations(ctx, upto)
    weakened = [tuple(x.act(inclusion(ctx, k, n), v) for n in range(upto + 1)) for v in x.at(ctx)]
    return len(set(weakened)) == len(weakened) == len(fams) and set(weakened) == set(fams)


def check_forall_later_constant(values: Iterable, k: str, upto: int) -> bool:
    """``forall k. later_k A`` against ``A``: families are determined from stage 1 on."""
    values = tuple(values)
    fams = Forall(LaterK(Constant(values), k), k).truncations(ClockContext(), upto)
    return sorted(f[1] for f in fams) == sorted(values) and all(
        f[0] is STAR and len(set(f[1:])) == 1 for f in fams
    )


# -- per-clock guarded recursion and coinductive streams ---------------------


def lift_step(f: StagedMap, x: Pullback) -> PresheafMap:
    """A step map on a stage-indexed set, applied in the fibre of ``x``'s clock."""
    k = x.clock
    return PresheafMap(LaterK(x, k), x, lambda ctx, v: f(ctx.depth(k), v), f"{f.name}[{k}]")


class CoStream:
    """An element of ``forall k. Str_k A`` over the empty context."""

    def __init__(self, values: Iterable, element: GlobalElement, clock: str = "k"):
        self.value_type = tuple(values)
        self.clock = clock
        self.presheaf = stream_in(clock, self.value_type)
        self.element = element

    def at(self, n: int) -> tuple:
        return self.element.pick(n)


def co_head(s: CoStream):
    """``Lambda k. fst (uncons_k u[k])``, read back through clock irrelevance."""
    stream = s.presheaf.staged
    family = GlobalElement(fiber(Constant(s.value_type), s.clock, ClockContext()),
                           lambda n: stream.uncons(n, s.at(n))[0])
    return family.pick(0)


def co_tail(s: CoStream) -> CoStream:
    """``force (Lambda k. snd (uncons_k u[k]))``."""
    stream = s.presheaf.staged
    delayed = Forall(LaterK(s.presheaf, s.clock), s.clock).element(
        ClockContext(), lambda n: stream.uncons(n, s.at(n))[1]
    )
    forward, _ = force(s.presheaf, s.clock, ClockContext())
    return CoStream(s.value_type, forward(delayed), s.clock)


def co_take(n: int, s: CoStream) -> list:
    out = []
    for _ in range(n):
        out.append(co_head(s))
        s = co_tail(s)
    return out


def costream_from_step(values: Iterable, step: Callable[[GuardedStream], StagedMap], clock: str = "k") -> CoStream:
    """Guarded fixed point of a step map in the ``clock``-fibre, quantified over the clock."""
    values = tuple(values)
    x = stream_in(clock, values)
    f = fiber_map(lift_step(step(x.staged), x), clock, ClockContext(), check_upto=3)
    return CoStream(values, gfix(f), clock)


def builtin_costream(name: str, modulus: int = 10, clock: str = "k") -> CoStream:
    if name == "zeros":
        return costream_from_step((0,), lambda s: cons_step(s, 0, check_upto=3), clock)
    if name in ("naturals", "naturals-mod-m"):
        return costream_from_step(
            range(modulus), lambda s: cons_step(s, 0, lambda v: (v + 1) % modulus, check_upto=3), clock
        )
    if name == "alternating":
        return costream_from_step((0, 1), lambda s: cons_step(s, 0, lambda v: 1 - v, check_upto=3), clock)
    raise KeyError(f"unknown stream program {name!r}")


def random_multipresheaf(seed, k: str = "k", other: str = "j") -> tuple[MultiPresheaf, ClockContext]:
    """A small random presheaf mentioning ``k`` and a context for quantifying it away."""
    from .trees import random_staged_set

    rng = random.Random(f"{seed}:multi")
    base = Pullback(random_staged_set(f"{seed}:k", max_size=4), k)
    kind = rng.choice(("single", "two-clock", "with-constant"))
    if kind == "single":
        return base, ClockContext()
    if kind == "two-clock":
        side = Pullback(random_staged_set(f"{seed}:j", max_size=3), other)
        return Product(base, side), ClockContext.of(**{other: rng.randint(0, 2)})
    return Product(base, Constant(range(rng.randint(1, 3)))), ClockContext()
