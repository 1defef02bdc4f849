"""Presheaves on the natural numbers, evaluated stage by stage on demand.

A :class:`StagedSet` is queried at any stage ``n``; stages are memoized
behind a lock so one instance can be shared between threads.  Exhaustive
checks take an explicit stage bound.
"""
from __future__ import annotations

import itertools
import random
import threading
from typing import Callable, Iterable

MAX_FAMILIES = 200_000
# stages larger than this are skipped by construction-time naturality checks
CHECK_BUDGET = 20_000


class _Star:
    __slots__ = ()

    def __repr__(self):
        return "*"

    def __reduce__(self):
        return "STAR"


STAR = _Star()


class NaturalityError(ValueError):
    pass


class _Memo:
    def __init__(self, fn):
        self._fn = fn
        self._cache: dict = {}
        self._lock = threading.RLock()

    def __call__(self, *key):
        try:
            return self._cache[key]
        except KeyError:
            pass
        with self._lock:
            if key not in self._cache:
                self._cache[key] = self._fn(*key)
            return self._cache[key]


class StagedSet:
    """Finite sets ``at(n)`` with restriction maps ``restrict(n, x): at(n+1) -> at(n)``."""

    def __init__(self, at: Callable[[int], Iterable], restrict: Callable[[int, object], object], name: str = "X"):
        self._at = _Memo(lambda n: tuple(at(n)))
        self._restrict = _Memo(restrict)
        self._member_sets = _Memo(lambda n: frozenset(self.at(n)))
        self.name = name

    def at(self, n: int) -> tuple:
        if n < 0:
            raise ValueError("stages are natural numbers")
        return self._at(n)

    def restrict(self, n: int, x):
        return self._restrict(n, x)

    def size(self, n: int) -> int:
        return len(self.at(n))

    def contains(self, n: int, x) -> bool:
        return x in self._member_sets(n)

    def restrict_to(self, m: int, n: int, x):
        """Restrict ``x`` from stage ``n`` down to stage ``m <= n``."""
        for i in range(n - 1, m - 1, -1):
            x = self.restrict(i, x)
        return x

    def check(self, upto: int) -> None:
        for n in range(upto):
            for x in self.at(n + 1):
                if not self.contains(n, self.restrict(n, x)):
                    raise ValueError(f"{self.name}: restriction of {x!r} at stage {n + 1} leaves stage {n}")

    def __repr__(self):
        return f"StagedSet({self.name})"


def constant(values: Iterable, name: str | None = None) -> StagedSet:
    values = tuple(values)
    return StagedSet(lambda n: values, lambda n, x: x, name or f"const{values}")


def terminal() -> StagedSet:
    return constant((STAR,), "1")


class GuardedStream(StagedSet):
    """Stage ``n`` holds the sequences of length ``n+1``; restriction drops the last entry."""

    def __init__(self, values: Iterable):
        self.value_type = tuple(values)
        vals = self.value_type
        super().__init__(
            lambda n: itertools.product(vals, repeat=n + 1),
            lambda n, s: s[:-1],
            f"Str{vals}",
        )

    def size(self, n: int) -> int:
        return len(self.value_type) ** (n + 1)

    def contains(self, n: int, x) -> bool:
        return isinstance(x, tuple) and len(x) == n + 1 and all(v in self.value_type for v in x)

    def cons(self, n: int, a, t) -> tuple:
        """``a :: t`` at stage ``n``, where ``t`` lives in the later of this stream at ``n``."""
        if n == 0:
            if t is not STAR:
                raise ValueError("at stage 0 the tail is the unique point *")
            return (a,)
        if len(t) != n:
            raise ValueError(f"tail at stage {n} must have length {n}")
        return (a,) + tuple(t)

    def uncons(self, n: int, s: tuple) -> tuple:
        if len(s) != n + 1:
            raise ValueError(f"stage {n} holds sequences of length {n + 1}")
        return s[0], (STAR if n == 0 else s[1:])


def later(x: StagedSet) -> StagedSet:
    """Shift up by one stage, with a point at stage 0."""
    return Later(x)


class Later(StagedSet):
    def __init__(self, x: StagedSet):
        self.delayed = x
        super().__init__(
            lambda n: (STAR,) if n == 0 else x.at(n - 1),
            lambda n, v: STAR if n == 0 else x.restrict(n - 1, v),
            f"later({x.name})",
        )

    def size(self, n: int) -> int:
        return 1 if n == 0 else self.delayed.size(n - 1)

    def contains(self, n: int, v) -> bool:
        return v is STAR if n == 0 else self.delayed.contains(n - 1, v)


class StagedMap:
    """Stagewise components ``component(n, x)``; naturality is checked up to ``check_upto``."""

    def __init__(self, source: StagedSet, target: StagedSet, component: Callable[[int, object], object],
                 check_upto: int = 8, name: str = "f"):
        self.source = source
        self.target = target
        self._component = _Memo(component)
        self.name = name
        if check_upto:
            bad = self.naturality_failure(check_upto)
            if bad is not None:
                raise NaturalityError(f"{name} is not natural: {bad}")

    def __call__(self, n: int, x):
        return self._component(n, x)

    def naturality_failure(self, upto: int, budget: int = CHECK_BUDGET):
        """First failing naturality square up to ``upto``, skipping stages above ``budget``."""
        for n in range(upto + 1):
            if self.source.size(n) > budget:
                break
            for x in self.source.at(n):
                if not self.target.contains(n, self(n, x)):
                    return f"component at stage {n} sends {x!r} outside the target"
        for n in range(upto):
            if self.source.size(n + 1) > budget:
                break
            for x in self.source.at(n + 1):
                lhs = self.target.restrict(n, self(n + 1, x))
                rhs = self(n, self.source.restrict(n, x))
                if lhs != rhs:
                    return f"square at stage {n + 1} fails on {x!r}: {lhs!r} != {rhs!r}"
        return None


def next_map(x: StagedSet, check_upto: int = 8) -> StagedMap:
    lx = later(x)
    return StagedMap(x, lx, lambda n, v: STAR if n == 0 else x.restrict(n - 1, v), check_upto, f"next_{x.name}")


def later_map(f: StagedMap, check_upto: int = 8) -> StagedMap:
    return StagedMap(
        later(f.source),
        later(f.target),
        lambda n, v: STAR if n == 0 else f(n - 1, v),
        check_upto,
        f"later({f.name})",
    )


def check_wellpointed(x: StagedSet, upto: int) -> tuple | None:
    """Compare next on later(x) with later(next_x); returns the first disagreement."""
    a = next_map(later(x), check_upto=0)
    b = later_map(next_map(x, check_upto=0), check_upto=0)
    for n in range(upto + 1):
        for v in later(x).at(n):
            if a(n, v) != b(n, v):
                return (n, v, a(n, v), b(n, v))
    return None


class GlobalElement:
    """A compatible choice ``pick(n)`` in every stage; equality is checked up to a bound."""

    def __init__(self, of: StagedSet, pick: Callable[[int], object]):
        self.of = of
        self._pick = _Memo(pick)

    def pick(self, n: int):
        return self._pick(n)

    def prefix(self, upto: int) -> list:
        return [self.pick(n) for n in range(upto + 1)]

    def compatible(self, upto: int) -> bool:
        return all(
            self.of.restrict(n, self.pick(n + 1)) == self.pick(n) and self.of.contains(n, self.pick(n))
            for n in range(upto)
        )

    def agrees(self, other: "GlobalElement", upto: int) -> bool:
        return all(self.pick(n) == other.pick(n) for n in range(upto + 1))


def _is_later_of(f: StagedMap) -> bool:
    return getattr(f.source, "delayed", None) is f.target


def gfix(f: StagedMap) -> GlobalElement:
    """The guarded fixed point of a step map ``later(A) -> A``."""
    if not _is_later_of(f):
        raise TypeError("gfix needs a map from later(A) to A")
    memo: list = []
    lock = threading.Lock()

    def pick(n: int):
        with lock:
            while len(memo) <= n:
                k = len(memo)
                memo.append(f(0, STAR) if k == 0 else f(k, memo[k - 1]))
            return memo[n]

    return GlobalElement(f.target, pick)


def fixpoint_failure(f: StagedMap, g: GlobalElement, upto: int):
    """First stage where ``f . next . g`` differs from ``g``, or None."""
    nxt = next_map(f.target, check_upto=0)
    for n in range(upto + 1):
        if f(n, nxt(n, g.pick(n))) != g.pick(n):
            return n
    return None


def fixed_families(f: StagedMap, upto: int, cap: int = MAX_FAMILIES) -> list:
    """Every compatible family ``(x_0 .. x_upto)`` solving the fixed-point equation.

    Compatible families are enumerated stage by stage; the equation is only
    tested once a family is complete.
    """
    a = f.target
    nxt = next_map(a, check_upto=0)
    families = [(x,) for x in a.at(0)]
    seen = len(families)
    for n in range(upto):
        if seen + a.size(n + 1) > cap:
            raise OverflowError(f"more than {cap} compatible families below stage {upto}")
        lifts: dict = {}
        for x in a.at(n + 1):
            lifts.setdefault(a.restrict(n, x), []).append(x)
        grown = [fam + (x,) for fam in families for x in lifts.get(fam[-1], ())]
        seen += len(grown)
        if seen > cap:
            raise OverflowError(f"more than {cap} compatible families below stage {upto}")
        families = grown
    return [fam for fam in families if all(f(n, nxt(n, fam[n])) == fam[n] for n in range(upto + 1))]


def check_fix_unique(f: StagedMap, upto: int, cap: int = MAX_FAMILIES) -> bool:
    sols = fixed_families(f, upto, cap)
    return len(sols) == 1 and list(sols[0]) == gfix(f).prefix(upto)


# -- step maps on guarded streams --------------------------------------------


def cons_step(s: GuardedStream, head, transform: Callable = None, check_upto: int = 8) -> StagedMap:
    """``t |-> head :: map(transform, t)``; plain cons when ``transform`` is None."""
    fn = transform or (lambda v: v)

    def comp(n, t):
        return s.cons(n, head, t if n == 0 else tuple(fn(v) for v in t))

    return StagedMap(later(s), s, comp, check_upto, f"cons {head!r}")


def constant_step(a: StagedSet, family: GlobalElement, check_upto: int = 8) -> StagedMap:
    return StagedMap(later(a), a, lambda n, _: family.pick(n), check_upto, "const")


def cycle_element(s: GuardedStream, cycle) -> GlobalElement:
    cycle = tuple(cycle)
    return GlobalElement(s, lambda n: tuple(cycle[i % len(cycle)] for i in range(n + 1)))


# -- random generation -------------------------------------------------------


def random_staged_set(seed: int, max_size: int = 6) -> StagedSet:
    """Non-decreasing stage sizes up to ``max_size`` with surjective restrictions."""
    sizes: list = []
    lock = threading.Lock()

    def size(n):
        with lock:
            while len(sizes) <= n:
                k = len(sizes)
                rng = random.Random(f"{seed}:size:{k}")
                prev = sizes[-1] if sizes else 1
                sizes.append(min(max_size, prev + rng.choice((0, 0, 1, 2))) if k else rng.randint(1, 3))
            return sizes[n]

    def restrict(n, x):
        lo, hi = size(n), size(n + 1)
        rng = random.Random(f"{seed}:restrict:{n}")
        table = list(range(lo)) + [rng.randrange(lo) for _ in range(hi - lo)]
        rng.shuffle(table)
        return table[x]

    return StagedSet(lambda n: range(size(n)), restrict, f"rand{seed}")


def random_step(a: StagedSet, seed: int, check_upto: int = 8) -> StagedMap:
    """A random natural map ``later(A) -> A``; ``A`` must have surjective restrictions."""
    la = later(a)

    def comp(n, x):
        rng = random.Random(f"{seed}:{n}:{x!r}")
        if n == 0:
            return rng.choice(a.at(0))
        want = comp_memo(n - 1, la.restrict(n - 1, x))
        options = [y for y in a.at(n) if a.restrict(n - 1, y) == want]
        return rng.choice(options)

    comp_memo = _Memo(comp)
    return StagedMap(la, a, comp_memo, check_upto, f"step{seed}")
