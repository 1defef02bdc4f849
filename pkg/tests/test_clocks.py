import itertools
import math

import pytest

from guardedlab import clocks
from guardedlab.clocks import (
    ClockContext,
    Constant,
    ContextMap,
    FPCompletion,
    KCategory,
    LaterK,
    Product,
    Pullback,
    check_category_laws,
    check_fp_op_iso,
    check_semidirect,
    context_maps,
    decrement,
    demanded_contexts,
    fiber,
    fiber_map,
    forall_k,
    kcat_hom_valid,
    later_k,
    next_k,
    omega_category,
    stream_in,
    terminal_category,
)
from guardedlab.trees import STAR, GuardedStream, check_fix_unique, cons_step, gfix, random_staged_set, random_step

EMPTY = ClockContext()


# -- categories ---------------------------------------------------------------


def test_kcat_hom_valid_examples():
    c = ClockContext.of(k=3)
    assert kcat_hom_valid(c, c, {"k": "k"})
    assert kcat_hom_valid(ClockContext.of(k=3), ClockContext.of(kk=2), {"k": "kk"})
    assert not kcat_hom_valid(ClockContext.of(k=1), ClockContext.of(kk=2), {"k": "kk"})
    assert not kcat_hom_valid(c, c, {})


def test_fp_of_terminal_is_functions_op():
    fp = FPCompletion(terminal_category(), 3)
    for m, n in itertools.product(range(4), repeat=2):
        assert len(fp.hom(("*",) * m, ("*",) * n)) == m**n


def test_fp_hom_into_empty_product():
    fp = FPCompletion(omega_category(2), 2)
    assert all(len(fp.hom(psi, ())) == 1 for psi in fp.objects)


def test_fp_chain_hom_count_formula():
    fp = FPCompletion(omega_category(3), 3)
    for phi, psi in itertools.product(fp.objects, repeat=2):
        # one map per renaming whose order-interval indicators are all 1
        expected = sum(
            math.prod(int(phi[j] <= psi[i]) for i, j in enumerate(ren))
            for ren in itertools.product(range(len(phi)), repeat=len(psi))
        )
        assert len(fp.hom(phi, psi)) == expected


@pytest.mark.parametrize("cat", [KCategory(2, 2), KCategory(2, 2, nonempty=True),
                                 FPCompletion(omega_category(2), 2), FPCompletion(terminal_category(), 2)])
def test_category_laws_exhaustive(cat):
    objs = [o for o in cat.objects if len(o) <= 2][:9]
    assert check_category_laws(cat, objs) == []


def test_category_laws_bounded_fragment_sampled():
    assert check_category_laws(KCategory(3, 4), sample=1500, seed=3) == []


def test_fp_op_iso_bounds():
    assert check_fp_op_iso(0).ok
    assert check_fp_op_iso(2).ok
    r = check_fp_op_iso(3, 4)
    assert r.ok and r.homs_checked == 156**2


def test_clk_is_nonempty_part():
    clk = KCategory(3, 2, nonempty=True)
    k = KCategory(3, 2)
    assert set(clk.objects) == {o for o in k.objects if o}
    assert check_fp_op_iso(3, 2, nonempty=True).ok
    for a, b in itertools.product(clk.objects[:10], repeat=2):
        assert clk.hom(a, b) == k.hom(a, b)


def test_semidirect_equivalence():
    r = check_semidirect(2, 3)
    assert r.ok


def test_semidirect_is_not_injective_on_objects():
    sd = clocks.Semidirect(FPCompletion(omega_category(1), 2))
    images = [clocks.semidirect_to_fragment(o) for o in sd.objects]
    assert len(images) > len(set(images))


# -- presheaves --------------------------------------------------------------------


CTXS = demanded_contexts(["k", "j"], 2, ["k"])


def test_later_k_examples():
    x = Constant((0, 1))
    lx = later_k(x, "k")
    assert lx.at(ClockContext.of(k=0, j=2)) == (STAR,)
    assert lx.at(ClockContext.of(k=1)) == (0, 1)
    s = stream_in("k", (0, 1))
    assert lx.at(ClockContext.of(k=3)) == (0, 1)
    assert set(later_k(s, "k").at(ClockContext.of(k=2))) == set(itertools.product((0, 1), repeat=2))


def test_later_on_two_clocks_commute():
    x = Product(stream_in("k", (0, 1)), stream_in("j", (0,)))
    a = later_k(later_k(x, "k"), "j")
    b = later_k(later_k(x, "j"), "k")
    for ctx in demanded_contexts(["k", "j"], 3, ["k", "j"]):
        assert a.at(ctx) == b.at(ctx)


@pytest.mark.parametrize("x", [
    Constant((0, 1)),
    stream_in("k", (0, 1)),
    Product(stream_in("k", (0, 1)), stream_in("j", (0, 1))),
    later_k(stream_in("k", (0, 1)), "k"),
    later_k(Product(stream_in("k", (0,)), stream_in("j", (0, 1))), "j"),
])
def test_functoriality(x):
    ctxs = [c for c in CTXS if x.free <= set(c.clocks)]
    if not ctxs:
        ctxs = demanded_contexts(["k", "j"], 2, sorted(x.free))
    assert clocks.functoriality_failures(x, ctxs) == []


def test_next_natural_and_wellpointed():
    for x in [stream_in("k", (0, 1)), Product(stream_in("k", (0, 1)), Constant((0, 1)))]:
        assert clocks.naturality_failures(next_k(x, "k"), CTXS) == []
        assert clocks.wellpointed_failures(x, "k", CTXS) == []


def test_only_maps_fixing_free_clocks():
    s = stream_in("k", (0, 1))
    src = ClockContext.of(k=2, j=2)
    swap = ContextMap(src, src, (("k", "j"), ("j", "k")))
    with pytest.raises(ValueError):
        s.act(swap, (0, 0, 0))
    with pytest.raises(KeyError):
        s.at(ClockContext.of(j=1))
    assert all(m("k") == "k" for m in context_maps(src, src, {"k"}))


def test_fiber_of_later_is_later_of_fiber():
    x = Product(stream_in("k", (0, 1)), Pullback(random_staged_set("f", 3), "j"))
    ctx = ClockContext.of(j=2)
    lf = fiber(later_k(x, "k"), "k", ctx)
    generic = clocks._Fiber(later_k(x, "k"), "k", ctx)
    assert lf.delayed is fiber(x, "k", ctx)
    for n in range(5):
        assert lf.at(n) == generic.at(n)
        for v in lf.at(n + 1):
            assert lf.restrict(n, v) == generic.restrict(n, v)


# -- quantification -------------------------------------------------------------


def test_forall_terminal_is_terminal():
    assert forall_k(Constant(("*",)), "k").truncations(EMPTY, 6) == [("*",) * 7]


def test_forall_later_constant_is_constant():
    assert clocks.check_forall_later_constant((0, 1, 2), "k", 8)


@pytest.mark.parametrize("x,ctx", [
    (Constant((0, 1, 2)), EMPTY),
    (stream_in("j", (0, 1)), ClockContext.of(j=2)),
    (Product(Constant((0,)), Pullback(random_staged_set("irr", 4), "j")), ClockContext.of(j=3)),
])
def test_clock_irrelevance(x, ctx):
    assert clocks.check_clock_irrelevance(x, "k", ctx, 8)


def test_clock_irrelevance_rejects_dependence():
    assert not clocks.check_clock_irrelevance(stream_in("k", (0, 1)), "k", EMPTY, 4)


def test_force_on_constant_drops_the_point():
    x = Constant((0, 1))
    fwd, back = clocks.force(x, "k", EMPTY)
    y = forall_k(later_k(x, "k"), "k").element(EMPTY, lambda n: STAR if n == 0 else 1)
    assert fwd(y).prefix(5) == [1] * 6
    assert back(fwd(y)).agrees(y, 6)


def test_force_recovers_tail():
    s = clocks.builtin_costream("naturals", 10)
    tail = clocks.co_tail(s)
    for n in range(8):
        assert tail.at(n) == s.at(n + 1)[1:]


@pytest.mark.parametrize("seed", range(10))
def test_force_iso_random(seed):
    x, ctx = clocks.random_multipresheaf(seed)
    assert clocks.check_force_iso(x, "k", ctx, 8) == []


def test_forall_action_along_context_maps():
    x = Product(stream_in("k", (0, 1)), stream_in("j", (0, 1)))
    fa = forall_k(x, "k")
    src, dst = ClockContext.of(j=3), ClockContext.of(j=1)
    m = ContextMap(src, dst, (("j", "j"),))
    for e in fa.elements(src, 4):
        moved = fa.act(m, e)
        assert moved.compatible(4)
        assert all(moved.pick(n)[1] == e.pick(n)[1][:2] for n in range(5))


# -- per-clock guarded recursion and co-streams -------------------------------------


@pytest.mark.parametrize("seed", range(5))
def test_per_clock_fixed_points_unique(seed):
    a = random_staged_set(f"pc{seed}", 5)
    x = Product(Pullback(a, "k"), Constant((0,)))
    step = random_step(a, seed, check_upto=0)
    f = clocks.PresheafMap(LaterK(x, "k"), x,
                           lambda ctx, v: (step(ctx.depth("k"), v if v is STAR else v[0]), 0))
    fm = fiber_map(f, "k", EMPTY)
    assert check_fix_unique(fm, 7)


def test_co_take_examples():
    nat = clocks.builtin_costream("naturals", 10)
    assert clocks.co_take(0, nat) == []
    assert clocks.co_take(4, nat) == [0, 1, 2, 3]
    assert clocks.co_head(clocks.co_tail(nat)) == clocks.co_take(2, nat)[1]
    assert clocks.co_take(5, clocks.builtin_costream("alternating")) == [0, 1, 0, 1, 0]
    assert clocks.co_take(3, clocks.builtin_costream("zeros")) == [0, 0, 0]
    with pytest.raises(KeyError):
        clocks.builtin_costream("primes")


@pytest.mark.parametrize("m", [1, 3, 10])
def test_co_take_matches_single_clock_prefix(m):
    s = GuardedStream(range(m))
    single = gfix(cons_step(s, 0, lambda v: (v + 1) % m, check_upto=3))
    co = clocks.builtin_costream("naturals", m)
    for n in range(1, 9):
        assert tuple(clocks.co_take(n, co)) == single.pick(n - 1)


def test_decrement_requires_positive_depth():
    with pytest.raises(ValueError):
        decrement(ClockContext.of(k=0), "k")
