import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from guardedlab.order import FinitePreorder, all_posets, antichain, chain, reflexive_transitive_closure
from guardedlab.theories import (
    EMPTY_THEORY,
    THEORY_OF_AN_INHABITED_OBJECT,
    THEORY_OF_AN_OBJECT,
    TOP,
    BagModel,
    GeometricTheory,
    Or,
    Sequent,
    Sym,
    bag_count,
    bag_models_up_to_iso,
    bag_theory,
    cartesian_simplify,
    chain_simplify,
    check_bag_naturality,
    conj,
    enumerate_bag_models,
    enumerate_models,
    filt_theory,
    filters_oracle,
    ibag_theory,
)


def poset(elements, pairs):
    return FinitePreorder(tuple(elements), reflexive_transitive_closure(elements, pairs))


DIAMOND = poset(["bot", "a", "b", "top"], [("bot", "a"), ("bot", "b"), ("a", "top"), ("b", "top")])


def test_undeclared_symbol_rejected():
    with pytest.raises(ValueError):
        GeometricTheory(("a",), [Sequent(Sym("a"), Sym("b"))])


def test_filt_examples():
    empty = filt_theory(antichain(0))
    assert Sequent(TOP, Or(())) in empty.sequents
    assert enumerate_models(empty) == []
    assert enumerate_models(filt_theory(antichain(1))) == [frozenset({0})]
    two = chain(2).base
    assert set(enumerate_models(filt_theory(two))) == {frozenset({0, 1}), frozenset({1})}
    assert set(enumerate_models(filt_theory(antichain(2)))) == {frozenset({0}), frozenset({1})}


def test_enumerate_empty_theory():
    assert enumerate_models(EMPTY_THEORY) == [frozenset()]


def test_filters_oracle_examples():
    for n in range(6):
        assert set(filters_oracle(chain(n).base)) == {frozenset(range(i, n)) for i in range(n)}
    assert set(filters_oracle(DIAMOND)) == {
        frozenset({"top"}), frozenset({"a", "top"}), frozenset({"b", "top"}), frozenset(DIAMOND.elements)}
    assert filters_oracle(antichain(0)) == []


def test_models_are_filters_for_all_small_posets():
    for n in range(6):
        for p in all_posets(n):
            assert set(enumerate_models(filt_theory(p))) == set(filters_oracle(p))


def test_chain_simplification():
    for n in range(6):
        p = chain(n).base
        assert set(enumerate_models(chain_simplify(p))) == set(enumerate_models(filt_theory(p)))
    with pytest.raises(ValueError):
        chain_simplify(antichain(2))


def test_cartesian_simplification():
    # successor-ordinal shape: a chain with a top adjoined is again a chain
    for n in range(1, 6):
        p = chain(n).base
        assert set(enumerate_models(cartesian_simplify(p))) == set(filters_oracle(p))
    assert set(enumerate_models(cartesian_simplify(DIAMOND))) == set(filters_oracle(DIAMOND))
    assert enumerate_models(cartesian_simplify(antichain(1))) == [frozenset({0})]
    with pytest.raises(ValueError, match="top"):
        cartesian_simplify(antichain(2))
    v_shape = poset("abt", [("a", "t"), ("b", "t")])
    with pytest.raises(ValueError, match="meet"):
        cartesian_simplify(v_shape)


def test_bag_structure():
    assert bag_theory(EMPTY_THEORY) == THEORY_OF_AN_OBJECT
    assert ibag_theory(EMPTY_THEORY) == THEORY_OF_AN_INHABITED_OBJECT
    assert THEORY_OF_AN_OBJECT.predicates == () and THEORY_OF_AN_OBJECT.sequents == ()
    assert len(THEORY_OF_AN_INHABITED_OBJECT.sequents) == 1
    t = filt_theory(DIAMOND)
    b = bag_theory(t)
    assert len(b.predicates) == len(t.symbols) and len(b.indexed_sequents) == len(t.sequents)


def test_bag_examples():
    t = filt_theory(chain(2).base)
    assert len(enumerate_bag_models(bag_theory(t), 2, exact=2)) == 4
    assert all(m.index for m in enumerate_bag_models(ibag_theory(t), 3))
    bad = filt_theory(antichain(0))
    assert enumerate_bag_models(bag_theory(bad), 3) == [BagModel((), ())]
    assert enumerate_bag_models(ibag_theory(bad), 3) == []


def test_bag_counts_formula():
    assert bag_count(2, 3) == (1 + 2 + 4 + 8, 1 + 2 + 3 + 4)
    assert bag_count(2, 3, inhabited=True) == (2 + 4 + 8, 2 + 3 + 4)
    assert bag_count(0, 3) == (1, 1)


@pytest.mark.parametrize("n", range(5))
def test_bag_counts_all_small_posets(n):
    for p in all_posets(n):
        t = filt_theory(p)
        f = len(filters_oracle(p))
        for m in range(4):
            bag = enumerate_bag_models(bag_theory(t), m)
            assert len(bag) == sum(f**k for k in range(m + 1))
            assert len(bag_models_up_to_iso(bag)) == bag_count(f, m)[1]
            assert len(enumerate_bag_models(ibag_theory(t), m)) == len(bag) - 1


def test_up_to_iso_matches_multiset_oracle():
    t = filt_theory(antichain(3))
    models = enumerate_models(t)
    bag = enumerate_bag_models(bag_theory(t), 3)
    multisets = {tuple(sorted(tuple(sorted(m)) for m in c)) for k in range(4)
                 for c in itertools.combinations_with_replacement(models, k)}
    assert len(bag_models_up_to_iso(bag)) == len(multisets)


symbols = st.lists(st.sampled_from("abcd"), unique=True, min_size=1, max_size=4)


def _theory(draw_syms, data):
    syms = tuple(draw_syms)
    atoms = [Sym(s) for s in syms]
    seqs = []
    for lhs_bits, rhs_bits, as_conj in data:
        lhs = conj(*[a for i, a in enumerate(atoms) if lhs_bits >> i & 1])
        parts = [a for i, a in enumerate(atoms) if rhs_bits >> i & 1]
        rhs = conj(*parts) if as_conj else Or(tuple(parts))
        seqs.append(Sequent(lhs, rhs))
    return GeometricTheory(syms, seqs)


@settings(max_examples=60, deadline=None)
@given(symbols, st.lists(st.tuples(st.integers(0, 15), st.integers(0, 15), st.booleans()), max_size=4),
       st.booleans(), st.randoms(use_true_random=False))
def test_bag_natural_under_renaming(syms, data, inhabited, rnd):
    t = _theory(syms, data)
    targets = [f"{s}'" for s in syms]
    rnd.shuffle(targets)
    ren = dict(zip(syms, targets))
    assert check_bag_naturality(t, ren, 2, inhabited)


@settings(max_examples=60, deadline=None)
@given(symbols, st.lists(st.tuples(st.integers(0, 15), st.integers(0, 15), st.booleans()), max_size=4))
def test_bag_raw_count_is_power(syms, data):
    t = _theory(syms, data)
    n = len(enumerate_models(t))
    for m in range(3):
        assert len(enumerate_bag_models(bag_theory(t), m, exact=m)) == n**m
