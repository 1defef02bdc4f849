import itertools

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from guardedlab.order import (
    FinitePreorder,
    WfRelation,
    accessible_set,
    adequacy_hypothesis,
    adequacy_predicted,
    all_posets,
    antichain,
    chain,
    check_global_adequacy,
    compatible_wf_relations,
    global_sections,
    is_compatible_wf,
    is_connected,
    is_isomorphic,
    poset_reflection,
    reflexive_transitive_closure,
)


def preorder(elements, pairs):
    return FinitePreorder(tuple(elements), reflexive_transitive_closure(elements, pairs))


def lambda_shape():
    # 0 below both 1 and 2; 1 and 2 incomparable
    p = preorder([0, 1, 2], [(0, 1), (0, 2)])
    return WfRelation(p, frozenset({(0, 1), (0, 2)}))


# -- accessibility -------------------------------------------------------------


def test_accessible_chain():
    assert accessible_set([0, 1, 2], chain(3).prec) == {0, 1, 2}


def test_accessible_loop_is_empty():
    assert accessible_set(["a"], [("a", "a")]) == frozenset()


def test_accessible_empty_relation():
    assert accessible_set(["a", "b"], []) == {"a", "b"}


def _step(carrier, rel, s):
    return frozenset(u for u in carrier if all(v in s for v, w in rel if w == u))


relations = st.integers(0, 5).flatmap(
    lambda n: st.tuples(st.just(tuple(range(n))), st.sets(st.tuples(st.integers(0, max(n - 1, 0)), st.integers(0, max(n - 1, 0)))))
).filter(lambda cr: all(u in cr[0] and v in cr[0] for u, v in cr[1]))


@settings(max_examples=150, deadline=None)
@given(relations)
def test_accessible_is_least_fixed_point(cr):
    carrier, rel = cr
    acc = accessible_set(carrier, rel)
    assert _step(carrier, rel, acc) == acc
    for bits in itertools.product((0, 1), repeat=len(carrier)):
        s = frozenset(c for c, b in zip(carrier, bits) if b)
        if _step(carrier, rel, s) <= s:
            assert acc <= s


@settings(max_examples=150, deadline=None)
@given(relations)
def test_accessible_matches_cycle_oracle(cr):
    # an element is accessible iff no cycle of R lies below it
    carrier, rel = cr
    g = nx.DiGraph()
    g.add_nodes_from(carrier)
    g.add_edges_from(rel)
    on_cycle = {n for comp in nx.strongly_connected_components(g) for n in comp
                if len(comp) > 1 or g.has_edge(n, n)}
    expected = {u for u in carrier if not (nx.ancestors(g, u) | {u}) & on_cycle}
    assert accessible_set(carrier, rel) == expected


# -- compatible well-founded relations -----------------------------------------


def test_omega5_compatible():
    assert is_compatible_wf(chain(5)).ok


def test_reflexive_prec_not_well_founded():
    c = chain(2, strict=False)
    rep = is_compatible_wf(WfRelation(c.base, c.base.leq))
    assert not rep["well_founded"].ok
    assert rep["well_founded"].witness == (0, 0)


def test_left_compatibility_witness():
    c = chain(3)
    rep = is_compatible_wf(WfRelation(c.base, frozenset({(1, 2)})))
    assert not rep["left_compatible"].ok
    assert rep["left_compatible"].witness == (0, 1, 2)


def test_subrelation_and_transitivity_failures():
    a = antichain(2)
    assert is_compatible_wf(WfRelation(a, frozenset({(0, 1)})))["subrelation"].witness == (0, 1)
    c = chain(3)
    rep = is_compatible_wf(WfRelation(c.base, frozenset({(0, 1), (1, 2)})))
    assert rep["transitive"].witness == (0, 1, 2)


def test_preorder_validation():
    with pytest.raises(ValueError):
        FinitePreorder((0, 1), frozenset({(0, 0)}))
    with pytest.raises(ValueError):
        FinitePreorder((0, 1, 2), frozenset({(0, 0), (1, 1), (2, 2), (0, 1), (1, 2)}))


def test_poset_counts():
    # unlabelled posets on n points
    assert [len(all_posets(n)) for n in range(6)] == [1, 1, 2, 5, 16, 63]


def test_compatible_relations_on_chain2():
    rels = {w.prec for w in compatible_wf_relations(chain(2).base)}
    assert rels == {frozenset(), frozenset({(0, 1)})}


# -- poset reflection -----------------------------------------------------------


def test_reflection_of_poset_is_identity():
    r = poset_reflection(chain(4).base, chain(4).prec)
    assert is_isomorphic(r.as_wf(), chain(4))
    assert sorted(r.map) == sorted(set(r.map.values()))


def test_reflection_collapses_cycle():
    p = preorder(["a", "b"], [("a", "b"), ("b", "a")])
    r = poset_reflection(p, [])
    assert len(r.quotient.elements) == 1
    assert r.map == {"a": "a", "b": "a"}


def test_reflection_rejects_bad_prec():
    with pytest.raises(ValueError):
        poset_reflection(chain(2).base, chain(2).base.leq)


def _random_preorder_with_prec(seed_bits):
    n, edges, pick = seed_bits
    elems = list(range(n))
    pre = preorder(elems, [(u, v) for u, v in edges if u < n and v < n])
    strict = [(u, v) for u, v in sorted(pre.leq) if not pre.le(v, u)]
    prec = frozenset(p for i, p in enumerate(strict) if pick >> i & 1)
    return pre, prec


@settings(max_examples=200, deadline=None)
@given(st.tuples(st.integers(0, 5), st.sets(st.tuples(st.integers(0, 4), st.integers(0, 4))), st.integers(0, 2**20)))
def test_reflection_round_trip(data):
    pre, prec = _random_preorder_with_prec(data)
    if not is_compatible_wf(WfRelation(pre, prec)).ok:
        return
    r = poset_reflection(pre, prec)
    assert r.quotient.is_antisymmetric()
    assert is_compatible_wf(r.as_wf()).ok
    for u, v in itertools.product(pre.elements, repeat=2):
        same = pre.le(u, v) and pre.le(v, u)
        assert (r.map[u] == r.map[v]) == same
        if pre.le(u, v):
            assert r.quotient.le(r.map[u], r.map[v])


# -- connectedness ----------------------------------------------------------------


def test_connected_examples():
    assert is_connected(chain(5).base)
    assert not is_connected(antichain(2))
    assert is_connected(preorder("acb", [("c", "a"), ("c", "b")]))
    assert is_connected(antichain(0))


@pytest.fixture(scope="module")
def posets_up_to_6():
    return [p for n in range(7) for p in all_posets(n)]


def test_connected_matches_graph_oracle(posets_up_to_6):
    for p in posets_up_to_6:
        g = nx.Graph()
        g.add_nodes_from(p.elements)
        g.add_edges_from((u, v) for u, v in p.leq if u != v)
        expected = not p.elements or nx.is_connected(g)
        assert is_connected(p) == expected


# -- global adequacy ----------------------------------------------------------------


def test_adequacy_chain():
    assert check_global_adequacy(chain(4), (0, 1))


def test_adequacy_antichain_fails():
    gamma_a, gamma_later, _ = global_sections(WfRelation(antichain(2), frozenset()), (0, 1))
    assert len(gamma_a) == 4 and len(gamma_later) == 1
    assert not check_global_adequacy(WfRelation(antichain(2), frozenset()), (0, 1))


def test_adequacy_singleton_values_always():
    for n in range(4):
        for p in all_posets(n):
            for w in compatible_wf_relations(p):
                assert check_global_adequacy(w, ("only",))


def test_adequacy_lambda_shape():
    # both the poset and its strictly-lower part are connected, yet two
    # independent branches make the later of A strictly bigger than A
    w = lambda_shape()
    assert adequacy_hypothesis(w)
    gamma_a, gamma_later, _ = global_sections(w, (0, 1))
    assert len(gamma_a) == 2 and len(gamma_later) == 4
    assert not check_global_adequacy(w, (0, 1))


def test_adequacy_sharp_criterion_exhaustive():
    for n in range(6):
        for p in all_posets(n):
            for w in compatible_wf_relations(p):
                assert check_global_adequacy(w, (0, 1)) == adequacy_predicted(w)


def test_adequacy_three_values_agrees_with_two():
    for n in range(5):
        for p in all_posets(n):
            for w in compatible_wf_relations(p):
                assert check_global_adequacy(w, (0, 1, 2)) == check_global_adequacy(w, (0, 1))
