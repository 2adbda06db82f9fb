import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rcworkbench import kernel as K
from rcworkbench import oracles as O


@st.composite
def algebra_sub_elem(draw, max_atoms=12):
    n = draw(st.integers(1, max_atoms))
    ba = K.FiniteBA(n)
    gens = draw(st.lists(st.integers(0, (1 << n) - 1), max_size=4))
    b = draw(st.integers(0, (1 << n) - 1))
    return ba, gens, ba.elem(b)


def test_free_algebra_generators_in_minterm_order():
    ba, gens = K.make_free(2)
    assert ba.atom_count == 4
    assert [g.bits for g in gens] == [0b1010, 0b1100]


def test_lpr_upr_fixed_values():
    # atoms 0..3, subalgebra with blocks {0,1} and {2,3}
    ba = K.FiniteBA(4)
    sub = K.SubalgebraDesc.from_blocks(ba, [[0, 1], [2, 3]])
    b = ba.from_atoms([0, 1, 2])
    assert K.lpr(ba, sub, b).bits == 0b0011
    assert K.upr(ba, sub, b).bits == 0b1111
    assert K.lpr(ba, sub, ba.zero).is_zero
    assert K.upr(ba, sub, ba.one).is_one


def test_generated_subalgebra_blocks():
    ba = K.FiniteBA(6)
    sub = K.generated_subalgebra(ba, [ba.from_atoms([0, 1, 2]), ba.from_atoms([2, 3])])
    assert sorted(map(sorted, sub.block_index_lists())) == [[0, 1], [2], [3], [4, 5]]


def test_operations_refuse_foreign_algebras():
    a, b = K.FiniteBA(2), K.FiniteBA(2)
    with pytest.raises(K.AlgebraMismatchError):
        a.one & b.one


def test_capacity_gate(monkeypatch):
    monkeypatch.setenv("RCWORKBENCH_MAX_ATOMS", "8")
    with pytest.raises(K.CapacityError):
        K.FiniteBA(9)
    with pytest.raises(K.CapacityError):
        K.make_free(4)
    assert K.make_free(3)[0].atom_count == 8


def test_element_enumeration_is_gated():
    with pytest.raises(K.CapacityError):
        next(K.FiniteBA(17).elements())


@settings(max_examples=150, deadline=None)
@given(algebra_sub_elem())
def test_subalgebra_matches_closure_oracle(data):
    ba, gens, _ = data
    sub = K.generated_subalgebra(ba, [ba.elem(g) for g in gens])
    assert {e.bits for e in sub.elements()} == O.closure(ba.atom_count, gens)
    assert O.closure(ba.atom_count, gens) == O.closure_by_saturation(ba.atom_count, gens)


@settings(max_examples=200, deadline=None)
@given(algebra_sub_elem())
def test_projections_match_brute_force(data):
    ba, gens, b = data
    sub = K.generated_subalgebra(ba, [ba.elem(g) for g in gens])
    elements = O.closure(ba.atom_count, gens)
    assert K.lpr(ba, sub, b).bits == O.lpr(elements, b.bits)
    assert K.upr(ba, sub, b).bits == O.upr(elements, b.bits)
    # duality
    assert K.upr(ba, sub, b) == ~K.lpr(ba, sub, ~b)


@settings(max_examples=150, deadline=None)
@given(algebra_sub_elem(), st.integers(0, (1 << 12) - 1))
def test_lpr_meet_law_and_monotonicity(data, other):
    ba, gens, b = data
    c = ba.elem(other & ba.full_bits)
    sub = K.generated_subalgebra(ba, [ba.elem(g) for g in gens])
    assert K.lpr(ba, sub, b & c) == K.lpr(ba, sub, b) & K.lpr(ba, sub, c)
    assert K.lpr(ba, sub, b) <= b <= K.upr(ba, sub, b)


@settings(max_examples=100, deadline=None)
@given(algebra_sub_elem(), st.lists(st.integers(0, (1 << 12) - 1), max_size=2))
def test_lpr_composes_through_nested_subalgebras(data, extra):
    ba, gens, b = data
    small = K.generated_subalgebra(ba, [ba.elem(g) for g in gens])
    big = K.generated_subalgebra(ba, [ba.elem(g) for g in gens] + [ba.elem(e & ba.full_bits) for e in extra])
    assert big.refines(small)
    assert K.lpr(ba, small, K.lpr(ba, big, b)) == K.lpr(ba, small, b)


@settings(max_examples=100, deadline=None)
@given(algebra_sub_elem(max_atoms=8), st.lists(st.integers(0, 255), max_size=3))
def test_independence_matches_oracle(data, xs):
    ba, gens, _ = data
    xs = [x & ba.full_bits for x in xs]
    sub = K.generated_subalgebra(ba, [ba.elem(g) for g in gens])
    expected = O.independent_over(ba.atom_count, O.closure(ba.atom_count, gens), xs)
    assert K.is_independent_over(ba, sub, [ba.elem(x) for x in xs]) == expected


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 6), st.data())
def test_adjoin_element_prescribes_both_ideals(n, data):
    a = K.FiniteBA(n)
    i = data.draw(st.integers(0, a.full_bits))
    j = data.draw(st.integers(0, a.full_bits)) & ~i
    b, e, x = K.adjoin_element(a, a.elem(i), a.elem(j))
    img = {y.bits for y in e.image_subalgebra().elements()}
    # image elements below x are the images of A↾i, those below -x the images of A↾j
    assert {y for y in img if y & ~x.bits == 0} == {e(a.elem(s)).bits for s in range(1 << n) if s & ~i == 0}
    assert {y for y in img if y & x.bits == 0} == {e(a.elem(s)).bits for s in range(1 << n) if s & ~j == 0}


def test_adjoin_element_rejects_overlapping_ideals():
    a = K.FiniteBA(2)
    with pytest.raises(K.InconsistentExtensionError):
        K.adjoin_element(a, a.atom(0), a.one)


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 7), st.data())
def test_free_over_criterion_matches_search(n, data):
    ba = K.FiniteBA(n)
    labels = data.draw(st.lists(st.integers(0, n - 1), min_size=n, max_size=n))
    sub = K.SubalgebraDesc(ba, np.asarray(labels))
    witness = K.is_free_over(ba, sub)
    blocks = [sum(1 << t for t in idx) for idx in sub.block_index_lists()]
    found = O.free_witness_search(n, blocks)
    assert (witness is None) == (found is None)
    if witness is not None:
        assert K.is_independent_over(ba, sub, witness)
        full = K.generated_subalgebra(ba, [ba.elem(b) for b in blocks] + witness)
        assert full.block_count == n


def test_coproduct_embeddings_are_independent():
    b1, _ = K.make_free(1)
    b2 = K.FiniteBA(3)
    g, e1, e2 = K.coproduct(b1, b2)
    assert g.atom_count == 6
    assert K.is_independent_over(g, e1.image_subalgebra(), [e2(b2.atom(0))])
    assert not K.is_independent_over(g, e1.image_subalgebra(), [e1(b1.atom(0))])
    for a in b1.atoms():
        for c in b2.atoms():
            assert not (e1(a) & e2(c)).is_zero


def test_quotient_by_congruence_and_degenerate_case():
    ba = K.FiniteBA(4)
    q = K.quotient_by_congruence(ba, [(ba.atom(0), ba.zero)])
    assert not q.degenerate and q.algebra.atom_count == 3
    assert K.quotient_by_congruence(ba, [(ba.zero, ba.one)]).degenerate


def test_embedding_by_generators_round_trip():
    f2, (x, y) = K.make_free(2)
    f3, (u, v, w) = K.make_free(3)
    emb = K.embedding_by_generators(f2, [x, y], f3, [u, v])
    assert emb(x) == u and emb(y) == v
    with pytest.raises(K.KernelError):
        K.embedding_by_generators(f2, [x, y], f3, [u, u & v])


def test_serialization_round_trip():
    ba = K.FiniteBA(5)
    sub = K.SubalgebraDesc.from_blocks(ba, [[0, 4], [1], [2, 3]])
    assert K.sub_from_json(ba, K.sub_to_json(sub)).block_index_lists() == sub.block_index_lists()
    e = ba.from_atoms([1, 3])
    assert K.elem_from_json(ba, K.elem_to_json(e)) == e
