import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rcworkbench import cpplus as CP
from rcworkbench import kernel as K
from rcworkbench import oracles as O


@pytest.mark.parametrize("n, l_max", [(1, 1), (1, 3), (2, 1), (2, 2), (3, 2), (2, 3)])
def test_atom_counts(n, l_max):
    t = CP.build_cpp(CP.CppParams(n, l_max, 1))
    g = n * l_max
    # H atoms under some column product: all but the (2^n - 1)^l_max that miss every column
    under = 2 ** g - (2 ** n - 1) ** l_max
    assert t.H.atom_count == 2 ** g
    assert t.ideal_generator.bits.bit_count() == under
    assert t.K.atom_count == 2 ** (g + 1) - under
    assert t.L.atom_count == 2 * t.K.atom_count


def test_frozen_smallest_case():
    t = CP.build_cpp(CP.CppParams(1, 1, 0))
    # H = Fr(1) and p_0 is its generator; x lies above p_0 and meets -p_0
    assert (t.H.atom_count, t.K.atom_count) == (2, 3)
    assert t.k_gen(1, 0) < t.x
    assert K.lpr(t.K, t.h_image(), t.x) == t.k_gen(1, 0)
    assert K.lpr(t.K, t.h_image(), ~t.x).is_zero


def test_capacity_is_checked_before_building(monkeypatch):
    monkeypatch.setenv("RCWORKBENCH_MAX_ATOMS", "64")
    with pytest.raises(K.CapacityError):
        CP.build_cpp(CP.CppParams(3, 2, 0))


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("w", [0, 1])
def test_laws_along_the_sweep(n, w):
    for t in CP.sweep(n, w, 3 if n < 3 else 2).triples:
        assert CP.exact_ideal_violations(t) == []
        assert CP.block_law_violations(t) == []
        witness = CP.free_over_witness(t)
        assert witness is not None and len(witness) == w


def test_exact_ideal_against_brute_force():
    t = CP.build_cpp(CP.CppParams(2, 2, 0))
    ideal = t.ideal_generator.bits
    below = {a for a in range(1 << t.H.atom_count) if t.h_to_k(t.H.elem(a)) <= t.x}
    assert below == {a for a in range(1 << t.H.atom_count) if a & ~ideal == 0}


def test_sweep_embeddings_fix_generators_and_x():
    sw = CP.sweep(2, 1, 3)
    for lo in (1, 2):
        a, b = sw.level(lo), sw.level(lo + 1)
        emb = sw.k_map(lo, lo + 1)
        assert emb(a.x) == b.x
        for k, l in a.order:
            assert emb(a.k_gen(k, l)) == b.k_gen(k, l)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_clause_ii_certificate(n):
    cert = CP.verify_clause_ii(n, 0, 3)
    assert cert.valid and cert.strictly_increasing and cert.below_x
    assert cert.escapes == {1: 1, 2: 2}


def test_clause_i_admissible_is_stable_and_full_J_is_refused():
    stable = CP.verify_clause_i(2, [(1, 0), (2, 0), (2, 1)], 0, 3)
    assert stable.stable
    with pytest.raises(CP.AdmissibilityError):
        CP.verify_clause_i(2, [(k, l) for k in (1, 2) for l in range(3)], 0, 3)


def test_clause_i_rejects_unknown_generators():
    with pytest.raises(ValueError):
        CP.verify_clause_i(2, [(3, 0)], 0, 3)


def test_key_step_corrected_form():
    t = CP.sweep(2, 0, 3).level(3)
    records = CP.key_step(t, 1)
    assert [r.m for r in records] == [0, 1, 2, 3]
    assert all(r.lpr_matches for r in records)
    # nothing nonzero of H_m sits below x only when block 1 is omitted entirely
    assert [r.literal_claim for r in records] == [True, False, False, False]


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 8), st.data())
def test_witness_extension_matches_exhaustive_search(n, data):
    ba = K.FiniteBA(n)
    labels = data.draw(st.lists(st.integers(0, n - 1), min_size=n, max_size=n))
    sub = K.SubalgebraDesc(ba, np.asarray(labels))
    step = CP.extend_independent_witness(ba, sub, [])
    found = CP.extend_by_search(ba, sub, [])
    assert step.ok == (found is not None)
    if step.ok:
        blocks = [b.bits for b in sub.block_elems()]
        assert O.independent_over(n, blocks, [step.element.bits])


def test_k_over_h_ladder_fails_immediately():
    ladder = CP.k_over_h_ladder(2, 2)
    assert ladder.failed_at == 0
