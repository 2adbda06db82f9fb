import pytest
from hypothesis import given, settings, strategies as st

from rcworkbench import kernel as K
from rcworkbench.chain import (
    Filtration,
    PresentationError,
    PresentedBA,
    Term,
    local_lpr,
    rc_check,
    term_leq,
    terms_equal,
)


@st.composite
def presentations(draw, max_gens=6):
    n = draw(st.integers(1, max_gens))
    activation = sorted(draw(st.lists(st.integers(1, 3), min_size=n, max_size=n)))
    pairs = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=n))
    # relations point from later generators to earlier ones, so stages extend conservatively
    rels = sorted({(max(a, b), min(a, b)) for a, b in pairs if a != b})
    return PresentedBA(list(range(n)), rels, activation)


def test_chain_relation_gives_three_atoms():
    P = PresentedBA(["a", "b"], [(0, 1)], [1, 1])
    assert P.stage_model(1).ba.atom_count == 3
    assert P.stage_model(0).ba.atom_count == 1


def test_new_generator_forcing_old_relation_is_named():
    # a <= c <= b with c arriving later forces a <= b
    P = PresentedBA(["a", "b", "c"], [(0, 2), (2, 1)], [1, 1, 2])
    with pytest.raises(PresentationError, match="'a' <= 'b'"):
        P.check_injective()


def test_term_algebra():
    x, y = Term.generator(0), Term.generator(1)
    assert (x & y).support == (0, 1)
    assert (x & y).table == 0b1000
    assert (x | y).table == 0b1110
    assert x.complement().table == 0b01
    assert Term.constant(True).table == 1


def test_inactive_generator_is_refused():
    P = PresentedBA(["a", "b"], [], [1, 2])
    with pytest.raises(ValueError):
        P.local_model([1], 1)


@settings(max_examples=60, deadline=None)
@given(presentations(), st.data())
def test_local_lpr_agrees_with_full_stage_model(P, data):
    m = P.top_stage
    active = P.active(m)
    support = tuple(sorted(data.draw(st.sets(st.sampled_from(active), min_size=1, max_size=3))))
    table = data.draw(st.integers(0, (1 << (1 << len(support))) - 1))
    b = Term(support, table)
    cut = frozenset(data.draw(st.sets(st.sampled_from(active))))
    full = P.stage_model(m)
    sub = full.subalgebra(cut)
    expected = K.lpr(full.ba, sub, full.term(b))
    got = local_lpr(P, cut, b, m)
    assert full.term(got) == expected


@settings(max_examples=60, deadline=None)
@given(presentations(), st.data())
def test_equality_and_order_match_full_model(P, data):
    m = P.top_stage
    active = P.active(m)
    s_sup = tuple(sorted(data.draw(st.sets(st.sampled_from(active), min_size=1, max_size=2))))
    t_sup = tuple(sorted(data.draw(st.sets(st.sampled_from(active), min_size=1, max_size=2))))
    s = Term(s_sup, data.draw(st.integers(0, (1 << (1 << len(s_sup))) - 1)))
    t = Term(t_sup, data.draw(st.integers(0, (1 << (1 << len(t_sup))) - 1)))
    full = P.stage_model(m)
    assert terms_equal(P, s, t, m) == (full.term(s) == full.term(t))
    assert term_leq(P, s, t, m) == (full.term(s) <= full.term(t))


@settings(max_examples=40, deadline=None)
@given(presentations())
def test_downward_relations_embed_conservatively(P):
    P.check_injective()
    for m in range(1, P.top_stage + 1):
        emb = P.stage_embedding(m)
        assert emb.source is P.stage_model(m - 1).ba


def test_filtration_cut_and_continuity():
    P = PresentedBA(list(range(4)), [], [1, 1, 1, 1])
    F = Filtration(P, [0, 1, 2, 3], [0, 1, 2, 3, 4], is_limit=lambda a: a == 4)
    assert F.cut(2) == {0, 1}
    assert F.cut_through(2) == {0, 1, 2}
    assert F.validate() == []


def test_rc_check_on_free_generators_is_stable():
    # with no relations every subalgebra generated by generators is relatively complete
    P = PresentedBA(list(range(4)), [], [1, 2, 3, 4])
    F = Filtration(P, [0, 1, 2, 3], [0, 1, 2, 3, 4])
    cert = rc_check(P, F, 2, 4)
    assert cert.stable
    assert cert.records


def test_rc_check_detects_growth():
    # every later generator sits below y, so lpr(y) keeps growing
    P = PresentedBA(["y", "a", "b", "c"], [(1, 0), (2, 0), (3, 0)], [1, 2, 3, 4])
    F = Filtration(P, [1, 0, 0, 0], [0, 1, 2])
    cert = rc_check(P, F, 1, 4, probes=[("y", Term.generator(0))])
    # lpr(y) into ⟨a, b, c⟩ is 0, then a, a|b, a|b|c
    assert not cert.stable
    assert cert.failure_locus[0].grew_at == [2, 3, 4]
