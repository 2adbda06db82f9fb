import itertools

import pytest
from hypothesis import given, settings, strategies as st

from rcworkbench import kernel as K
from rcworkbench import tight as T
from rcworkbench.chain import rc_check

O = T.Ordinal


def all_S(k_max):
    limits = T.limits_in_scope(k_max)
    for r in range(len(limits) + 1):
        yield from itertools.combinations(limits, r)


@pytest.mark.parametrize(
    "text, expected",
    [("w", O(1, 0)), ("ω·2+3", O(2, 3)), ("omega*3", O(3, 0)), ("7", O(0, 7)), ([2, 1], O(2, 1)), (4, O(0, 4))],
)
def test_parse_ordinal(text, expected):
    assert T.parse_ordinal(text) == expected


@pytest.mark.parametrize("bad", ["", "x", "w**2", [1], True, 1.5])
def test_parse_ordinal_rejects(bad):
    with pytest.raises(ValueError):
        T.parse_ordinal(bad)


def test_ordinal_rendering_and_order():
    assert [str(a) for a in (O(0, 3), O(1, 0), O(1, 2), O(2, 0), O(3, 1))] == ["3", "ω", "ω+2", "ω·2", "ω·3+1"]
    assert O(0, 99) < O(1, 0) < O(1, 1) < O(2, 0)
    assert O(2, 0).is_limit and not O(0, 0).is_limit and not O(1, 1).is_limit


def test_scope_sizes():
    assert len(T.scope(3, 4)) == 12
    assert T.limits_in_scope(3) == [O(1, 0), O(2, 0)]


def test_small_instance_shape():
    tc = T.build_tight_coding(["w"], 2, 5)
    assert len(tc.ordinals) == 10
    # ω sits above ω·0+1 .. ω·0+4, the ladder points inside the budget
    assert sorted((tc.ordinals[r.lower], tc.ordinals[r.upper]) for r in tc.presented.relations) == [
        (O(0, n), O(1, 0)) for n in range(1, 5)
    ]


def test_ladder_meeting_S_is_rejected():
    bad = T.LadderSystem(3, {O(1, 0): [O(0, 1), O(0, 2)], O(2, 0): [O(1, 0), O(1, 1)]})
    with pytest.raises(T.LadderError, match="meets S"):
        T.build_tight_coding(["w", "w*2"], 3, 4, bad)


def test_non_limit_in_S_is_rejected():
    with pytest.raises(ValueError):
        T.build_tight_coding(["w+1"], 2, 4)


@pytest.mark.parametrize("k_max", [1, 2, 3])
def test_recursion_holds_at_every_stage(k_max):
    for S in all_S(k_max):
        tc = T.build_tight_coding(S, k_max, 5)
        assert T.check_recursion(tc) == []


def test_verifiers_refuse_the_wrong_side():
    tc = T.build_tight_coding(["w"], 3, 4)
    with pytest.raises(ValueError):
        T.verify_rc(tc, "w")
    with pytest.raises(ValueError):
        T.verify_non_rc(tc, "w*2")


def test_non_rc_certificate_escapes_every_stage():
    tc = T.build_tight_coding(["w"], 2, 6)
    cert = T.verify_non_rc(tc, "w")
    assert sorted(cert.escapes) == [1, 2, 3, 4, 5]
    assert cert.schedule[-1].support == tuple(tc.gen(O(0, n)) for n in range(1, 6))
    assert not rc_check(tc.presented, tc.filtration, O(1, 0), 6).stable


def test_rc_outside_S_and_closed_form():
    tc = T.build_tight_coding(["w*2"], 3, 5)
    for alpha in (O(1, 0), O(0, 2), O(1, 3), O(3, 0)):
        report = T.verify_rc(tc, alpha)
        assert report.certificate.stable
        assert report.closed_form_ok


@pytest.mark.parametrize("k_max", [2, 3])
def test_fingerprint_recovers_S(k_max):
    for S in all_S(k_max):
        assert T.fingerprint(T.build_tight_coding(S, k_max, 5)) == sorted(S)


def test_distinguish_pair():
    rep = T.distinguish(["w"], ["w*2"], 3, 5)
    assert rep.distinguished
    assert rep.fingerprint1 == [O(1, 0)] and rep.fingerprint2 == [O(2, 0)]


def test_zero_product_frozen_example():
    tc = T.build_tight_coding(["w"], 2, 4)
    # -x_ω · x_1 = 0 since x_1 <= x_ω; x_ω · -x_1 is not
    assert T.zero_product(tc, ["w", 1], {"w": 1, 1: 0}) == (True, True)
    assert T.zero_product(tc, ["w", 1], {"w": 0, 1: 1}) == (False, False)
    # x_0 is not a ladder point of ω
    assert T.zero_product(tc, ["w", 0], {"w": 1, 0: 0}) == (False, False)


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_zero_product_table_matches_full_stage_model(data):
    k_max = data.draw(st.integers(1, 3))
    S = data.draw(st.sampled_from(list(all_S(k_max))))
    tc = T.build_tight_coding(S, k_max, 4)
    Y = data.draw(st.lists(st.sampled_from(tc.ordinals), unique=True, max_size=4))
    model_zero, pred = T.zero_product_table(tc, Y)
    full = tc.presented.stage_model(tc.budget)
    for g in range(1 << len(Y)):
        prod = K.elementary_product(full.ba, [full.gen(tc.gen(y)) for y in Y], [(g >> i) & 1 for i in range(len(Y))])
        assert bool(model_zero[g]) == prod.is_zero
        assert bool(pred[g]) == T.zero_characterization(tc, Y, {y: (g >> i) & 1 for i, y in enumerate(Y)})
    assert (model_zero == pred).all()
