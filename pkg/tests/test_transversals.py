import random

import pytest
from hypothesis import given, settings, strategies as st

from rcworkbench import oracles as O
from rcworkbench import transversals as TR
from rcworkbench import lambda_system as LS


def test_free_family():
    r = TR.find_transversal(TR.SetFamily.of([{1, 2}, {2}, {1, 3}]))
    assert r.free
    assert r.transversal == {0: 1, 1: 2, 2: 3}


def test_hall_violator_is_reported():
    F = TR.SetFamily.of([{1, 2}, {1, 2}, {1, 2}, {3}], indices="abcd")
    r = TR.find_transversal(F)
    assert not r.free
    assert r.violator == ["a", "b", "c"]
    assert r.neighbourhood == [1, 2]
    assert TR.check_violator(F, r.violator)


def test_family_validation():
    with pytest.raises(ValueError):
        TR.SetFamily.of([{1}, set()])
    with pytest.raises(ValueError):
        TR.SetFamily.of([{1}, {2}], indices=[0, 0])


def test_almost_free_but_not_free():
    # three sets inside a two-element universe: every two of them have a transversal
    rep = TR.almost_free_sweep(TR.SetFamily.of([{0, 1}, {0, 1}, {0, 1}]))
    assert not rep.free and rep.almost_free


def test_lambda_fixture_family():
    F = TR.family_from_lambda_system(LS.load_fixture("disjoint")["family"])
    assert F.indices == ((0, 0), (0, 1), (1, 0), (1, 1))
    assert TR.find_transversal(F).free


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_matches_exhaustive_choice_functions(seed):
    F = TR.random_family(random.Random(seed))
    r = TR.find_transversal(F)
    sets = [sorted(s) for s in F.sets]
    assert r.free == (O.choice_function_transversal(sets) is not None)
    if r.free:
        chosen = [r.transversal[i] for i in F.indices]
        assert len(set(chosen)) == len(chosen)
        assert all(e in s for e, s in zip(chosen, F.sets))
    else:
        assert O.hall_violated(sets, list(r.violator))
        assert set(r.neighbourhood) == set().union(*(F.sets[j] for j in r.violator))
