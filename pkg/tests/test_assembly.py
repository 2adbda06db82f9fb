import pytest

from rcworkbench import assembly as AS
from rcworkbench import kernel as K
from rcworkbench import lambda_system as LS
from rcworkbench.cpplus import CppParams


@pytest.fixture(scope="module")
def height2():
    fx = LS.load_fixture("height2")
    return fx, AS.build_AS(fx["family"], CppParams(2, 1, 0))


def test_sizes_and_theta(height2):
    fx, asm = height2
    assert asm.G.atom_count == 7 ** 4
    assert asm.A.atom_count == 637
    assert AS.theta_soundness(asm) == []
    # shared labels: a0 between (0,0), (0,1), (1,1)
    assert len(asm.theta_pairs) == 2


def test_filtration_is_increasing(height2):
    _, asm = height2
    subs = [AS.filtration_AS(asm, a) for a in asm.root_range]
    for lo, hi in zip(subs, subs[1:]):
        assert hi.refines(lo)
    assert AS.filtration_AS(asm, max(asm.root_range)).block_count <= asm.A.atom_count


def test_trivial_claim_pairs_have_witnesses(height2):
    _, asm = height2
    # A_1 over A_{0+1}
    r = AS.claim1_verify(asm, 0, 1)
    assert r.ok and r.witness == []


def test_claim2_needs_height_two():
    raw = {"nodes": [{"node": [], "rank": 4, "base": [], "stationary": True},
                     {"node": [0], "rank": 0, "base": ["a"]}]}
    L = LS.system_from_json(raw)
    F = LS.BasedFamily(L, {(0,): [["a"], ["b"]]}, 2)
    asm = AS.build_AS(F, CppParams(2, 1, 0))
    with pytest.raises(AS.PreconditionError):
        AS.claim2_verify(asm, 0, 0)


def test_rc_at_marked_stages_completes(height2):
    fx, asm = height2
    for a in fx["markers"]:
        assert AS.rc_at_marked_stages(asm, a, fx["markers"]).lpr_ok


def test_gamma_matches_markers_on_height2(height2):
    fx, asm = height2
    assert AS.gamma_diagnostic(asm).flagged == fx["markers"]


def test_free_over_in_agrees_with_kernel(height2):
    _, asm = height2
    small = K.SubalgebraDesc.trivial(asm.A)
    big = K.SubalgebraDesc.whole(asm.A)
    # 637 is odd, so A cannot be free over the two-element algebra
    assert AS.free_over_in(asm.A, small, big) is None
