"""The ten acceptance criteria at their stated sizes and runtime limits.

Each test prints one line ``[PASS|FAIL] <n> <name> (<seconds>s / <limit>s)``.
Run with ``pytest tests/test_acceptance.py -s`` to see the lines inline; they
are also collected in the terminal summary.
"""
import time

import pytest

from rcworkbench import assembly as AS
from rcworkbench import cli
from rcworkbench import lambda_system as LS
from rcworkbench import suites as S
from rcworkbench.cpplus import CppParams

LINES = []


def _report(number, name, limit, body):
    start = time.perf_counter()
    problems = body()
    elapsed = time.perf_counter() - start
    if elapsed > limit:
        problems = list(problems) + [f"runtime {elapsed:.1f}s exceeds {limit}s"]
    status = "PASS" if not problems else "FAIL"
    line = f"[{status}] {number:>2} {name} ({elapsed:.1f}s / {limit}s)"
    LINES.append(line)
    print(line)
    for p in problems[:10]:
        print(f"         {p}")
    assert not problems, "\n".join(str(p) for p in problems[:10])


def _suite(result):
    def body():
        return result().failures
    return body


@pytest.mark.acceptance
def test_1_kernel_oracle_suite():
    _report(1, "kernel oracle suite", 60, _suite(lambda: S.kernel_suite(seed=1, count=1000, max_atoms=16)))


@pytest.mark.acceptance
def test_2_adjoin_element_exactness():
    _report(2, "adjoin_element exactness", 30, _suite(lambda: S.adjoin_suite(seed=2, count=200, max_atoms=8)))


@pytest.mark.acceptance
def test_3_tight_coding_fidelity():
    _report(3, "tight-coding fidelity", 300, _suite(lambda: S.tight_suite((1, 2, 3), budget=8)))


@pytest.mark.acceptance
def test_4_zero_product_characterization():
    def body():
        res = S.zero_product_suite((1, 2, 3), max_size=6, budgets={1: 8, 2: 8, 3: 8})
        return res.failures + ([] if res.cases else ["no cases ran"])
    _report(4, "zero-product characterization", 300, body)


@pytest.mark.acceptance
def test_5_distinguishing_diagnostic():
    _report(5, "distinguishing diagnostic", 120, _suite(lambda: S.distinguish_suite(3, budget=8)))


@pytest.mark.acceptance
def test_6_cp_plus_clauses():
    _report(6, "CP+ clauses", 180, _suite(lambda: S.cpp_suite((1, 2, 3), (0, 1), top=3)))


@pytest.mark.acceptance
def test_7_free_over_criterion():
    _report(7, "is_free_over vs witness search", 120, _suite(lambda: S.free_over_suite(max_atoms=8)))


@pytest.mark.acceptance
def test_8_as_fixtures():
    def body():
        problems = []
        fx = LS.load_fixture("height2")
        L, F = fx["system"], fx["family"]
        problems += LS.validate_system(L) + LS.validate_family(F)
        if LS.height(L) != 2:
            problems.append(f"height {LS.height(L)}")
        asm = AS.build_AS(F, CppParams(2, 1, 0))
        c1, c2 = AS.claim_pairs(asm)
        for a, b in c1:
            if not AS.claim1_verify(asm, a, b).ok:
                problems.append(f"claim 1: no witness for A_{b} over A_{a + 1}")
        for a, b in c2:
            if not AS.claim2_verify(asm, a, b).ok:
                problems.append(f"claim 2: no witness for A_({a},{b}) over A_{a}")
        for a in asm.root_range:
            if not AS.rc_at_marked_stages(asm, a, fx["markers"]).lpr_ok:
                problems.append(f"rc at marked stages fails for α={a}")
        gamma = AS.gamma_diagnostic(asm)
        if gamma.flagged != sorted(fx["markers"]):
            problems.append(f"Γ shadow {gamma.flagged} differs from markers {sorted(fx['markers'])}")
        dis = LS.load_fixture("disjoint")
        dgamma = AS.gamma_diagnostic(AS.build_AS(dis["family"], CppParams(2, 1, 0)))
        if dgamma.flagged:
            problems.append(f"disjoint fixture: Γ shadow {dgamma.flagged}, expected empty")
        return problems
    _report(8, "A(S) fixtures", 120, body)


@pytest.mark.acceptance
def test_9_transversals():
    _report(9, "transversals vs exhaustive search", 120, _suite(lambda: S.transversal_suite(seed=9, count=1000)))


@pytest.mark.acceptance
def test_10_determinism(tmp_path):
    def body():
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        codes = [cli.main(["selftest", "--seed", "7", "-o", str(p)]) for p in (a, b)]
        problems = [f"selftest exited {c}" for c in codes if c != 0]
        if a.read_bytes() != b.read_bytes():
            problems.append("selftest reports differ")
        return problems
    _report(10, "selftest determinism", 600, body)
