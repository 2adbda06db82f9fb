"""Property suites shared by the self-test and the acceptance tests.

Each suite compares the library against the brute-force routines in
:mod:`rcworkbench.oracles` (or against an independent characterization) and
returns a JSON-ready result.  Suites are deterministic given their seed.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field

import numpy as np

from . import assembly as AS
from . import cpplus as CP
from . import kernel as K
from . import lambda_system as LS
from . import oracles as O
from . import tight as T
from . import transversals as TR

MAX_FAILURES = 20


@dataclass
class SuiteResult:
    name: str
    cases: int = 0
    failures: list = field(default_factory=list)
    findings: list = field(default_factory=list)      # mathematical outcomes, not internal faults
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.failures

    def fail(self, message: str) -> None:
        if len(self.failures) < MAX_FAILURES:
            self.failures.append(message)
        elif len(self.failures) == MAX_FAILURES:
            self.failures.append("further failures omitted")

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "cases": self.cases,
            "failures": self.failures,
            "findings": self.findings,
            "details": self.details,
        }


# -- kernel ----------------------------------------------------------------------------


def kernel_suite(seed: int, count: int = 1000, max_atoms: int = 16) -> SuiteResult:
    """lpr/upr against brute force, duality, meet law, composition, independence."""
    res = SuiteResult("kernel")
    rng = random.Random(seed)
    for case in range(count):
        n = rng.randint(1, max_atoms)
        full = (1 << n) - 1
        ba = K.FiniteBA(n)
        gens = [rng.randint(0, full) for _ in range(rng.randint(0, 4))]
        extra = [rng.randint(0, full) for _ in range(rng.randint(1, 3))]
        b, c = rng.randint(0, full), rng.randint(0, full)
        sub = K.generated_subalgebra(ba, [ba.elem(g) for g in gens])
        mid = K.generated_subalgebra(ba, [ba.elem(g) for g in gens + extra])
        elems = O.closure(n, gens)
        res.cases += 1
        tag = f"case {case} (atoms {n})"
        if {e.bits for e in sub.elements()} != elems:
            res.fail(f"{tag}: generated subalgebra differs from the closure")
            continue
        eb, ec = ba.elem(b), ba.elem(c)
        low = K.lpr(ba, sub, eb)
        if low.bits != O.lpr(elems, b):
            res.fail(f"{tag}: lpr differs from the brute-force maximum")
        if K.upr(ba, sub, eb).bits != O.upr(elems, b):
            res.fail(f"{tag}: upr differs from the brute-force minimum")
        if not K.eq(K.upr(ba, sub, eb), ~K.lpr(ba, sub, ~eb)):
            res.fail(f"{tag}: duality upr(b) = -lpr(-b) fails")
        if not K.eq(K.lpr(ba, sub, eb & ec), low & K.lpr(ba, sub, ec)):
            res.fail(f"{tag}: meet law fails")
        # A ≤ C ≤ B: lpr into A of b equals lpr into A of lpr into C of b,
        # computed inside C realized as its own algebra
        cba, cemb = K.subalgebra_as_algebra(mid)
        sub_in_c = K.pull_back(cemb, sub)
        mid_low = K.lpr(ba, mid, eb)
        pre = cba.from_mask(mid_low.mask()[_block_reps(mid)])
        via_c = cemb(K.lpr(cba, sub_in_c, pre))
        if not K.eq(via_c, low):
            res.fail(f"{tag}: lpr composition through an intermediate subalgebra fails")
        xs = [rng.randint(0, full) for _ in range(rng.randint(1, 2))]
        if K.is_independent_over(ba, sub, [ba.elem(x) for x in xs]) != O.independent_over(n, elems, xs):
            res.fail(f"{tag}: independence disagrees with brute force")
    return res


def _block_reps(sub: K.SubalgebraDesc):
    """One atom per block, in block order."""
    reps = np.zeros(sub.block_count, dtype=np.int64)
    reps[sub.labels[::-1]] = np.arange(sub.ba.atom_count)[::-1]
    return reps


def adjoin_suite(seed: int, count: int = 200, max_atoms: int = 8) -> SuiteResult:
    """The extension has exactly the prescribed ideals below x and -x."""
    res = SuiteResult("adjoin_element")
    rng = random.Random(seed)
    for case in range(count):
        n = rng.randint(1, max_atoms)
        full = (1 << n) - 1
        a = K.FiniteBA(n)
        i_bits = rng.randint(0, full)
        j_bits = rng.randint(0, full) & ~i_bits
        B, e, x = K.adjoin_element(a, a.elem(i_bits), a.elem(j_bits))
        res.cases += 1
        for u in range(full + 1):
            eu = e(a.elem(u))
            if (eu <= x) != (u & ~i_bits == 0):
                res.fail(f"case {case}: element {u:#x} below x disagrees with the ideal of {i_bits:#x}")
                break
            if (eu <= ~x) != (u & ~j_bits == 0):
                res.fail(f"case {case}: element {u:#x} below -x disagrees with the ideal of {j_bits:#x}")
                break
        u, v = rng.randint(0, full), rng.randint(0, full)
        eu, ev = e(a.elem(u)), e(a.elem(v))
        if not (K.eq(e(a.elem(u & v)), eu & ev) and K.eq(e(a.elem(full ^ u)), ~eu)):
            res.fail(f"case {case}: the map into the extension is not a homomorphism")
    return res


def free_over_suite(max_atoms: int = 8) -> SuiteResult:
    """is_free_over against exhaustive witness search for every partition."""
    res = SuiteResult("free_over")
    free_count = 0
    for n in range(1, max_atoms + 1):
        ba = K.FiniteBA(n)
        for blocks in O.set_partitions(list(range(n))):
            sub = K.SubalgebraDesc.from_blocks(ba, blocks)
            fast = K.is_free_over(ba, sub)
            slow = O.free_witness_search(n, [K.indices_to_bits(b) for b in blocks])
            res.cases += 1
            if (fast is None) != (slow is None):
                res.fail(f"atoms {n}, blocks {blocks}: criterion says {fast is not None}, search says {slow is not None}")
                continue
            if fast is not None:
                free_count += 1
                bits = [w.bits for w in fast]
                block_bits = [K.indices_to_bits(b) for b in blocks]
                if not O.independent_over(n, block_bits, bits) or len(O.minterms(n, block_bits + bits)) != n:
                    res.fail(f"atoms {n}, blocks {blocks}: returned witness does not certify freeness")
    res.details["free"] = free_count
    return res


# -- tight coding ----------------------------------------------------------------------------


def _subsets(items):
    for r in range(len(items) + 1):
        yield from itertools.combinations(items, r)


def tight_suite(k_maxes=(1, 2, 3), budget: int = 8) -> SuiteResult:
    res = SuiteResult("tight_coding")
    instances = []
    for k_max in k_maxes:
        for S in _subsets(T.limits_in_scope(k_max)):
            tc = T.build_tight_coding(S, k_max, budget)
            res.cases += 1
            tag = f"K_max={k_max}, S={[str(a) for a in S]}"
            for v in T.check_recursion(tc):
                res.fail(f"{tag}: {v}")
            fp = T.fingerprint(tc)
            if fp != sorted(tc.S):
                res.fail(f"{tag}: non-rc certificates at {[str(a) for a in fp]}")
            for alpha in tc.ordinals + [tc.top]:
                if alpha in tc.S:
                    T.verify_non_rc(tc, alpha)
                    if T.rc_check(tc.presented, tc.filtration, alpha, budget).stable:
                        res.fail(f"{tag}: rc stamps stabilize at {alpha} in S")
                else:
                    report = T.verify_rc(tc, alpha, closed_form=False)
                    if not report.certificate.stable:
                        res.fail(f"{tag}: rc stamps do not stabilize at {alpha}")
            closed = T.check_closed_form(tc)
            bad = [r for r in closed if not r.agrees]
            for r in bad[:3]:
                res.fail(f"{tag}: closed form differs for β={r.beta}, δ={r.delta}, stage {r.stage}")
            instances.append({"k_max": k_max, "S": [a.to_json() for a in sorted(tc.S)],
                              "closed_form_checks": len(closed),
                              "non_initial_segments": sum(not r.initial_segment for r in closed)})
    res.details["instances"] = instances
    return res


ZERO_PRODUCT_BUDGETS = {1: 8, 2: 8, 3: 8}


def zero_product_suite(k_maxes=(1, 2, 3), max_size: int = 6, budgets=None) -> SuiteResult:
    """Model zero-ness of every elementary product against the characterization."""
    budgets = budgets or ZERO_PRODUCT_BUDGETS
    res = SuiteResult("zero_product")
    sign_maps = 0
    zeros = 0
    for k_max in k_maxes:
        for S in _subsets(T.limits_in_scope(k_max)):
            tc = T.build_tight_coding(S, k_max, budgets[k_max])
            for r in range(max_size + 1):
                for Y in itertools.combinations(tc.ordinals, r):
                    model_zero, pred = T.zero_product_table(tc, Y)
                    res.cases += 1
                    sign_maps += len(pred)
                    zeros += int(model_zero.sum())
                    if (model_zero != pred).any():
                        res.fail(f"K_max={k_max}, S={[str(a) for a in S]}, Y={[str(y) for y in Y]}")
    res.details.update({"sign_maps": sign_maps, "zero_products": zeros, "budgets": {str(k): v for k, v in budgets.items()}})
    return res


def distinguish_suite(k_max: int = 3, budget: int = 8) -> SuiteResult:
    res = SuiteResult("distinguish")
    subsets = list(_subsets(T.limits_in_scope(k_max)))
    fps = {S: T.fingerprint(T.build_tight_coding(S, k_max, budget)) for S in subsets}
    for S1, S2 in itertools.permutations(subsets, 2):
        res.cases += 1
        if fps[S1] == fps[S2]:
            res.fail(f"{[str(a) for a in S1]} and {[str(a) for a in S2]} share a fingerprint")
    for S, fp in fps.items():
        if fp != sorted(S):
            res.fail(f"fingerprint of {[str(a) for a in S]} is {[str(a) for a in fp]}")
    res.details["fingerprints"] = [[[a.to_json() for a in S], [a.to_json() for a in fp]] for S, fp in fps.items()]
    return res


# -- CP+ ------------------------------------------------------------------------------------


def cpp_suite(ns=(1, 2, 3), ws=(0, 1), top: int = 3) -> SuiteResult:
    res = SuiteResult("cp_plus")
    summary = []
    for n in ns:
        for w in ws:
            tag = f"n={n}, w={w}"
            cert = CP.verify_clause_ii(n, w, top)
            res.cases += 1
            if not (cert.strictly_increasing and cert.below_x and cert.valid):
                res.fail(f"{tag}: clause (ii) certificate invalid")
            for t in CP.sweep(n, w, top).triples:
                for v in CP.exact_ideal_violations(t) + CP.block_law_violations(t):
                    res.fail(f"{tag}, l_max={t.params.l_max}: {v}")
                witness = CP.free_over_witness(t)
                if witness is None or len(witness) != w:
                    res.fail(f"{tag}, l_max={t.params.l_max}: L not free over K with a witness of size {w}")
            admissible = unstable = 0
            for J in CP.all_J(n, top):
                try:
                    c = CP.verify_clause_i(n, J, w, top)
                except CP.AdmissibilityError:
                    continue
                admissible += 1
                res.cases += 1
                if not c.stable:
                    unstable += 1
                    res.fail(f"{tag}: clause (i) unstable for J={J}")
                if not all(k.lpr_matches for k in c.key_step):
                    res.fail(f"{tag}: key step lpr mismatch for J={J}")
            summary.append({"n": n, "w": w, "admissible_J": admissible, "unstable": unstable,
                            "escapes": {str(k): v for k, v in cert.escapes.items()}})
    res.details["sweeps"] = summary
    return res


# -- transversals -----------------------------------------------------------------------------


def transversal_suite(seed: int, count: int = 1000) -> SuiteResult:
    res = SuiteResult("transversals")
    rng = random.Random(seed)
    free = 0
    for case in range(count):
        F = TR.random_family(rng)
        r = TR.find_transversal(F)
        sets = [sorted(s) for s in F.sets]
        brute = O.choice_function_transversal(sets)
        res.cases += 1
        if r.free != (brute is not None):
            res.fail(f"case {case}: matching says free={r.free}, exhaustive search disagrees")
            continue
        if r.free:
            free += 1
            chosen = [r.transversal[i] for i in F.indices]
            if len(set(chosen)) != len(chosen) or any(e not in s for e, s in zip(chosen, F.sets)):
                res.fail(f"case {case}: transversal is not a one-one choice function")
        elif not O.hall_violated(sets, [F.indices.index(j) for j in r.violator]):
            res.fail(f"case {case}: reported violator satisfies Hall's condition")
    res.details["free"] = free
    return res


# -- λ-systems and A(𝒮) --------------------------------------------------------------------------


def assembly_suite(params=CP.CppParams(2, 1, 0)) -> SuiteResult:
    """Shipped fixtures: validation, height, claims, rc at marked stages, Γ shadow."""
    res = SuiteResult("as_construction")
    fx = LS.load_fixture("height2")
    L, F = fx["system"], fx["family"]
    res.cases += 1
    for v in LS.validate_system(L) + LS.validate_family(F):
        res.fail(f"height2: {v}")
    if LS.height(L) != 2:
        res.fail(f"height2: height {LS.height(L)}")
    asm = AS.build_AS(F, params)
    for v in AS.theta_soundness(asm):
        res.fail(f"height2: {v}")
    c1, c2 = AS.claim_pairs(asm)
    claim1 = [AS.claim1_verify(asm, a, b) for a, b in c1]
    claim2 = [AS.claim2_verify(asm, a, b) for a, b in c2]
    for r in claim1 + claim2:
        res.cases += 1
        if not r.ok:
            res.findings.append(f"height2: {r.kind} has no freeness witness for {list(r.lower)} -> {list(r.upper)}")
    rc = [AS.rc_at_marked_stages(asm, a, fx["markers"]) for a in fx["markers"]]
    for r in rc:
        res.cases += 1
        if not r.lpr_ok:
            res.fail(f"height2: lpr into A_{r.alpha} fails")
    gamma = AS.gamma_diagnostic(asm)
    res.cases += 1
    if gamma.flagged != sorted(fx["markers"]):
        res.findings.append(f"height2: Γ shadow {gamma.flagged} differs from markers {fx['markers']}")
    dis = LS.load_fixture("disjoint")
    dasm = AS.build_AS(dis["family"], params)
    dgamma = AS.gamma_diagnostic(dasm)
    res.cases += 1
    if dgamma.flagged:
        res.findings.append(f"disjoint: Γ shadow {dgamma.flagged} is not empty")
    res.details = {
        "atoms": {"G": asm.G.atom_count, "A": asm.A.atom_count},
        "claim1": [r.to_json() for r in claim1],
        "claim2": [r.to_json() for r in claim2],
        "rc_at_marked_stages": [r.to_json() for r in rc],
        "gamma": gamma.to_json(),
        "gamma_disjoint": dgamma.to_json(),
    }
    return res
