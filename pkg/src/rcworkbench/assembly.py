"""The algebra A(𝒮) of a based family, assembled at truncation.

Each final node η gets its own copy L_η of a CP+ truncation whose H-generators
are labelled by the elements of s_η (block k, row l).  A is the coproduct of
the copies modulo the congruence identifying generators with the same label.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import kernel as K
from .cpplus import CppParams, CppTriple, build_cpp
from .kernel import Elem, FiniteBA, SubalgebraDesc
from .lambda_system import BasedFamily, ReshuffleFailure, height, reshuffle_order_2


class PreconditionError(ValueError):
    pass


@dataclass
class ASAssembly:
    family: BasedFamily
    params: CppParams
    nodes: list                        # final nodes, sorted
    triple: CppTriple                  # the common shape of every L_η
    G: FiniteBA
    copies: list                       # Embedding L -> G per node
    labels: list                       # per node: (k, l) -> base element
    theta_pairs: list                  # ((node index, (k, l)), (node index, (k, l)))
    quotient: K.Quotient

    @property
    def A(self) -> FiniteBA:
        return self.quotient.algebra

    @property
    def degenerate(self) -> bool:
        return self.quotient.degenerate

    def h_in_G(self, i: int, kl) -> Elem:
        t = self.triple
        return self.copies[i](t.k_to_l(t.k_gen(*kl)))

    def h_in_A(self, i: int, kl) -> Elem:
        return self.quotient.projection(self.h_in_G(i, kl))

    def node_generators(self, i: int) -> list[Elem]:
        """Images in A of the generators of L_η."""
        proj = self.quotient.projection
        return [proj(self.copies[i](g)) for g in self.triple.l_generators()]

    def node_index(self, eta) -> int:
        return self.nodes.index(tuple(eta))

    def generated_by_nodes(self, indices: Sequence[int]) -> SubalgebraDesc:
        gens = [g for i in indices for g in self.node_generators(i)]
        return K.generated_subalgebra(self.A, gens)

    @property
    def root_range(self) -> list[int]:
        return sorted({eta[0] for eta in self.nodes})


def build_AS(F: BasedFamily, p: CppParams) -> ASAssembly:
    nodes = sorted(F.blocks)
    if p.n != F.n:
        raise ValueError(f"family has {F.n} blocks per set, parameters have n={p.n}")
    triple = build_cpp(p)
    total = 1
    for _ in nodes:
        total *= triple.L.atom_count
    K.check_capacity(total)
    G, copies = K.coproduct_many([triple.L] * len(nodes))
    labels = [F.enumeration(eta, p.l_max) for eta in nodes]
    first: dict = {}
    pairs = []
    for i, lab in enumerate(labels):
        for kl in sorted(lab):
            item = lab[kl]
            if item in first:
                pairs.append((first[item], (i, kl)))
            else:
                first[item] = (i, kl)
    asm = ASAssembly(F, p, nodes, triple, G, copies, labels, pairs, None)
    elem_pairs = [(asm.h_in_G(*a), asm.h_in_G(*b)) for a, b in pairs]
    asm.quotient = K.quotient_by_congruence(G, elem_pairs)
    return asm


def theta_soundness(asm: ASAssembly) -> list[str]:
    """Identified generators coincide in A; generators with distinct labels stay apart."""
    out = []
    for a, b in asm.theta_pairs:
        if not K.eq(asm.h_in_A(*a), asm.h_in_A(*b)):
            out.append(f"identified generators {a} and {b} differ in A")
    seen = {}
    for i, lab in enumerate(asm.labels):
        for kl, item in sorted(lab.items()):
            seen.setdefault(item, []).append((i, kl))
    reps = {item: asm.h_in_A(*locs[0]) for item, locs in seen.items()}
    items = sorted(reps, key=repr)
    for x, y in zip(items, items[1:]):
        if K.eq(reps[x], reps[y]):
            out.append(f"generators labelled {x!r} and {y!r} collapse in A")
    return out


# -- filtrations ------------------------------------------------------------------------


def filtration_AS(asm: ASAssembly, alpha: int) -> SubalgebraDesc:
    """⟨L_η : η(0) < α⟩ in A; α = -1 gives the trivial subalgebra."""
    return asm.generated_by_nodes([i for i, eta in enumerate(asm.nodes) if eta[0] < alpha])


def second_level(asm: ASAssembly, alpha: int, beta: int) -> SubalgebraDesc:
    """⟨L_η : η(0) < α, or η(0) = α and η(1) < β⟩ in A."""
    idx = [
        i
        for i, eta in enumerate(asm.nodes)
        if eta[0] < alpha or (eta[0] == alpha and len(eta) > 1 and eta[1] < beta)
    ]
    return asm.generated_by_nodes(idx)


def free_over_in(A: FiniteBA, small: SubalgebraDesc, big: SubalgebraDesc) -> Optional[list[Elem]]:
    """Witness that ``big`` is free over ``small`` (both subalgebras of A), as elements of A."""
    if not small.refines(big) and not big.refines(small):
        raise ValueError("subalgebras are not comparable")
    if not big.refines(small):
        raise ValueError("the smaller subalgebra is not contained in the larger one")
    ba, emb = K.subalgebra_as_algebra(big)
    witness = K.is_free_over(ba, K.pull_back(emb, small))
    return None if witness is None else [emb(w) for w in witness]


# -- claims ----------------------------------------------------------------------------


@dataclass
class NodeStep:
    node: tuple
    overlap: list                      # labels shared with earlier nodes
    complement_witness: Optional[int]  # size of a free complement of ⟨overlap⟩ in L_η, None if none exists
    uniform_split: bool                # L_η splits as ⟨overlap⟩ ⊕ C for some C


@dataclass
class ClaimResult:
    kind: str
    lower: tuple
    upper: tuple
    witness: Optional[list]            # elements of A, or None
    order: Optional[list]
    steps: list = field(default_factory=list)
    decomposition_ok: Optional[bool] = None
    note: str = ""

    @property
    def ok(self) -> bool:
        return self.witness is not None

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "lower": list(self.lower),
            "upper": list(self.upper),
            "free": self.ok,
            "witness": None if self.witness is None else [K.elem_to_json(w) for w in self.witness],
            "order": None if self.order is None else [list(e) for e in self.order],
            "steps": [
                {
                    "node": list(s.node),
                    "overlap": [repr(o) for o in s.overlap],
                    "complement_witness": s.complement_witness,
                    "uniform_split": s.uniform_split,
                }
                for s in self.steps
            ],
            "decomposition_ok": self.decomposition_ok,
            "note": self.note,
        }


def _node_steps(asm: ASAssembly, order: Sequence[tuple], start: int) -> tuple[list[NodeStep], list[Elem]]:
    """Per-node complements after position ``start`` of ``order``, with their images in A."""
    steps, images = [], []
    t = asm.triple
    used: set = set()
    for pos, eta in enumerate(order):
        i = asm.node_index(eta)
        lab = asm.labels[i]
        if pos >= start:
            shared = sorted((kl for kl, item in lab.items() if item in used), key=str)
            sub = t.sub_of_L(shared)
            witness = K.is_free_over(t.L, sub)
            sizes = sub.sizes
            uniform = bool(np.all(sizes == sizes[0]))
            if not shared:
                comp = t.l_generators()
            elif witness is not None:
                comp = witness
            else:
                comp = None
            steps.append(NodeStep(eta, [lab[kl] for kl in shared], None if witness is None else len(witness), uniform))
            if comp is not None:
                images.extend(asm.quotient.projection(asm.copies[i](c)) for c in comp)
        used |= set(lab.values())
    return steps, images


def _decomposition(asm, small: SubalgebraDesc, big: SubalgebraDesc, steps, images) -> bool:
    """⟨small ∪ complements⟩ = big with multiplicative atom counts."""
    if any(s.complement_witness is None and s.overlap for s in steps):
        return False
    expected = small.block_count
    comp_sub = K.generated_subalgebra(asm.A, images) if images else SubalgebraDesc.trivial(asm.A)
    gen = small.meet_with(comp_sub)
    # each complement algebra contributes its own atom count
    t = asm.triple
    for s in steps:
        if not s.overlap:
            expected *= t.L.atom_count
        else:
            expected *= 1 << s.complement_witness
    return gen == big and gen.block_count == expected


def claim1_verify(asm: ASAssembly, alpha: int, beta: int, bound: Optional[int] = None) -> ClaimResult:
    """A_β free over A_{α+1}, for -1 <= α < β."""
    if not -1 <= alpha < beta:
        raise ValueError("need -1 <= alpha < beta")
    bound = 0 if bound is None else bound
    small, big = filtration_AS(asm, alpha + 1), filtration_AS(asm, beta)
    witness = free_over_in(asm.A, small, big)
    result = ClaimResult("claim1", (alpha + 1,), (beta,), witness, None)
    I = [eta for eta in asm.nodes if eta[0] < beta]
    try:
        order = reshuffle_order_2(asm.family, (), max(alpha, 0), I, bound) if I else []
    except ReshuffleFailure as exc:
        result.note = f"no reshuffling order: {exc}"
        return result
    result.order = order
    start = sum(1 for eta in order if eta[0] <= alpha)
    if any(eta[0] <= alpha for eta in order[start:]):
        result.note = "reshuffling order does not place the lower nodes first"
        return result
    steps, images = _node_steps(asm, order, start)
    result.steps = steps
    result.decomposition_ok = _decomposition(asm, small, big, steps, images)
    return result


def claim2_verify(asm: ASAssembly, alpha: int, beta: int, bound: Optional[int] = None) -> ClaimResult:
    """A_{α,β} free over A_{α,0} = A_α."""
    h = height(asm.family.system)
    if h is None or h < 2:
        raise PreconditionError("second-level filtration needs a system of height at least 2")
    bound = 0 if bound is None else bound
    small, big = filtration_AS(asm, alpha), second_level(asm, alpha, beta)
    witness = free_over_in(asm.A, small, big)
    result = ClaimResult("claim2", (alpha, 0), (alpha, beta), witness, None)
    I = [eta for eta in asm.nodes if eta[0] == alpha and eta[1] < beta]
    mu = (alpha,)
    if mu not in asm.family.system.node_set or asm.family.system.is_final(mu):
        result.note = f"{list(mu)} is not an inner node"
        return result
    try:
        order = reshuffle_order_2(asm.family, mu, 0, I, bound)
    except ReshuffleFailure as exc:
        result.note = f"no reshuffling order: {exc}"
        return result
    # the proof only needs the part of Ī inside A_{α,β}
    order = [eta for eta in order if eta[0] < alpha or eta in I]
    result.order = order
    start = sum(1 for eta in order if eta[0] < alpha)
    steps, images = _node_steps(asm, order, start)
    result.steps = steps
    result.decomposition_ok = _decomposition(asm, small, big, steps, images)
    return result


def claim_pairs(asm: ASAssembly) -> tuple[list, list]:
    """All (α, β) for claim 1 and (α, β) for claim 2 over the materialized ranges."""
    top = max(asm.root_range) + 1
    c1 = [(a, b) for b in range(top + 1) for a in range(-1, b)]
    c2 = []
    for a in asm.root_range:
        kids = asm.family.system.children((a,))
        c2 += [(a, b) for b in range(max(kids, default=-1) + 2)]
    return c1, c2


# -- relative completeness at the root stages ------------------------------------------------


@dataclass
class RcAtStage:
    alpha: int
    marked: bool
    checked: int
    exhaustive: bool
    levels: dict                       # element count per second-level index where it first appears
    claim2: dict                       # β -> claim-2 freeness flag
    lpr_ok: bool
    note: str

    def to_json(self) -> dict:
        return {
            "alpha": self.alpha,
            "marked": self.marked,
            "checked": self.checked,
            "exhaustive": self.exhaustive,
            "first_level_counts": {str(b): c for b, c in sorted(self.levels.items())},
            "claim2_free": {str(b): v for b, v in sorted(self.claim2.items())},
            "lpr_ok": self.lpr_ok,
            "note": self.note,
        }


def rc_at_marked_stages(asm: ASAssembly, alpha: int, markers: Sequence[int] = ()) -> RcAtStage:
    """lpr into A_α of the elements of A_{α+1}, located along the second-level filtration.

    With at most 16 blocks in A_{α+1} every element is checked; otherwise the
    blocks and their complements are (lpr preserves meets and joins of
    elements of A_α, so these pin down the rest).
    """
    h = height(asm.family.system)
    if h is None or h < 2:
        raise PreconditionError("needs a system of height at least 2")
    lower, upper = filtration_AS(asm, alpha), filtration_AS(asm, alpha + 1)
    kids = asm.family.system.children((alpha,)) if (alpha,) in asm.family.system.node_set else []
    betas = list(range(max(kids, default=-1) + 2))
    levels_sub = [second_level(asm, alpha, b) for b in betas]
    exhaustive = upper.block_count <= 16
    if exhaustive:
        elems = list(upper.elements())
    else:
        blocks = upper.block_elems()
        elems = blocks + [~b for b in blocks]
    claim2 = {}
    counts: dict = {}
    lpr_ok = True
    for a in elems:
        beta = next(b for b, sub in zip(betas, levels_sub) if sub.contains(a))
        counts[beta] = counts.get(beta, 0) + 1
        if beta not in claim2:
            claim2[beta] = claim2_verify(asm, alpha, beta).ok if beta else True
        low = K.lpr(asm.A, lower, a)
        if not (lower.contains(low) and low <= a):
            lpr_ok = False
        # maximality: no block of A_α below a is missed
        for blk in lower.block_elems():
            if blk <= a and not blk <= low:
                lpr_ok = False
    marked = alpha in markers
    note = "" if marked else "unmarked stage: finite stages are always rc; the distinction only shows in the limit"
    return RcAtStage(alpha, marked, len(elems), exhaustive, counts, claim2, lpr_ok, note)


# -- Γ shadow ----------------------------------------------------------------------------------


@dataclass
class GammaDiagnostic:
    flagged: list                      # α with A not free over A_α
    uniform: dict                      # α -> whether A splits over A_α at all (uniform blocks)
    checked: list

    def to_json(self) -> dict:
        return {
            "flagged": self.flagged,
            "checked": self.checked,
            "uniform_split": {str(a): v for a, v in sorted(self.uniform.items())},
            "note": "finite shadow: freeness over A_α at the materialized top stage",
        }


def gamma_diagnostic(asm: ASAssembly) -> GammaDiagnostic:
    top = max(asm.root_range) + 1
    flagged, uniform, checked = [], {}, list(range(top + 1))
    whole = SubalgebraDesc.whole(asm.A)
    for a in checked:
        sub = filtration_AS(asm, a)
        if free_over_in(asm.A, sub, whole) is None:
            flagged.append(a)
        sizes = sub.sizes
        uniform[a] = bool(np.all(sizes == sizes[0]))
    return GammaDiagnostic(flagged, uniform, checked)
