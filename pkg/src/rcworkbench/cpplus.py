"""Truncations of the triple H ≤ K ≤ L behind the strong construction principle.

H is free on generators ``x[k, l]`` (block k = 1..n, row l < l_max), K adds
one element x whose ideal over H is generated by the column products
``p_h = x[1, h] · ... · x[n, h]`` and which has nothing of H below ``-x``,
and L is K with ``w`` free generators added.

Nothing infinite is built.  Properties that only make sense in the limit
(non-principality, the relative completeness of ⟨J⟩ when J misses the tail
of a block) are witnessed by sweeping the truncation ``l_max`` and checking
stage-wise certificates across consecutive truncations.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from . import kernel as K
from . import oracles
from .kernel import Elem, FiniteBA, SubalgebraDesc


@dataclass(frozen=True)
class CppParams:
    n: int
    l_max: int
    w: int = 0

    def __post_init__(self):
        if self.n < 1 or self.l_max < 1 or self.w < 0:
            raise ValueError("need n >= 1, l_max >= 1, w >= 0")

    @property
    def generator_count(self) -> int:
        return self.n * self.l_max + 1 + self.w

    def check_capacity(self) -> None:
        h = self.n * self.l_max
        if h > 62:
            raise K.CapacityError(f"{h} free generators")
        K.check_capacity((1 << h) * 2 * (1 << self.w))


@dataclass
class CppTriple:
    params: CppParams
    H: FiniteBA
    K: FiniteBA
    L: FiniteBA
    h_gens: dict                       # (k, l) -> generator of H
    order: list                        # row-major enumeration of (k, l)
    blocks: dict                       # k -> generator indices (positions in ``order``) of block k
    h_to_k: K.Embedding
    k_to_l: K.Embedding
    x: Elem                            # in K
    free_gens: list                    # the w extra generators, in L
    column_products: list              # p_h in H

    @property
    def ideal_generator(self) -> Elem:
        """Σ_{h<l_max} p_h in H."""
        return K.join_all(self.H, self.column_products)

    def k_gen(self, k: int, l: int) -> Elem:
        return self.h_to_k(self.h_gens[(k, l)])

    def k_generators(self) -> list[Elem]:
        """Generators of K ordered row by row (so lower truncations are prefixes), then x."""
        return [self.k_gen(k, l) for k, l in _level_order(self.params)] + [self.x]

    def l_generators(self) -> list[Elem]:
        return [self.k_to_l(g) for g in self.k_generators()] + list(self.free_gens)

    def h_image(self) -> SubalgebraDesc:
        return self.h_to_k.image_subalgebra()

    def sub_of_K(self, pairs: Iterable[tuple[int, int]]) -> SubalgebraDesc:
        return K.generated_subalgebra(self.K, [self.k_gen(k, l) for k, l in pairs])

    def sub_of_L(self, pairs: Iterable[tuple[int, int]]) -> SubalgebraDesc:
        return K.generated_subalgebra(self.L, [self.k_to_l(self.k_gen(k, l)) for k, l in pairs])


def _level_order(p: CppParams) -> list[tuple[int, int]]:
    # rows first so that a smaller truncation is a prefix
    return [(k, l) for l in range(p.l_max) for k in range(1, p.n + 1)]


def build_cpp(p: CppParams) -> CppTriple:
    p.check_capacity()
    order = [(k, l) for k in range(1, p.n + 1) for l in range(p.l_max)]
    H, gens = K.make_free(len(order))
    h_gens = dict(zip(order, gens))
    blocks = {k: [i for i, (kk, _) in enumerate(order) if kk == k] for k in range(1, p.n + 1)}
    products = [K.meet_all(H, (h_gens[(k, h)] for k in range(1, p.n + 1))) for h in range(p.l_max)]
    ideal = K.join_all(H, products)
    Kba, h_to_k, x = K.adjoin_element(H, ideal, H.zero)
    Fw, free = K.make_free(p.w)
    Lba, k_to_l, f_to_l = K.coproduct(Kba, Fw)
    return CppTriple(
        p, H, Kba, Lba, h_gens, order, blocks, h_to_k, k_to_l, x, [f_to_l(g) for g in free], products
    )


# -- truncation sweeps ---------------------------------------------------------


@dataclass
class Sweep:
    """Triples at l_max = 1..top with the natural embeddings between consecutive ones."""

    triples: list[CppTriple]
    k_steps: list[K.Embedding]         # K_l -> K_{l+1}
    l_steps: list[K.Embedding]

    @property
    def top(self) -> int:
        return len(self.triples)

    def level(self, l: int) -> CppTriple:
        return self.triples[l - 1]

    def k_map(self, lo: int, hi: int) -> K.Embedding:
        emb = K.identity_embedding(self.level(lo).K)
        for s in range(lo, hi):
            emb = emb.compose(self.k_steps[s - 1])
        return emb

    def l_map(self, lo: int, hi: int) -> K.Embedding:
        emb = K.identity_embedding(self.level(lo).L)
        for s in range(lo, hi):
            emb = emb.compose(self.l_steps[s - 1])
        return emb


_SWEEPS: dict = {}


def sweep(n: int, w: int, top: int) -> Sweep:
    key = (n, w, top)
    if key in _SWEEPS:
        return _SWEEPS[key]
    triples = [build_cpp(CppParams(n, l, w)) for l in range(1, top + 1)]
    k_steps, l_steps = [], []
    for a, b in zip(triples, triples[1:]):
        ga, gb = a.k_generators(), b.k_generators()
        # x sits last in each list; the first n·l entries are the shared generators
        k_steps.append(K.embedding_by_generators(a.K, ga, b.K, gb[: len(ga) - 1] + [b.x]))
        la, lb = a.l_generators(), b.l_generators()
        shared = len(ga) - 1
        lb_match = lb[:shared] + [lb[len(gb) - 1]] + lb[len(gb):]
        l_steps.append(K.embedding_by_generators(a.L, la, b.L, lb_match))
    _SWEEPS[key] = result = Sweep(triples, k_steps, l_steps)
    return result


# -- clause (ii): H is not relatively complete in K --------------------------------


@dataclass
class CppNonRcCertificate:
    n: int
    w: int
    top: int
    schedule: list[Elem]               # s_m = Σ_{h<m} p_h in K_top, m = 1..top
    strictly_increasing: bool
    below_x: bool
    escapes: dict                      # level l -> column h whose product escapes lpr_l(x)
    exhaustive_levels: list[int]

    @property
    def valid(self) -> bool:
        return self.strictly_increasing and self.below_x and len(self.escapes) == self.top - 1

    def to_json(self) -> dict:
        return {
            "kind": "cpp-non-rc",
            "n": self.n,
            "w": self.w,
            "top": self.top,
            "schedule": [K.elem_to_json(s) for s in self.schedule],
            "strictly_increasing": self.strictly_increasing,
            "below_x": self.below_x,
            "escapes": {str(l): h for l, h in sorted(self.escapes.items())},
            "exhaustive_levels": self.exhaustive_levels,
            "valid": self.valid,
        }


class ConstructionError(RuntimeError):
    pass


def verify_clause_ii(n: int, w: int = 0, top: int = 3) -> CppNonRcCertificate:
    """Schedule of column-product joins below x, escaping every truncated lower projection."""
    sw = sweep(n, w, top)
    T = sw.level(top)
    sched = []
    acc = T.K.zero
    for h in range(top):
        acc = acc | T.h_to_k(T.column_products[h])
        sched.append(acc)
    increasing = all(a < b for a, b in zip(sched, sched[1:]))
    below = all(s <= T.x for s in sched)
    escapes = {}
    exhaustive = []
    for l in range(1, top):
        t, nxt = sw.level(l), sw.level(l + 1)
        step = sw.k_steps[l - 1]
        hsub = t.h_image()
        a_max = K.lpr(t.K, hsub, t.x)
        a_up = step(a_max)
        fresh = nxt.h_to_k(nxt.column_products[l])
        if fresh <= nxt.x and not fresh <= a_up:
            escapes[l] = l
        inside = [b for b in hsub.block_elems() if b <= t.x]
        if len(inside) <= 10 and l in escapes:
            for choice in range(1 << len(inside)):
                a = K.join_all(t.K, (b for j, b in enumerate(inside) if choice >> j & 1))
                a_next = step(a)
                if not (a_next < (a_next | fresh) <= nxt.x):
                    raise ConstructionError(f"level {l}: escape via p_{l} fails for an element below x")
            exhaustive.append(l)
    cert = CppNonRcCertificate(n, w, top, sched, increasing, below, escapes, exhaustive)
    if top >= 2 and not cert.valid:
        raise ConstructionError(f"clause (ii) refuted for n={n}, w={w}, top={top}")
    return cert


# -- clause (i): ⟨J⟩ is relatively complete when J misses a block tail ---------------


class AdmissibilityError(ValueError):
    """J does not omit the tail of any block."""


def admissible_blocks(n: int, J: Iterable[tuple[int, int]], prefix: int) -> list[int]:
    """Blocks k0 with J ∩ block k0 inside rows < prefix."""
    J = set(J)
    return [k for k in range(1, n + 1) if all(l < prefix for kk, l in J if kk == k)]


@dataclass
class ClauseIRecord:
    algebra: str                       # "K" or "L"
    probe: int                         # atom index of the level top-1 model; probe is its complement
    values: dict                       # level -> lpr in the top model (hex); only kept when unstable
    stable: bool


@dataclass
class KeyStepRecord:
    m: int                             # H_m omits rows >= m of block k0
    literal_claim: bool                # no nonzero element of H_m below x
    lpr_matches: bool                  # H_m↾x generated by Σ_{h<m} p_h and H_m↾-x = {0}


@dataclass
class CppRcCertificate:
    n: int
    w: int
    top: int
    J: list
    k0: int
    records: list[ClauseIRecord]
    key_step: list[KeyStepRecord]

    @property
    def stable(self) -> bool:
        return all(r.stable for r in self.records)

    @property
    def failure_locus(self) -> list[ClauseIRecord]:
        return [r for r in self.records if not r.stable]

    def to_json(self) -> dict:
        return {
            "kind": "cpp-rc",
            "n": self.n,
            "w": self.w,
            "top": self.top,
            "J": [list(p) for p in self.J],
            "block_omitted": self.k0,
            "stable": self.stable,
            "probes": len(self.records),
            "failure_locus": [
                {"algebra": r.algebra, "probe_atom": r.probe, "values": {str(k): v for k, v in sorted(r.values.items())}}
                for r in self.failure_locus
            ],
            "key_step": [
                {"m": k.m, "literal_claim": k.literal_claim, "lpr_matches": k.lpr_matches} for k in self.key_step
            ],
        }


def _coatom_lprs(ba: FiniteBA, sub: SubalgebraDesc, atoms: np.ndarray) -> np.ndarray:
    """lpr(-a_t) for each atom index t, as boolean masks (rows)."""
    # lpr(-a) is the complement of the block holding a
    labels = sub.labels
    return labels[None, :] != labels[atoms][:, None]


def verify_clause_i(
    n: int, J: Iterable, w: int = 0, top: int = 3, prefix: Optional[int] = None
) -> CppRcCertificate:
    """lpr into ⟨J⟩ of every element of K_{top-1} (and L_{top-1}), tracked to level top.

    J is a set of (block, row) pairs at level ``top``.  It is admissible if
    some block k0 meets J only in rows < ``prefix`` (default top - 1).  Each
    element of level top-1 is a meet of coatoms and lpr preserves meets, so
    coatom probes cover the whole level.
    """
    J = sorted({(int(k), int(l)) for k, l in J})
    prefix = top - 1 if prefix is None else prefix
    if not 0 <= prefix < top:
        raise AdmissibilityError("prefix must be below the top level")
    for k, l in J:
        if not (1 <= k <= n and 0 <= l < top):
            raise ValueError(f"({k}, {l}) is not a generator at level {top}")
    ks = admissible_blocks(n, J, prefix)
    if not ks:
        raise AdmissibilityError(f"J meets every block beyond row {prefix - 1}")
    k0 = ks[0]
    sw = sweep(n, w, top)
    records = []
    if top >= 2:
        base = top - 1
        for name in ("K", "L"):
            vals = {}
            for lvl in (base, top):
                t = sw.level(lvl)
                ba = t.K if name == "K" else t.L
                pairs = [(k, l) for k, l in J if l < lvl]
                sub = t.sub_of_K(pairs) if name == "K" else t.sub_of_L(pairs)
                emb_in = sw.k_map(base, lvl) if name == "K" else sw.l_map(base, lvl)
                emb_out = sw.k_map(lvl, top) if name == "K" else sw.l_map(lvl, top)
                img = emb_in.atom_image
                # lpr(-b) is -b minus every block meeting b; b = image of atom t
                hit = np.zeros((emb_in.source.atom_count, sub.block_count), dtype=bool)
                hit[img, sub.labels] = True
                vals[lvl] = ~hit[:, sub.labels][:, emb_out.atom_image]
            top_ba = sw.level(top).K if name == "K" else sw.level(top).L
            same = np.all(vals[base] == vals[top], axis=1)
            for t_idx, ok in enumerate(same.tolist()):
                shown = {} if ok else {lvl: K.elem_to_json(top_ba.from_mask(v[t_idx])) for lvl, v in vals.items()}
                records.append(ClauseIRecord(name, t_idx, shown, ok))
    return CppRcCertificate(n, w, top, J, k0, records, key_step(sw.level(top), k0))


def key_step(t: CppTriple, k0: int) -> list[KeyStepRecord]:
    """For H_m = ⟨H minus rows >= m of block k0⟩: what lies below x and below -x."""
    out = []
    for m in range(t.params.l_max + 1):
        pairs = [(k, l) for k, l in t.order if k != k0 or l < m]
        sub = t.sub_of_K(pairs)
        below = K.lpr(t.K, sub, t.x)
        expected = K.join_all(t.K, (t.h_to_k(p) for p in t.column_products[:m]))
        out.append(KeyStepRecord(m, below.is_zero, K.eq(below, expected) and K.lpr(t.K, sub, ~t.x).is_zero))
    return out


# -- laws ----------------------------------------------------------------------------


def exact_ideal_violations(t: CppTriple) -> list[str]:
    """{a ∈ H : e(a) <= x} is the principal ideal of Σ p_h, checked atom by atom.

    Ideals of a finite algebra are unions of atoms, so the atomwise check is
    complete; with at most 16 atoms in H it is repeated over every element.
    """
    out = []
    ideal = t.ideal_generator
    x_mask = t.x.mask()
    img = t.h_to_k.atom_image
    # e(a_s) <= x iff every K atom over s lies in x
    over = np.ones(t.H.atom_count, dtype=bool)
    np.logical_and.at(over, img, x_mask)
    if not np.array_equal(over, ideal.mask()):
        out.append("atomwise: ideal below x differs from the column-product ideal")
    if not K.eq(K.lpr(t.K, t.h_image(), t.x), t.h_to_k(ideal)):
        out.append("lpr of x into H is not the column-product join")
    if t.H.atom_count <= oracles.GATE:
        ideal_bits = ideal.bits
        for a in oracles.unions([1 << i for i in range(t.H.atom_count)]):
            ea = t.h_to_k(t.H.elem(a))
            if (ea <= t.x) != (a & ~ideal_bits == 0):
                out.append(f"element {a:#x}: below x disagrees with the ideal")
                break
    return out


def block_law_violations(t: CppTriple) -> list[str]:
    """Zero products in K: exactly -x · p_h = 0; everything in H is nonzero.

    Checked over full sign patterns (an H atom plus the sign of x); the
    products over any subfamily are joins of these.
    """
    out = []
    img = t.h_to_k.atom_image
    x_mask = t.x.mask()
    pos = np.zeros(t.H.atom_count, dtype=bool)
    neg = np.zeros(t.H.atom_count, dtype=bool)
    pos[img[x_mask]] = True
    neg[img[~x_mask]] = True
    under_p = np.zeros(t.H.atom_count, dtype=bool)
    for p in t.column_products:
        under_p |= p.mask()
    if not pos.all():
        out.append("x · a = 0 for some H atom a")
    if not np.array_equal(~neg, under_p):
        out.append("-x · a = 0 does not match a <= some p_h")
    return out


def free_over_witness(t: CppTriple) -> Optional[list[Elem]]:
    """Witness that L is free over the image of K (expected size w)."""
    return K.is_free_over(t.L, t.k_to_l.image_subalgebra())


# -- independent-witness extension ------------------------------------------------------


@dataclass
class ExtensionStep:
    element: Optional[Elem]
    obstruction: Optional[list[int]] = None   # atoms of a cell that cannot be split

    @property
    def ok(self) -> bool:
        return self.element is not None


def _cells(ba: FiniteBA, sub: SubalgebraDesc, witnesses: Sequence[Elem]) -> np.ndarray:
    labels = sub.labels.copy()
    for wi in witnesses:
        labels = labels * 2 + wi.mask()
    return K._canonical_labels(labels)


def extend_independent_witness(ba: FiniteBA, sub: SubalgebraDesc, witnesses: Sequence[Elem]) -> ExtensionStep:
    """u with witnesses + [u] independent over ``sub``, or the cell blocking every u.

    witnesses + [u] is independent over ``sub`` iff u splits every cell cut
    out by a block of ``sub`` and a sign pattern of the witnesses; such u
    exists iff every cell has two atoms.  The returned u takes the first half
    of each cell.
    """
    if not K.is_independent_over(ba, sub, list(witnesses)):
        raise ValueError("witnesses are not independent over the subalgebra")
    cells = _cells(ba, sub, witnesses)
    sizes = np.bincount(cells)
    small = np.flatnonzero(sizes < 2)
    if small.size:
        return ExtensionStep(None, [int(i) for i in np.flatnonzero(cells == small[0])])
    order = np.argsort(cells, kind="stable")
    starts = np.concatenate([[0], np.cumsum(sizes)[:-1]])
    rank = np.empty(ba.atom_count, dtype=np.int64)
    rank[order] = np.arange(ba.atom_count) - starts[cells[order]]
    return ExtensionStep(ba.from_mask(rank < (sizes[cells] // 2)))


def extend_by_search(ba: FiniteBA, sub: SubalgebraDesc, witnesses: Sequence[Elem]) -> Optional[Elem]:
    """Exhaustive counterpart over all elements (at most 16 atoms)."""
    if ba.atom_count > oracles.GATE:
        raise K.CapacityError("exhaustive search is limited to 16 atoms")
    blocks = [b.bits for b in sub.block_elems()]
    for u in range(1 << ba.atom_count):
        xs = [w.bits for w in witnesses] + [u]
        if oracles.independent_over(ba.atom_count, blocks, xs):
            return ba.elem(u)
    return None


@dataclass
class FreenessLadder:
    """Witness families carried up a chain of finite algebras."""

    stages: list[dict] = field(default_factory=list)

    @property
    def failed_at(self) -> Optional[int]:
        for s in self.stages:
            if not s["complete"]:
                return s["stage"]
        return None


def freeness_ladder(chain: Sequence[tuple[FiniteBA, SubalgebraDesc]], steps: Sequence[K.Embedding]) -> FreenessLadder:
    """Greedy witness extension along ``chain`` (algebra, subalgebra) with embeddings between stages.

    At each stage the carried witnesses are extended until, together with the
    subalgebra, they generate the stage algebra; the stage is incomplete when
    an unsplittable cell blocks that.
    """
    ladder = FreenessLadder()
    witnesses: list[Elem] = []
    for i, (ba, sub) in enumerate(chain):
        if i:
            witnesses = [steps[i - 1](w) for w in witnesses]
        complete = True
        obstruction = None
        if not K.is_independent_over(ba, sub, witnesses):
            complete = False
            obstruction = "carried witnesses lost independence"
        else:
            while len(np.unique(_cells(ba, sub, witnesses))) < ba.atom_count:
                step = extend_independent_witness(ba, sub, witnesses)
                if not step.ok:
                    complete = False
                    obstruction = step.obstruction
                    break
                witnesses.append(step.element)
        ladder.stages.append(
            {"stage": i, "witnesses": len(witnesses), "complete": complete, "obstruction": obstruction}
        )
    return ladder


def k_over_h_ladder(n: int, top: int) -> FreenessLadder:
    """The K-chain over H: fails as soon as x has something of H below it."""
    sw = sweep(n, 0, top)
    chain = [(t.K, t.h_image()) for t in sw.triples]
    return freeness_ladder(chain, sw.k_steps)


def all_J(n: int, top: int) -> Iterable[list[tuple[int, int]]]:
    gens = [(k, l) for k in range(1, n + 1) for l in range(top)]
    for r in range(len(gens) + 1):
        yield from (list(c) for c in itertools.combinations(gens, r))
