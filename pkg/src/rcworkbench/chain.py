"""Countable Boolean algebras presented as chains of finite stage models.

A :class:`PresentedBA` has generators, inequality relations ``g_i <= g_j``
and an activation stage per generator.  Stage ``m`` is the free algebra on
the generators active at ``m`` modulo the join of ``g_i · -g_j`` over the
active relations.

Relations are pure implications between generators, so the subalgebra of a
stage model generated by a generator subset ``X`` is the free algebra on
``X`` modulo the *transitive closure* of the relations restricted to ``X``:
every assignment of ``X`` consistent with the closed relations extends to all
active generators (switch on exactly what is reachable from a true
generator).  :meth:`PresentedBA.local_model` uses this, and
:meth:`PresentedBA.model_for` widens a support to whole connected components
of the relation graph.  A component model is a coproduct factor of the stage
model, so lower projections of elements supported there can be computed
inside it.  Both facts are re-checked against full stage models in the test
suite.

Finite stages cannot tell rc from non-rc (every ideal of a finite algebra is
principal).  What this module certifies is behaviour *across* stages: a lower
projection that keeps growing until the budget is evidence against
principality in the limit, one that has stopped changing is evidence for it.
"""
from __future__ import annotations

import functools
import threading
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Optional, Sequence

import numpy as np

from . import kernel as K
from .kernel import Elem, FiniteBA, SubalgebraDesc


class PresentationError(Exception):
    """A stage map failed to be injective."""


@functools.lru_cache(maxsize=1 << 14)
def pattern_codes(n: int, pairs: tuple[tuple[int, int], ...]) -> np.ndarray:
    """Atom codes of Fr(n) modulo x_i <= x_j for (i, j) in ``pairs``; bit i is x_i."""
    free, fgens = K.make_free(n)
    r = free.zero
    for i, j in pairs:
        r = r | (fgens[i] - fgens[j])
    _, proj = K.quotient_by_element(free, r)
    codes = proj.atom_image.copy()
    codes.setflags(write=False)
    return codes


@dataclass(frozen=True)
class Model:
    """A finite model on an ordered set of generator indices.

    ``codes[t]`` is the assignment of atom ``t``: bit ``i`` is the value of
    generator ``gens[i]``.
    """

    ba: FiniteBA
    gens: tuple[int, ...]
    codes: np.ndarray
    stage: int

    def position(self, g: int) -> int:
        return self.gens.index(g)

    def gen(self, g: int) -> Elem:
        return self.ba.from_mask((self.codes >> self.position(g)) & 1)

    def subalgebra(self, gens: Iterable[int]) -> SubalgebraDesc:
        return K.generated_subalgebra(self.ba, [self.gen(g) for g in sorted(gens) if g in self.gens])

    def restricted_codes(self, support: Sequence[int]) -> np.ndarray:
        out = np.zeros(self.ba.atom_count, dtype=np.int64)
        for i, g in enumerate(support):
            out |= ((self.codes >> self.position(g)) & 1) << i
        return out

    def term(self, t: "Term") -> Elem:
        table = K.bits_to_mask(t.table, 1 << len(t.support))
        return self.ba.from_mask(table[self.restricted_codes(t.support)])

    def to_term(self, a: Elem, support: Sequence[int]) -> "Term":
        """Express ``a`` as a function of ``support``; raises if it is not one."""
        support = tuple(sorted(support))
        sub = self.restricted_codes(support)
        mask = a.mask()
        on = np.unique(sub[mask])
        off = np.unique(sub[~mask])
        if np.intersect1d(on, off).size:
            raise ValueError("element is not generated by the given support")
        return Term(support, K.indices_to_bits(on.tolist()))


@dataclass(frozen=True)
class Term:
    """An element of Fr(support): ``table`` bit ``c`` is the value at assignment ``c``."""

    support: tuple[int, ...]
    table: int

    @classmethod
    def generator(cls, g: int) -> "Term":
        return cls((g,), 0b10)

    @classmethod
    def constant(cls, value: bool) -> "Term":
        return cls((), 1 if value else 0)

    def complement(self) -> "Term":
        return Term(self.support, ((1 << (1 << len(self.support))) - 1) ^ self.table)

    def _aligned(self, other: "Term"):
        support = tuple(sorted(set(self.support) | set(other.support)))
        return support, self._extend(support), other._extend(support)

    def _extend(self, support: tuple[int, ...]) -> int:
        codes = np.arange(1 << len(support), dtype=np.int64)
        small = np.zeros_like(codes)
        for i, g in enumerate(self.support):
            small |= ((codes >> support.index(g)) & 1) << i
        table = K.bits_to_mask(self.table, 1 << len(self.support))
        return K.mask_to_bits(table[small])

    def __and__(self, other: "Term") -> "Term":
        support, a, b = self._aligned(other)
        return Term(support, a & b)

    def __or__(self, other: "Term") -> "Term":
        support, a, b = self._aligned(other)
        return Term(support, a | b)

    def to_json(self) -> dict:
        return {"support": list(self.support), "table": format(self.table, "#x")}


def join_terms(terms: Iterable[Term]) -> Term:
    out = Term.constant(False)
    for t in terms:
        out = out | t
    return out


@dataclass(frozen=True)
class Relation:
    lower: int
    upper: int
    label: str = ""


class PresentedBA:
    """Generators, inequality relations and an activation schedule."""

    def __init__(
        self,
        generators: Sequence[Hashable],
        relations: Iterable[tuple[int, int]],
        activation: Sequence[int],
        ideal_constraints: Optional[dict[int, tuple[int, ...]]] = None,
    ):
        if len(activation) != len(generators):
            raise ValueError("one activation stage per generator")
        if any(a < 1 for a in activation):
            raise ValueError("activation stages start at 1 (stage 0 is the algebra 2)")
        self.generators = tuple(generators)
        self.index = {g: i for i, g in enumerate(self.generators)}
        self.relations = tuple(r if isinstance(r, Relation) else Relation(*r) for r in relations)
        for r in self.relations:
            if not (0 <= r.lower < len(generators) and 0 <= r.upper < len(generators)):
                raise ValueError(f"relation {r} names an unknown generator")
        self.activation = tuple(int(a) for a in activation)
        # x_j: lower ideal generated by the listed generators, empty co-ideal;
        # realized by the inequalities alone (no lower bound on -x_j)
        self.ideal_constraints = dict(ideal_constraints or {})
        self.top_stage = max(self.activation, default=0)
        self._cache: dict = {}
        self._lock = threading.Lock()

    def __repr__(self):
        return f"<PresentedBA {len(self.generators)} gens, {len(self.relations)} relations, top stage {self.top_stage}>"

    # -- structure ------------------------------------------------------------

    def active(self, m: int) -> tuple[int, ...]:
        return tuple(i for i, a in enumerate(self.activation) if a <= m)

    def active_relations(self, m: int) -> list[Relation]:
        return [r for r in self.relations if self.activation[r.lower] <= m and self.activation[r.upper] <= m]

    def birth(self, support: Iterable[int]) -> int:
        return max((self.activation[g] for g in support), default=0)

    def _closure(self, m: int) -> dict[int, set[int]]:
        key = ("closure", m)
        if key not in self._cache:
            up: dict[int, set[int]] = {g: set() for g in self.active(m)}
            for r in self.active_relations(m):
                up[r.lower].add(r.upper)
            reach = {}
            for g in up:
                seen, stack = set(), [g]
                while stack:
                    for h in up[stack.pop()]:
                        if h not in seen:
                            seen.add(h)
                            stack.append(h)
                reach[g] = seen
            self._store(key, reach)
        return self._cache[key]

    def components(self, m: int) -> list[frozenset[int]]:
        key = ("components", m)
        if key not in self._cache:
            parent = {g: g for g in self.active(m)}

            def find(g):
                while parent[g] != g:
                    parent[g] = parent[parent[g]]
                    g = parent[g]
                return g

            for r in self.active_relations(m):
                parent[find(r.lower)] = find(r.upper)
            groups: dict[int, set[int]] = {}
            for g in parent:
                groups.setdefault(find(g), set()).add(g)
            self._store(key, sorted((frozenset(s) for s in groups.values()), key=min))
        return self._cache[key]

    def _store(self, key, value):
        with self._lock:
            self._cache.setdefault(key, value)

    # -- models ---------------------------------------------------------------

    def _build(self, gens: tuple[int, ...], m: int, pairs: Iterable[tuple[int, int]]) -> Model:
        free, fgens = K.make_free(len(gens))
        pos = {g: i for i, g in enumerate(gens)}
        r = free.zero
        for lo, hi in pairs:
            r = r | (fgens[pos[lo]] - fgens[pos[hi]])
        q, proj = K.quotient_by_element(free, r)
        codes = proj.atom_image.copy()
        codes.setflags(write=False)
        return Model(q, gens, codes, m)

    def stage_model(self, m: int) -> Model:
        """The full stage model M_m."""
        if not 0 <= m <= self.top_stage:
            raise ValueError(f"stage {m} outside schedule 0..{self.top_stage}")
        key = ("stage", m)
        if key not in self._cache:
            gens = self.active(m)
            model = self._build(gens, m, [(r.lower, r.upper) for r in self.active_relations(m)])
            self._store(key, model)
        return self._cache[key]

    def stage_embedding(self, m: int) -> K.Embedding:
        """Natural map M_{m-1} -> M_m; raises PresentationError naming the culprit."""
        key = ("embedding", m)
        if key not in self._cache:
            old, new = self.stage_model(m - 1), self.stage_model(m)
            try:
                emb = K.embedding_by_generators(
                    old.ba, [old.gen(g) for g in old.gens], new.ba, [new.gen(g) for g in old.gens]
                )
            except K.KernelError:
                raise PresentationError(self._culprit(m)) from None
            self._store(key, emb)
        return self._cache[key]

    def _culprit(self, m: int) -> str:
        fresh = [r for r in self.active_relations(m) if r not in self.active_relations(m - 1)]
        old_closure = self._closure(m - 1)
        for r in fresh:
            for g, ups in self._closure(m).items():
                if self.activation[g] <= m - 1:
                    for h in ups:
                        if self.activation[h] <= m - 1 and h not in old_closure[g]:
                            return (
                                f"stage {m}: relations through new generators force "
                                f"{self.generators[g]!r} <= {self.generators[h]!r} (e.g. via "
                                f"{self.generators[r.lower]!r} <= {self.generators[r.upper]!r})"
                            )
        return f"stage {m}: natural map is not injective"

    def check_injective(self) -> None:
        for m in range(1, self.top_stage + 1):
            self.stage_embedding(m)

    def local_model(self, gens: Iterable[int], m: int, cache: bool = True) -> Model:
        """Model of ⟨gens⟩ inside M_m (free on gens modulo the closed relations)."""
        gens = tuple(sorted(set(gens)))
        for g in gens:
            if self.activation[g] > m:
                raise ValueError(f"generator {self.generators[g]!r} is not active at stage {m}")
        key = ("local", m, gens)
        if key in self._cache:
            return self._cache[key]
        closure = self._closure(m)
        gs = set(gens)
        pairs = [(g, h) for g in gens for h in closure[g] if h in gs and h != g]
        model = self._build(gens, m, pairs)
        if cache:
            self._store(key, model)
        return model

    def closed_pairs(self, gens: Sequence[int], m: int) -> tuple[tuple[int, int], ...]:
        """Positions (i, j) with gens[i] <= gens[j] in the transitive closure at stage m."""
        closure = self._closure(m)
        return tuple(
            (i, j) for i, g in enumerate(gens) for j, h in enumerate(gens) if i != j and h in closure[g]
        )

    def model_for(self, support: Iterable[int], m: int) -> Model:
        """Local model on the union of the relation components meeting ``support``."""
        support = set(support)
        gens: set[int] = set()
        for comp in self.components(m):
            if comp & support:
                gens |= comp
        return self.local_model(gens, m)

    # -- chain elements --------------------------------------------------------

    def gen_elem(self, g: int, m: int) -> Elem:
        return self.stage_model(m).gen(g)

    def lift(self, e: "ChainElem", m: int) -> Elem:
        if m < e.stage:
            raise ValueError("can only lift upward")
        value = e.value
        for s in range(e.stage + 1, m + 1):
            value = self.stage_embedding(s)(value)
        return value

    def chain_leq(self, e1: "ChainElem", e2: "ChainElem") -> bool:
        m = max(e1.stage, e2.stage)
        return self.lift(e1, m) <= self.lift(e2, m)

    def chain_eq(self, e1: "ChainElem", e2: "ChainElem") -> bool:
        m = max(e1.stage, e2.stage)
        return K.eq(self.lift(e1, m), self.lift(e2, m))

    def canonical(self, e: "ChainElem") -> "ChainElem":
        """Same element at the least stage whose model contains it."""
        current = e
        while current.stage > 0:
            emb = self.stage_embedding(current.stage)
            mask = current.value.mask()
            on = np.unique(emb.atom_image[mask])
            off = np.unique(emb.atom_image[~mask])
            if np.intersect1d(on, off).size:
                break
            pre = np.zeros(emb.source.atom_count, dtype=bool)
            pre[on] = True
            current = ChainElem(current.stage - 1, emb.source.from_mask(pre))
        return current

    def term_at(self, t: Term, m: int) -> ChainElem:
        return ChainElem(m, self.stage_model(m).term(t))

    def to_json(self) -> dict:
        return {
            "generators": [_json_id(g) for g in self.generators],
            "relations": [[_json_id(self.generators[r.lower]), _json_id(self.generators[r.upper])] for r in self.relations],
            "activation": list(self.activation),
        }


def _json_id(g):
    return list(g) if isinstance(g, tuple) else g


def presented_from_json(data: dict) -> PresentedBA:
    gens = [tuple(g) if isinstance(g, list) else g for g in data["generators"]]
    index = {g: i for i, g in enumerate(gens)}
    rels = []
    for lo, hi in data.get("relations", []):
        lo = tuple(lo) if isinstance(lo, list) else lo
        hi = tuple(hi) if isinstance(hi, list) else hi
        rels.append((index[lo], index[hi]))
    return PresentedBA(gens, rels, data["activation"])


@dataclass(frozen=True)
class ChainElem:
    stage: int
    value: Elem


class Filtration:
    """Tight filtration: the α-th subalgebra is generated by generators of rank < α.

    ``rank`` maps generator index to a comparable key; ``indices`` is the
    finite list of filtration indices materialized; ``is_limit`` marks
    indices where continuity must hold.
    """

    def __init__(
        self,
        presented: PresentedBA,
        rank: Sequence,
        indices: Sequence,
        is_limit: Callable[[object], bool] = lambda a: False,
    ):
        self.presented = presented
        self.rank = tuple(rank)
        self.indices = tuple(sorted(indices))
        self.is_limit = is_limit

    def cut(self, alpha) -> frozenset[int]:
        return frozenset(i for i, r in enumerate(self.rank) if r < alpha)

    def cut_through(self, alpha) -> frozenset[int]:
        return frozenset(i for i, r in enumerate(self.rank) if r <= alpha)

    def validate(self) -> list[str]:
        problems = []
        prev = None
        for a in self.indices:
            c = self.cut(a)
            if prev is not None and not prev <= c:
                problems.append(f"not increasing at {a}")
            prev = c
            if self.is_limit(a):
                union = frozenset().union(*(self.cut_through(b) for b in self.indices if b < a))
                if union != c:
                    problems.append(f"not continuous at {a}")
        return problems

    def subalgebra_at(self, alpha, m: int) -> SubalgebraDesc:
        model = self.presented.stage_model(m)
        return model.subalgebra(self.cut(alpha))


def subalgebra_at(P: PresentedBA, F: Filtration, alpha, m: int) -> SubalgebraDesc:
    return F.subalgebra_at(alpha, m)


def stage_model(P: PresentedBA, m: int) -> tuple[Model, Optional[K.Embedding]]:
    return P.stage_model(m), (P.stage_embedding(m) if m > 0 else None)


# -- certificates --------------------------------------------------------------


def local_lpr(P: PresentedBA, cut: frozenset[int], b: Term, m: int) -> Term:
    """lpr of ``b`` into ⟨cut⟩ at stage m, computed in the component model of b."""
    model = P.model_for(b.support, m)
    sub_gens = [g for g in model.gens if g in cut]
    sub = model.subalgebra(sub_gens)
    value = K.lpr(model.ba, sub, model.term(b))
    return model.to_term(value, sub_gens)


def terms_equal(P: PresentedBA, s: Term, t: Term, m: int) -> bool:
    model = P.model_for(set(s.support) | set(t.support), m)
    return K.eq(model.term(s), model.term(t))


def term_leq(P: PresentedBA, s: Term, t: Term, m: int) -> bool:
    model = P.model_for(set(s.support) | set(t.support), m)
    return model.term(s) <= model.term(t)


@dataclass
class ProbeRecord:
    probe: Term
    label: str
    born: int
    values: dict[int, Term]
    stamp: int
    grew_at: list[int]

    @property
    def stable(self) -> Optional[bool]:
        """Unchanged over the last activation cycle; None if observed only once."""
        last = max(self.values)
        if last == self.born:
            return None
        return self.stamp < last

    def to_json(self) -> dict:
        return {
            "probe": self.label,
            "born": self.born,
            "stamp": self.stamp,
            "stable": self.stable,
            "grew_at": self.grew_at,
            "values": {str(m): v.to_json() for m, v in sorted(self.values.items())},
        }


@dataclass
class RcCertificate:
    alpha: object
    budget: int
    records: list[ProbeRecord]

    @property
    def failure_locus(self) -> list[ProbeRecord]:
        return [r for r in self.records if r.stable is False]

    @property
    def stable(self) -> bool:
        return not self.failure_locus

    def to_json(self, alpha_repr=str) -> dict:
        return {
            "kind": "rc",
            "alpha": alpha_repr(self.alpha),
            "budget": self.budget,
            "stable": self.stable,
            "failure_locus": [r.label for r in self.failure_locus],
            "records": [r.to_json() for r in self.records],
        }


def default_probes(P: PresentedBA, budget: int, first_stage: int = 1) -> list[tuple[str, Term]]:
    """Generator literals of every stage, plus the coatoms of the first stage model.

    lpr preserves finite meets and every element of a finite algebra is a meet
    of coatoms, so stability on the coatoms of M_s gives stability on all of M_s.
    """
    probes = []
    for g, a in enumerate(P.activation):
        if a <= budget:
            name = _gen_name(P, g)
            probes.append((name, Term.generator(g)))
            probes.append((f"-{name}", Term.generator(g).complement()))
    if first_stage <= budget:
        model = P.stage_model(first_stage)
        for t in range(model.ba.atom_count):
            coatom = ~model.ba.atom(t)
            probes.append((f"coatom{t}@{first_stage}", model.to_term(coatom, model.gens)))
    return probes


def _gen_name(P: PresentedBA, g: int) -> str:
    gid = P.generators[g]
    return f"x[{gid}]"


def rc_check(
    P: PresentedBA,
    F: Filtration,
    alpha,
    budget: int,
    probes: Optional[Sequence[tuple[str, Term]]] = None,
) -> RcCertificate:
    """Stage-wise lpr of every probe into the α-th subalgebra, with stability stamps."""
    if budget > P.top_stage:
        raise ValueError("budget beyond the schedule")
    cut = F.cut(alpha)
    if probes is None:
        probes = default_probes(P, budget)
    records = []
    for label, probe in probes:
        born = max(P.birth(probe.support), 1)
        if born > budget:
            continue
        values: dict[int, Term] = {}
        grew = []
        stamp = born
        for m in range(born, budget + 1):
            values[m] = local_lpr(P, cut, probe, m)
            if m > born and not terms_equal(P, values[m - 1], values[m], m):
                grew.append(m)
                stamp = m
        records.append(ProbeRecord(probe, label, born, values, stamp, grew))
    return RcCertificate(alpha, budget, records)


@dataclass
class NonRcCertificate:
    alpha: object
    x: Term
    schedule: list[Term]
    budget: int
    escapes: dict[int, int]          # stage -> index of the escaping schedule element
    exhaustive_stages: list[int]

    def to_json(self, alpha_repr=str) -> dict:
        return {
            "kind": "non-rc",
            "alpha": alpha_repr(self.alpha),
            "budget": self.budget,
            "x": self.x.to_json(),
            "schedule": [s.to_json() for s in self.schedule],
            "escapes": {str(m): i for m, i in sorted(self.escapes.items())},
            "exhaustive_stages": self.exhaustive_stages,
        }


@dataclass
class Refutation:
    alpha: object
    reason: str
    stage: Optional[int] = None

    def to_json(self, alpha_repr=str) -> dict:
        return {"kind": "refutation", "alpha": alpha_repr(self.alpha), "reason": self.reason, "stage": self.stage}


EXHAUSTIVE_BLOCKS = 10


def non_principality_certificate(
    P: PresentedBA,
    F: Filtration,
    alpha,
    x: Term,
    schedule: Sequence[Term],
    budget: int,
):
    """Evidence that ⟨cut(α)⟩↾x is non-principal in the limit.

    Checks, at every stage up to ``budget``: the schedule is strictly
    increasing and below ``x``; and for each stage m < budget every element
    ``a`` of the cut subalgebra at m with ``a <= x`` is strictly enlarged by
    some schedule element (which stays below x).  Every such ``a`` is below
    the stage lpr of x, so it suffices to escape from that lpr; when the cut
    has at most 10 blocks below x the escape is also checked element by
    element.
    """
    cut = F.cut(alpha)
    for s in schedule:
        if not set(s.support) <= cut:
            raise ValueError("schedule element not in the cut subalgebra")
    if budget > P.top_stage:
        raise ValueError("budget beyond the schedule")
    if not schedule:
        return Refutation(alpha, "empty schedule")
    x_born = max(P.birth(x.support), 1)
    births = [max(P.birth(s.support), 1) for s in schedule]
    for i, s in enumerate(schedule):
        for m in range(max(births[i], x_born), budget + 1):
            if not term_leq(P, s, x, m):
                return Refutation(alpha, f"schedule element {i} is not below x", m)
        if i + 1 < len(schedule):
            t = schedule[i + 1]
            for m in range(max(births[i], births[i + 1]), budget + 1):
                if not (term_leq(P, s, t, m) and not terms_equal(P, s, t, m)):
                    return Refutation(alpha, f"schedule not strictly increasing at {i}", m)
    escapes = {}
    exhaustive = []
    for m in range(x_born, budget):
        a_max = local_lpr(P, cut, x, m)
        hit = None
        for i, s in enumerate(schedule):
            if births[i] > budget:
                continue
            if not term_leq(P, s, a_max, budget):
                hit = i
                break
        if hit is None:
            return Refutation(alpha, "escape fails: the lower projection is already maximal", m)
        escapes[m] = hit
        model = P.model_for(x.support, m)
        sub_gens = [g for g in model.gens if g in cut]
        sub = model.subalgebra(sub_gens)
        xm = model.term(x)
        inside = [blk for blk in sub.block_elems() if blk <= xm]
        if len(inside) <= EXHAUSTIVE_BLOCKS:
            top = P.model_for(set(x.support) | set().union(*(s.support for s in schedule)), budget)
            lifted_sched = [top.term(s) for s in schedule]
            for choice in range(1 << len(inside)):
                a = model.ba.zero
                for j, blk in enumerate(inside):
                    if choice >> j & 1:
                        a = a | blk
                a_top = top.term(model.to_term(a, sub_gens))
                if not any(not (s <= a_top) for s in lifted_sched):
                    return Refutation(alpha, "escape fails for an element below x", m)
            exhaustive.append(m)
    return NonRcCertificate(alpha, x, list(schedule), budget, escapes, exhaustive)
