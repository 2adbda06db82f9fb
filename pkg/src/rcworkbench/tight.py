"""Coding a set of limit ordinals into a tightly filtered algebra.

Ordinals below ω·K_max are pairs ``(k, n)`` standing for ω·k + n.  Every
limit ordinal stands in for an ordinal of countable cofinality and gets an
ω-ladder.  For a coded set S the generators are one ``x_α`` per ordinal in
scope, with ``x_δ <= x_α`` for each α in S and each ladder point δ of α.
Nothing else is imposed: ``x_α`` is free over the earlier generators when α
is not in S, and for α in S the earlier generators below ``x_α`` are exactly
the ideal generated by the ladder points while nothing nonzero lies below
``-x_α``.

Scope at budget b is ``{ω·k + n : k < K_max, n < b}``; stage m activates the
ordinals with finite part < m, so every stage contains an initial piece of
every ω-block and the cut subalgebras are literal subalgebras of the stages.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np


from . import kernel as K
from .chain import (
    Filtration,
    NonRcCertificate,
    PresentedBA,
    RcCertificate,
    Refutation,
    Term,
    join_terms,
    local_lpr,
    non_principality_certificate,
    pattern_codes,
    rc_check,
    terms_equal,
)


class Ordinal(NamedTuple):
    """ω·k + n."""

    k: int
    n: int

    @property
    def is_limit(self) -> bool:
        return self.n == 0 and self.k > 0

    def __str__(self):
        if self.k == 0:
            return str(self.n)
        head = "ω" if self.k == 1 else f"ω·{self.k}"
        return head if self.n == 0 else f"{head}+{self.n}"

    def to_json(self) -> list[int]:
        return [self.k, self.n]


_ORD_RE = re.compile(r"^\s*(?:(w|ω|omega)(?:\s*[*·]\s*(\d+))?)?\s*(?:\+?\s*(\d+))?\s*$")


def parse_ordinal(value) -> Ordinal:
    """Accepts ``[k, n]``, an int, or text such as ``"w*2+3"`` / ``"ω·2+3"``."""
    if isinstance(value, Ordinal):
        return value
    if isinstance(value, int) and not isinstance(value, bool):
        return Ordinal(0, value)
    if isinstance(value, (list, tuple)) and len(value) == 2 and all(isinstance(v, int) for v in value):
        return Ordinal(*value)
    if isinstance(value, str):
        m = _ORD_RE.match(value)
        if m and (m.group(1) or m.group(3)):
            k = (int(m.group(2)) if m.group(2) else 1) if m.group(1) else 0
            n = int(m.group(3)) if m.group(3) else 0
            return Ordinal(k, n)
    raise ValueError(f"not an ordinal: {value!r}")


OMEGA = Ordinal(1, 0)


def limits_in_scope(k_max: int) -> list[Ordinal]:
    return [Ordinal(k, 0) for k in range(1, k_max)]


def scope(k_max: int, budget: int) -> list[Ordinal]:
    return [Ordinal(k, n) for k in range(k_max) for n in range(budget)]


@dataclass(frozen=True)
class LadderSystem:
    """``ladders[α]`` lists the first ladder points of α (increasing)."""

    k_max: int
    ladders: dict

    def points(self, alpha: Ordinal, budget: int) -> list[Ordinal]:
        return [d for d in self.ladders[alpha] if d.n < budget]

    def validate(self, S: Iterable[Ordinal] = ()) -> list[str]:
        problems = []
        S = set(S)
        for alpha, pts in sorted(self.ladders.items()):
            if not alpha.is_limit:
                problems.append(f"{alpha} is not a limit ordinal")
                continue
            if any(b <= a for a, b in zip(pts, pts[1:])):
                problems.append(f"ladder of {alpha} is not strictly increasing")
            if any(d >= alpha for d in pts):
                problems.append(f"ladder of {alpha} is not below {alpha}")
            if pts and pts[-1].k != alpha.k - 1:
                problems.append(f"ladder of {alpha} does not end in the block below {alpha}")
            bad = [d for d in pts if d in S]
            if bad:
                problems.append(f"ladder of {alpha} meets S at {', '.join(map(str, bad))}")
        return problems


def default_ladders(k_max: int, length: int = 64) -> LadderSystem:
    """ladder(ω·k) = ω·(k-1)+1, ω·(k-1)+2, ...; all points are successors."""
    if k_max < 1:
        raise ValueError("K_max must be at least 1")
    return LadderSystem(
        k_max, {Ordinal(k, 0): [Ordinal(k - 1, n + 1) for n in range(length)] for k in range(1, k_max)}
    )


class LadderError(ValueError):
    pass


@dataclass
class TightCoding:
    S: frozenset
    k_max: int
    budget: int
    ladders: LadderSystem
    presented: PresentedBA
    filtration: Filtration
    ordinals: list[Ordinal]

    def gen(self, alpha: Ordinal) -> int:
        return self.presented.index[parse_ordinal(alpha)]

    def x(self, alpha: Ordinal) -> Term:
        return Term.generator(self.gen(alpha))

    def ladder_points(self, alpha: Ordinal) -> list[Ordinal]:
        return self.ladders.points(alpha, self.budget)

    @property
    def top(self) -> Ordinal:
        return Ordinal(self.k_max, 0)


def build_tight_coding(S: Iterable, k_max: int, budget: int, ladders: Optional[LadderSystem] = None) -> TightCoding:
    S = frozenset(parse_ordinal(a) for a in S)
    if budget < 1:
        raise ValueError("budget must be at least 1")
    for a in S:
        if not a.is_limit or a.k >= k_max:
            raise ValueError(f"{a} is not a limit ordinal below ω·{k_max}")
    ladders = ladders or default_ladders(k_max, budget + 1)
    problems = ladders.validate(S)
    missing = [a for a in S if a not in ladders.ladders]
    if missing:
        problems.append("no ladder for " + ", ".join(map(str, missing)))
    if problems:
        raise LadderError("; ".join(problems))
    ords = scope(k_max, budget)
    index = {a: i for i, a in enumerate(ords)}
    relations = []
    ideal = {}
    for alpha in sorted(S):
        pts = [d for d in ladders.points(alpha, budget) if d in index]
        relations += [(index[d], index[alpha]) for d in pts]
        ideal[index[alpha]] = tuple(index[d] for d in pts)
    activation = [a.n + 1 for a in ords]
    P = PresentedBA(ords, relations, activation, ideal_constraints=ideal)
    F = Filtration(P, ords, ords + [Ordinal(k_max, 0)], is_limit=lambda a: a.is_limit)
    return TightCoding(S, k_max, budget, ladders, P, F, ords)


# -- recursion fidelity ---------------------------------------------------------


def check_recursion(tc: TightCoding) -> list[str]:
    """Per stage: x_α independent over the cut for α ∉ S; exact ideals for α ∈ S."""
    P = tc.presented
    violations = []
    for m in range(1, tc.budget + 1):
        for alpha in tc.ordinals:
            g = tc.gen(alpha)
            if P.activation[g] > m:
                continue
            model = P.model_for([g], m)
            cut = [h for h in model.gens if tc.ordinals[h] < alpha]
            sub = model.subalgebra(cut)
            xa = model.gen(g)
            if alpha not in tc.S:
                if not K.is_independent_over(model.ba, sub, [xa]):
                    violations.append(f"stage {m}: x[{alpha}] not independent over A_{alpha}")
                continue
            ladder = [d for d in tc.ladder_points(alpha) if P.activation[tc.gen(d)] <= m]
            expected = K.join_all(model.ba, (model.gen(tc.gen(d)) for d in ladder))
            if not K.eq(K.lpr(model.ba, sub, xa), expected):
                violations.append(f"stage {m}: A_{alpha}↾x[{alpha}] is not generated by the ladder points")
            if not K.lpr(model.ba, sub, ~xa).is_zero:
                violations.append(f"stage {m}: A_{alpha}↾-x[{alpha}] is not {{0}}")
    return violations


# -- verifiers ----------------------------------------------------------------------


class ConstructionError(RuntimeError):
    """A verifier refuted what the construction guarantees."""


def ladder_schedule(tc: TightCoding, alpha: Ordinal) -> list[Term]:
    """s_m = Σ_{n<m} x_{δ_n^α}, m = 1..(ladder points in scope)."""
    pts = tc.ladder_points(alpha)
    out = []
    acc = Term.constant(False)
    for d in pts:
        acc = acc | tc.x(d)
        out.append(acc)
    return out


def verify_non_rc(tc: TightCoding, alpha, budget: Optional[int] = None) -> NonRcCertificate:
    alpha = parse_ordinal(alpha)
    if alpha not in tc.S:
        raise ValueError(f"{alpha} is not in S")
    budget = tc.budget if budget is None else budget
    result = non_principality_certificate(
        tc.presented, tc.filtration, alpha, tc.x(alpha), ladder_schedule(tc, alpha), budget
    )
    if isinstance(result, Refutation):
        raise ConstructionError(f"non-rc certificate refuted at {alpha}: {result.reason} (stage {result.stage})")
    return result


def fingerprint_entry(tc: TightCoding, alpha: Ordinal, budget: Optional[int] = None):
    """Certificate or refutation for α, whether or not α ∈ S."""
    budget = tc.budget if budget is None else budget
    if not alpha.is_limit or alpha not in tc.ladders.ladders:
        return Refutation(alpha, "not a limit ordinal: no ladder schedule")
    schedule = ladder_schedule(tc, alpha)
    return non_principality_certificate(tc.presented, tc.filtration, alpha, tc.x(alpha), schedule, budget)


@dataclass
class ClosedFormRecord:
    beta: Ordinal
    delta: Ordinal
    stage: int
    m: int
    initial_segment: bool
    agrees: bool


def check_closed_form(tc: TightCoding) -> list[ClosedFormRecord]:
    """lpr of x_β into A_δ against Σ{x_{δ_n^β} : n < m}, m = #ladder points in A_δ.

    Checked for every β ∈ S, every δ ≤ β in scope and every stage where x_β
    is active.
    """
    P = tc.presented
    out = []
    for beta in sorted(tc.S):
        pts = tc.ladder_points(beta)
        for delta in [d for d in tc.ordinals if d <= beta]:
            cut = tc.filtration.cut(delta)
            for stage in range(P.activation[tc.gen(beta)], tc.budget + 1):
                inside = [n for n, d in enumerate(pts) if tc.gen(d) in cut and P.activation[tc.gen(d)] <= stage]
                m = len(inside)
                closed = join_terms(tc.x(pts[n]) for n in range(m))
                brute = local_lpr(P, cut, tc.x(beta), stage)
                out.append(
                    ClosedFormRecord(
                        beta, delta, stage, m, inside == list(range(m)), terms_equal(P, closed, brute, stage)
                    )
                )
    return out


@dataclass
class RcReport:
    certificate: RcCertificate
    closed_form: list[ClosedFormRecord]

    @property
    def closed_form_ok(self) -> bool:
        return all(r.agrees for r in self.closed_form)


def verify_rc(tc: TightCoding, alpha, budget: Optional[int] = None, closed_form: bool = True) -> RcReport:
    alpha = parse_ordinal(alpha)
    if alpha in tc.S:
        raise ValueError(f"{alpha} is in S")
    budget = tc.budget if budget is None else budget
    cert = rc_check(tc.presented, tc.filtration, alpha, budget)
    return RcReport(cert, check_closed_form(tc) if closed_form else [])


# -- zero products -------------------------------------------------------------------


def zero_characterization(tc: TightCoding, Y: Sequence[Ordinal], g: dict) -> bool:
    """∃ α ∈ S, i with x_α, x_{δ_i^α} ∈ Y, g(x_α) = 1 and g(x_{δ_i^α}) = 0."""
    ys = set(Y)
    for alpha in tc.S:
        if alpha in ys and g[alpha] == 1:
            for d in tc.ladder_points(alpha):
                if d in ys and g[d] == 0:
                    return True
    return False


def zero_product(tc: TightCoding, Y: Sequence, g: dict) -> tuple[bool, bool]:
    """(model says ∏ x^{g(x)} = 0, characterization predicate).  x^0 = x, x^1 = -x."""
    Y = [parse_ordinal(y) for y in Y]
    g = {parse_ordinal(k): v for k, v in g.items()}
    P = tc.presented
    gens = [tc.gen(y) for y in Y]
    model = P.local_model(gens, tc.budget)
    prod = K.elementary_product(model.ba, [model.gen(h) for h in gens], [g[y] for y in Y])
    return prod.is_zero, zero_characterization(tc, Y, g)


def zero_product_table(tc: TightCoding, Y: Sequence) -> tuple[np.ndarray, np.ndarray]:
    """For every sign map on Y (bit i = g(Y[i])): model zero-ness and the predicate.

    The model of ⟨Y⟩ depends only on which members of Y are related, so it is
    built once per relation pattern.
    """
    Y = [parse_ordinal(y) for y in Y]
    gens = [tc.gen(y) for y in Y]
    for g in gens:
        if tc.presented.activation[g] > tc.budget:
            raise ValueError(f"{tc.ordinals[g]} is not active at stage {tc.budget}")
    codes = pattern_codes(len(Y), tc.presented.closed_pairs(gens, tc.budget))
    signs = np.arange(1 << len(Y), dtype=np.int64)
    # literal x^0 = x, x^1 = -x: the product for sign map g is nonzero iff
    # some atom has code ~g
    nonzero = np.zeros(1 << len(Y), dtype=bool)
    nonzero[(~codes) & ((1 << len(Y)) - 1)] = True
    model_zero = ~nonzero
    pred = np.zeros(1 << len(Y), dtype=bool)
    pos = {y: i for i, y in enumerate(Y)}
    for alpha in tc.S:
        if alpha in pos:
            a = pos[alpha]
            for d in tc.ladder_points(alpha):
                if d in pos:
                    pred |= ((signs >> a) & 1 == 1) & ((signs >> pos[d]) & 1 == 0)
    return model_zero, pred


def zero_product_disagreements(tc: TightCoding, Y: Sequence) -> list[dict]:
    """All sign maps on Y where the model and the characterization differ."""
    Y = [parse_ordinal(y) for y in Y]
    model_zero, pred = zero_product_table(tc, Y)
    bad = np.flatnonzero(model_zero != pred)
    return [{str(y): int(c >> i & 1) for i, y in enumerate(Y)} for c in bad.tolist()]


# -- distinguishing diagnostic ------------------------------------------------------------


def fingerprint(tc: TightCoding, budget: Optional[int] = None) -> list[Ordinal]:
    return [a for a in tc.ordinals if isinstance(fingerprint_entry(tc, a, budget), NonRcCertificate)]


@dataclass
class DistinguishReport:
    S1: list[Ordinal]
    S2: list[Ordinal]
    fingerprint1: list[Ordinal]
    fingerprint2: list[Ordinal]

    @property
    def distinguished(self) -> bool:
        return self.fingerprint1 != self.fingerprint2

    def to_json(self) -> dict:
        return {
            "S1": [a.to_json() for a in self.S1],
            "S2": [a.to_json() for a in self.S2],
            "fingerprint1": [a.to_json() for a in self.fingerprint1],
            "fingerprint2": [a.to_json() for a in self.fingerprint2],
            "distinguished": self.distinguished,
        }


def distinguish(S1: Iterable, S2: Iterable, k_max: int, budget: int, ladders: Optional[LadderSystem] = None) -> DistinguishReport:
    t1 = build_tight_coding(S1, k_max, budget, ladders)
    t2 = build_tight_coding(S2, k_max, budget, ladders)
    return DistinguishReport(sorted(t1.S), sorted(t2.S), fingerprint(t1), fingerprint(t2))
