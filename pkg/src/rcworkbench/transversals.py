"""Transversals of finite set families by augmenting paths, with Hall violators."""
from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Hashable, Optional, Sequence


@dataclass(frozen=True)
class SetFamily:
    indices: tuple
    sets: tuple                        # tuple of frozensets, aligned with ``indices``

    @classmethod
    def of(cls, sets, indices=None) -> "SetFamily":
        sets = tuple(frozenset(s) for s in sets)
        indices = tuple(range(len(sets))) if indices is None else tuple(indices)
        if len(indices) != len(sets):
            raise ValueError("one index per set")
        if len(set(indices)) != len(indices):
            raise ValueError("indices must be distinct")
        if any(not s for s in sets):
            raise ValueError("sets must be nonempty")
        return cls(indices, sets)

    def __len__(self):
        return len(self.sets)

    def without(self, position: int) -> "SetFamily":
        keep = [i for i in range(len(self)) if i != position]
        return SetFamily(tuple(self.indices[i] for i in keep), tuple(self.sets[i] for i in keep))


@dataclass
class TransversalResult:
    transversal: Optional[dict]        # index -> chosen element
    violator: Optional[list]           # indices J with |⋃ s_j| < |J|
    neighbourhood: Optional[list]

    @property
    def free(self) -> bool:
        return self.transversal is not None

    def to_json(self) -> dict:
        return {
            "free": self.free,
            "transversal": None if self.transversal is None else [[repr(i), repr(e)] for i, e in self.transversal.items()],
            "violator": None if self.violator is None else [repr(i) for i in self.violator],
            "neighbourhood": None if self.neighbourhood is None else [repr(e) for e in self.neighbourhood],
        }


def _order(items) -> list:
    return sorted(items, key=lambda e: (type(e).__name__, repr(e)))


def find_transversal(F: SetFamily) -> TransversalResult:
    """Maximum matching (Kuhn's augmenting paths, fixed vertex order).

    When some index stays unmatched, the indices reachable from it along
    alternating paths form a Hall violator: their neighbourhood is exactly
    the set of matched elements reached, one fewer than the indices.
    """
    adj = [_order(s) for s in F.sets]
    owner: dict[Hashable, int] = {}

    def augment(i: int, seen: set) -> bool:
        for e in adj[i]:
            if e in seen:
                continue
            seen.add(e)
            if e not in owner or augment(owner[e], seen):
                owner[e] = i
                return True
        return False

    for i in range(len(F)):
        if not augment(i, set()):
            J, N = _alternating_reach(adj, owner, i)
            return TransversalResult(
                None, [F.indices[j] for j in sorted(J)], _order(N)
            )
    chosen = {i: e for e, i in owner.items()}
    return TransversalResult({F.indices[i]: chosen[i] for i in range(len(F))}, None, None)


def _alternating_reach(adj, owner, start):
    J, N = {start}, set()
    stack = [start]
    while stack:
        i = stack.pop()
        for e in adj[i]:
            if e not in N:
                N.add(e)
                j = owner.get(e)
                if j is not None and j not in J:
                    J.add(j)
                    stack.append(j)
    return J, N


def check_violator(F: SetFamily, J: Sequence) -> bool:
    pos = {idx: i for i, idx in enumerate(F.indices)}
    union = set()
    for j in J:
        union |= F.sets[pos[j]]
    return len(union) < len(set(J))


@dataclass
class AlmostFreeReport:
    free: bool
    omit_one: list                     # (omitted index, has transversal)

    @property
    def almost_free(self) -> bool:
        return all(ok for _, ok in self.omit_one)

    def to_json(self) -> dict:
        return {
            "free": self.free,
            "almost_free": self.almost_free,
            "omit_one": [[repr(i), ok] for i, ok in self.omit_one],
        }


def almost_free_sweep(F: SetFamily) -> AlmostFreeReport:
    """Every strictly smaller subfamily lies inside one omitting a single index."""
    if len(F) < 1:
        raise ValueError("empty family")
    return AlmostFreeReport(
        find_transversal(F).free,
        [(F.indices[i], find_transversal(F.without(i)).free) for i in range(len(F))],
    )


def family_from_lambda_system(family) -> SetFamily:
    """The sets s_η of a based family, indexed by final node."""
    nodes = sorted(family.blocks)
    return SetFamily.of([family.s(eta) for eta in nodes], nodes)


def random_family(rng: random.Random, max_sets: int = 8, max_size: int = 6, universe: Optional[int] = None) -> SetFamily:
    n = rng.randint(1, max_sets)
    if universe is None:
        universe = rng.randint(1, max_sets)
    sets = []
    for _ in range(n):
        k = rng.randint(1, max_size)
        sets.append(rng.sample(range(universe), min(k, universe)))
    return SetFamily.of(sets)
