"""Finite λ-systems, based families and the reshuffling orders.

Cardinals are replaced by integer ranks compared directly with the sizes of
the (finite) base sets.  Rank 0 plays the countable role and marks final
nodes; a countable lower bound is read as "nonempty".  Stationarity of the
child index sets is a declared flag and is never computed.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

Node = tuple


def lex_compare(a: Sequence[int], b: Sequence[int]) -> int:
    """-1, 0, 1; a proper prefix comes first."""
    a, b = tuple(a), tuple(b)
    return (a > b) - (a < b)


def lex_less(a, b) -> bool:
    return lex_compare(a, b) < 0


def is_proper_prefix(mu: Node, eta: Node) -> bool:
    return len(mu) < len(eta) and tuple(eta[: len(mu)]) == tuple(mu)


@dataclass
class LambdaSystem:
    nodes: list                        # sorted list of tuples
    rank: dict                         # node -> int
    base: dict                         # node -> frozenset
    stationary: dict = field(default_factory=dict)     # non-final node -> declared flag
    limit_points: dict = field(default_factory=dict)   # non-final node -> child indices that are limit points

    @property
    def node_set(self) -> set:
        return set(self.nodes)

    def children(self, eta: Node) -> list[int]:
        return sorted(n[-1] for n in self.nodes if len(n) == len(eta) + 1 and n[: len(eta)] == eta)

    def E(self, eta: Node) -> list[int]:
        return self.children(eta)

    @property
    def finals(self) -> list[Node]:
        return [n for n in self.nodes if not self.children(n)]

    def is_final(self, eta: Node) -> bool:
        return not self.children(eta)

    def base_closure(self, eta: Node) -> frozenset:
        """Union of the base sets along the branch to η (η included)."""
        out = set()
        for m in range(len(eta) + 1):
            out |= self.base.get(tuple(eta[:m]), frozenset())
        return frozenset(out)


@dataclass
class BasedFamily:
    system: LambdaSystem
    blocks: dict                       # final node -> list of n lists (block k = blocks[k-1])
    n: int

    def s(self, eta: Node) -> frozenset:
        return frozenset().union(*map(frozenset, self.blocks[eta]))

    def block(self, eta: Node, k: int) -> frozenset:
        return frozenset(self.blocks[eta][k - 1])

    def enumeration(self, eta: Node, per_block: int) -> dict:
        """(k, l) -> base element, the l-th element of block k in sorted order."""
        out = {}
        for k in range(1, self.n + 1):
            items = sorted(self.blocks[eta][k - 1], key=repr)
            if len(items) != per_block:
                raise ValueError(f"node {eta}: block {k} has {len(items)} elements, expected {per_block}")
            for l, item in enumerate(items):
                out[(k, l)] = item
        return out


# -- validation -------------------------------------------------------------------


def _lower_ok(rank: int, size: int) -> bool:
    return size >= max(rank, 1)


def validate_system(L: LambdaSystem) -> list[str]:
    """All clause violations, each naming the node and the clause."""
    out = []
    nodes = L.node_set
    if () not in nodes:
        return ["tree: no root"]
    for eta in L.nodes:
        if eta and tuple(eta[:-1]) not in nodes:
            out.append(f"{list(eta)}: tree not prefix-closed (parent missing)")
        if eta not in L.rank:
            out.append(f"{list(eta)}: no rank")
    if out:
        return out
    top = L.rank[()]
    for eta in L.nodes:
        if L.rank[eta] > top:
            out.append(f"{list(eta)}: rank exceeds the root rank")
    if L.base.get((), frozenset()):
        out.append("[]: root base set must be empty")
    for eta in L.nodes:
        r = L.rank[eta]
        final = L.is_final(eta)
        if final != (r == 0):
            out.append(f"{list(eta)}: final exactly when rank is 0 (rank {r}, {'final' if final else 'not final'})")
        if final:
            continue
        kids = L.children(eta)
        if not L.stationary.get(eta, False):
            out.append(f"{list(eta)}: child index set not declared stationary")
        for beta in kids:
            child = eta + (beta,)
            if not 0 <= beta < r:
                out.append(f"{list(eta)}: child index {beta} outside rank {r}")
            if L.rank[child] >= r:
                out.append(f"{list(child)}: rank does not decrease along the edge")
            size = len(L.base.get(child, frozenset()))
            if not (_lower_ok(L.rank[child], size) and size < r):
                out.append(
                    f"{list(child)}: base size {size} not within [rank {L.rank[child]}, parent rank {r})"
                )
        for b1, b2 in zip(kids, kids[1:]):
            if not L.base.get(eta + (b1,), frozenset()) <= L.base.get(eta + (b2,), frozenset()):
                out.append(f"{list(eta)}: base sets not increasing at child {b2}")
        for sigma in L.limit_points.get(eta, []):
            if sigma not in kids:
                out.append(f"{list(eta)}: declared limit point {sigma} is not a child")
                continue
            below = frozenset().union(*(L.base.get(eta + (b,), frozenset()) for b in kids if b < sigma))
            if L.base.get(eta + (sigma,), frozenset()) != below:
                out.append(f"{list(eta)}: base sets not continuous at limit point {sigma}")
    return out


def validate_family(F: BasedFamily) -> list[str]:
    out = []
    finals = set(F.system.finals)
    if set(F.blocks) != finals:
        missing = sorted(finals - set(F.blocks))
        extra = sorted(set(F.blocks) - finals)
        if missing:
            out.append(f"family misses final nodes {[list(m) for m in missing]}")
        if extra:
            out.append(f"family indexed by non-final nodes {[list(e) for e in extra]}")
    for eta, blocks in sorted(F.blocks.items()):
        if len(blocks) != F.n:
            out.append(f"{list(eta)}: {len(blocks)} blocks, expected {F.n}")
        seen = set()
        for k, blk in enumerate(blocks, 1):
            if not blk:
                out.append(f"{list(eta)}: block {k} empty")
            if seen & set(blk):
                out.append(f"{list(eta)}: block {k} overlaps an earlier block")
            seen |= set(blk)
        if eta in finals and not seen <= F.system.base_closure(eta):
            extra = sorted(seen - F.system.base_closure(eta), key=repr)
            out.append(f"{list(eta)}: s not inside the branch base sets (extra {extra})")
    return out


def height(L: LambdaSystem) -> Optional[int]:
    """Common length of the final nodes, or None when they differ."""
    lengths = {len(f) for f in L.finals}
    return lengths.pop() if len(lengths) == 1 else None


# -- reshuffling ----------------------------------------------------------------------


class ReshuffleFailure(Exception):
    pass


def _placeable(F: BasedFamily, eta: Node, used: set, bound: int) -> Optional[int]:
    for k in range(1, F.n + 1):
        if len(F.block(eta, k) & used) <= bound:
            return k
    return None


def _search(F, items, first, bound, must_precede, node_budget):
    """Greedy with bounded backtracking; returns an order or None."""
    items = sorted(items)
    budget = [node_budget]

    def ready(eta, placed_set):
        return all(nu in placed_set for nu in must_precede.get(eta, ()))

    def rec(order, placed_set, used):
        if len(order) == len(items):
            return list(order)
        for eta in items:
            if eta in placed_set or not ready(eta, placed_set):
                continue
            if _placeable(F, eta, used, bound) is None:
                continue
            order.append(eta)
            placed_set.add(eta)
            found = rec(order, placed_set, used | F.s(eta))
            if found is not None:
                return found
            order.pop()
            placed_set.discard(eta)
            budget[0] -= 1
            if budget[0] < 0:
                return None
        return None

    if first is not None:
        if must_precede.get(first):
            return None
        return rec([first], {first}, set(F.s(first)))
    return rec([], set(), set())


def reshuffle_order(F: BasedFamily, I: Iterable[Node], eta0: Node, bound: int = 0, node_budget: int = 10_000) -> list[Node]:
    I = [tuple(e) for e in I]
    eta0 = tuple(eta0)
    if eta0 not in I:
        raise ValueError("the first node must belong to I")
    order = _search(F, set(I), eta0, bound, {}, node_budget)
    if order is None:
        raise ReshuffleFailure(f"no order of {len(set(I))} nodes starting at {list(eta0)} within bound {bound}")
    return order


def bar_I(F: BasedFamily, mu: Node, I: Iterable[Node]) -> list[Node]:
    return sorted({eta for eta in F.system.finals if lex_less(eta, mu)} | {tuple(e) for e in I})


def precedence(F: BasedFamily, mu: Node, alpha: int, items: Sequence[Node]) -> dict:
    """eta -> nodes that must precede it: earlier branches, and siblings at or below alpha."""
    d = len(mu)
    out = {}
    for eta in items:
        if not is_proper_prefix(mu, eta):
            continue
        req = []
        for nu in items:
            if nu == eta:
                continue
            if lex_less(nu, mu) or (is_proper_prefix(mu, nu) and nu[d] <= alpha < eta[d]):
                req.append(nu)
        if req:
            out[eta] = req
    return out


def reshuffle_order_2(
    F: BasedFamily, mu: Node, alpha: int, I: Iterable[Node], bound: int = 0, node_budget: int = 10_000
) -> list[Node]:
    mu = tuple(mu)
    if F.system.is_final(mu):
        raise ValueError("mu must not be a final node")
    I = [tuple(e) for e in I]
    bad = [e for e in I if not is_proper_prefix(mu, e) or not F.system.is_final(e)]
    if bad:
        raise ValueError(f"I must consist of final nodes extending mu; offending {[list(b) for b in bad]}")
    items = bar_I(F, mu, I)
    order = _search(F, items, None, bound, precedence(F, mu, alpha, items), node_budget)
    if order is None:
        raise ReshuffleFailure(f"no order of Ī ({len(items)} nodes) for mu={list(mu)}, alpha={alpha}")
    return order


# -- independent re-checks ------------------------------------------------------------


def check_order_1(F: BasedFamily, I: Iterable[Node], eta0: Node, order: Sequence[Node], bound: int = 0) -> list[str]:
    out = []
    order = [tuple(e) for e in order]
    if sorted(order) != sorted({tuple(e) for e in I}) or len(set(order)) != len(order):
        out.append("order is not a permutation of I")
    if not order or order[0] != tuple(eta0):
        out.append("order does not start at the given node")
    out += _check_blocks(F, order, bound)
    return out


def _check_blocks(F: BasedFamily, order: Sequence[Node], bound: int) -> list[str]:
    out = []
    for i, eta in enumerate(order):
        earlier = set()
        for nu in order[:i]:
            earlier |= F.s(nu)
        sizes = [len(F.block(eta, k) & earlier) for k in range(1, F.n + 1)]
        if min(sizes) > bound:
            out.append(f"{list(eta)}: every block meets the earlier sets in more than {bound} elements {sizes}")
    return out


def check_order_2(
    F: BasedFamily, mu: Node, alpha: int, I: Iterable[Node], order: Sequence[Node], bound: int = 0
) -> list[str]:
    mu = tuple(mu)
    out = []
    order = [tuple(e) for e in order]
    items = bar_I(F, mu, I)
    if sorted(order) != items or len(set(order)) != len(order):
        out.append("order is not a permutation of the extended index set")
    out += _check_blocks(F, order, bound)
    pos = {e: i for i, e in enumerate(order)}
    d = len(mu)
    for eta in order:
        if not is_proper_prefix(mu, eta):
            continue
        for nu in order:
            if nu == eta:
                continue
            if lex_less(nu, mu) or (is_proper_prefix(mu, nu) and nu[d] <= alpha < eta[d]):
                if not pos[nu] < pos[eta]:
                    out.append(f"{list(nu)} must precede {list(eta)}")
    return out


# -- JSON ---------------------------------------------------------------------------------


def _node(v) -> Node:
    return tuple(int(i) for i in v)


def system_from_json(data: dict) -> LambdaSystem:
    nodes = sorted(_node(n["node"]) for n in data["nodes"])
    rank, base, stationary, limits = {}, {}, {}, {}
    for n in data["nodes"]:
        eta = _node(n["node"])
        rank[eta] = int(n["rank"])
        base[eta] = frozenset(n.get("base", []))
        if "stationary" in n:
            stationary[eta] = bool(n["stationary"])
        if "limit_points" in n:
            limits[eta] = [int(i) for i in n["limit_points"]]
    return LambdaSystem(nodes, rank, base, stationary, limits)


def family_from_json(system: LambdaSystem, data: dict) -> BasedFamily:
    blocks = {_node(k["node"]): [list(b) for b in k["blocks"]] for k in data["sets"]}
    return BasedFamily(system, blocks, int(data["n"]))


def system_to_json(L: LambdaSystem) -> dict:
    out = []
    for eta in L.nodes:
        entry = {"node": list(eta), "rank": L.rank[eta], "base": sorted(L.base.get(eta, ()), key=repr)}
        if eta in L.stationary:
            entry["stationary"] = L.stationary[eta]
        if eta in L.limit_points:
            entry["limit_points"] = L.limit_points[eta]
        out.append(entry)
    return {"nodes": out}


def family_to_json(F: BasedFamily) -> dict:
    return {"n": F.n, "sets": [{"node": list(eta), "blocks": F.blocks[eta]} for eta in sorted(F.blocks)]}


def load_fixture(name_or_path: str) -> dict:
    """A packaged fixture by name (``height2``, ``disjoint``, ``counter``) or a JSON path."""
    from importlib import resources

    if name_or_path.endswith(".json"):
        with open(name_or_path, encoding="utf-8") as fh:
            data = json.load(fh)
    else:
        text = resources.files("rcworkbench.fixtures").joinpath(f"{name_or_path}.json").read_text("utf-8")
        data = json.loads(text)
    system = system_from_json(data["system"])
    return {
        "name": data.get("name", name_or_path),
        "system": system,
        "family": family_from_json(system, data["family"]),
        "markers": [int(a) for a in data.get("markers", [])],
        "bound": int(data.get("bound", 0)),
        "raw": data,
    }
