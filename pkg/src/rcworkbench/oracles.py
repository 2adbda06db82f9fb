"""Brute-force reference computations on small algebras.

Everything here works on raw ``int`` bitsets and enumerates; none of it goes
through the label arrays of :mod:`rcworkbench.kernel`.  The gate is 16 atoms
or 16 minterms, whichever applies.
"""
from __future__ import annotations

import itertools
from typing import Iterable, Optional, Sequence

GATE = 16


def minterms(n_atoms: int, gens: Sequence[int]) -> list[int]:
    """Nonzero products of generator literals, computed by literal products."""
    full = (1 << n_atoms) - 1
    out = []
    for signs in itertools.product((0, 1), repeat=len(gens)):
        p = full
        for g, s in zip(gens, signs):
            p &= g if s == 0 else full ^ g
        if p:
            out.append(p)
    return out


def unions(parts: Sequence[int]) -> list[int]:
    if len(parts) > GATE:
        raise ValueError("too many parts to enumerate")
    out = [0]
    for p in parts:
        out += [u | p for u in out]
    return out


def closure(n_atoms: int, gens: Sequence[int]) -> set[int]:
    """Subalgebra generated by ``gens``: all joins of minterms."""
    return set(unions(minterms(n_atoms, gens)))


def closure_by_saturation(n_atoms: int, gens: Sequence[int]) -> set[int]:
    """Same set by saturating under ·, +, − (only for tiny inputs)."""
    full = (1 << n_atoms) - 1
    seen = {0, full, *gens}
    frontier = list(seen)
    while frontier:
        new = []
        current = list(seen)
        for a in frontier:
            for c in (full ^ a,):
                if c not in seen:
                    seen.add(c)
                    new.append(c)
            for b in current:
                for c in (a & b, a | b):
                    if c not in seen:
                        seen.add(c)
                        new.append(c)
        frontier = new
    return seen


def lpr(elements: Iterable[int], b: int) -> int:
    below = [a for a in elements if a & ~b == 0]
    best = 0
    for a in below:
        best |= a
    # ``best`` is the join of everything below b; it must itself be one of them
    if best not in below:
        raise AssertionError("no maximum below b")
    return best


def upr(elements: Iterable[int], b: int) -> int:
    above = [a for a in elements if b & ~a == 0]
    best = -1
    for a in above:
        best = a if best < 0 else best & a
    if best not in above:
        raise AssertionError("no minimum above b")
    return best


def independent_over(n_atoms: int, elements: Iterable[int], xs: Sequence[int]) -> bool:
    full = (1 << n_atoms) - 1
    for a in elements:
        if a == 0:
            continue
        for signs in itertools.product((0, 1), repeat=len(xs)):
            p = a
            for x, s in zip(xs, signs):
                p &= x if s == 0 else full ^ x
            if p == 0:
                return False
    return True


def free_witness_search(n_atoms: int, blocks: Sequence[int]) -> Optional[list[int]]:
    """Exhaustive search for X independent over ⟨blocks⟩ generating everything.

    Depth-first over increasing tuples of elements; a partial family is kept
    only while it is independent over the subalgebra.  Returns the first
    witness found.
    """
    full = (1 << n_atoms) - 1
    candidates = list(range(1, full))

    def independent(xs):
        for blk in blocks:
            for signs in itertools.product((0, 1), repeat=len(xs)):
                p = blk
                for x, s in zip(xs, signs):
                    p &= x if s == 0 else full ^ x
                if p == 0:
                    return False
        return True

    def generates(xs):
        return len(minterms(n_atoms, list(blocks) + list(xs))) == n_atoms

    def search(xs, start):
        if generates(xs):
            return list(xs)
        for i in range(start, len(candidates)):
            ys = xs + [candidates[i]]
            if independent(ys):
                found = search(ys, i + 1)
                if found is not None:
                    return found
        return None

    return search([], 0)


def choice_function_transversal(sets: Sequence[Sequence]) -> Optional[tuple]:
    """First one-one choice function by exhaustive product search."""
    for choice in itertools.product(*[list(s) for s in sets]):
        if len(set(choice)) == len(choice):
            return choice
    return None


def hall_violated(sets: Sequence[Sequence], subset: Iterable[int]) -> bool:
    idx = list(subset)
    neighbourhood = set()
    for i in idx:
        neighbourhood |= set(sets[i])
    return len(neighbourhood) < len(idx)


def set_partitions(items: Sequence[int]):
    """All partitions of ``items`` (restricted growth strings)."""
    n = len(items)
    if n == 0:
        yield []
        return

    def rec(i, rgs, k):
        if i == n:
            blocks = [[] for _ in range(k)]
            for item, b in zip(items, rgs):
                blocks[b].append(item)
            yield blocks
            return
        for b in range(k + 1):
            rgs.append(b)
            yield from rec(i + 1, rgs, max(k, b + 1))
            rgs.pop()

    yield from rec(0, [], 0)
