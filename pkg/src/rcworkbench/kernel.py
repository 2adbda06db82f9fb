"""Exact arithmetic in finite Boolean algebras.

A finite Boolean algebra is determined by its number of atoms; an element is
the set of atoms below it, stored as a Python ``int`` bitset (bit ``i`` set
means atom ``i`` lies below the element).  Subalgebras are stored as
partitions of the atom set: an element belongs to the subalgebra iff it is a
union of blocks.  Partitions are kept as a numpy label array (block index per
atom) so the block-wise operations stay linear in the atom count even for
algebras with ~10^6 atoms.

Literal convention, used everywhere in this package::

    literal(x, 0) == x
    literal(x, 1) == -x

i.e. exponent 1 means *complement*.  This is the opposite of the usual
sign-vector convention and is relied upon by the zero-product routines.
"""
from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

DEFAULT_MAX_ATOMS = 1 << 20
BRUTE_FORCE_MAX_ATOMS = 16
CAPACITY_ENV = "RCWORKBENCH_MAX_ATOMS"


class KernelError(Exception):
    """Base class for kernel errors."""


class CapacityError(KernelError):
    pass


class AlgebraMismatchError(KernelError):
    pass


class DegenerateQuotientError(KernelError):
    pass


class InconsistentExtensionError(KernelError):
    pass


def max_atoms() -> int:
    raw = os.environ.get(CAPACITY_ENV)
    return int(raw) if raw else DEFAULT_MAX_ATOMS


def check_capacity(atom_count: int) -> None:
    cap = max_atoms()
    if atom_count > cap:
        raise CapacityError(f"{atom_count} atoms exceeds capacity {cap} (set {CAPACITY_ENV})")


# -- bitset <-> numpy ---------------------------------------------------------

def bits_to_mask(bits: int, n: int) -> np.ndarray:
    """Boolean array of length ``n`` with ``mask[i] == bit i of bits``."""
    nbytes = (n + 7) // 8
    raw = np.frombuffer(bits.to_bytes(nbytes, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:n].astype(bool)


def mask_to_bits(mask: np.ndarray) -> int:
    packed = np.packbits(np.asarray(mask, dtype=bool), bitorder="little")
    return int.from_bytes(packed.tobytes(), "little")


def indices_to_bits(indices: Iterable[int]) -> int:
    bits = 0
    for i in indices:
        bits |= 1 << int(i)
    return bits


def bits_to_indices(bits: int) -> list[int]:
    out = []
    i = 0
    while bits:
        if bits & 1:
            out.append(i)
        bits >>= 1
        i += 1
    return out


_uid_counter = itertools.count()


@dataclass(frozen=True, eq=False)
class FiniteBA:
    """The Boolean algebra of all subsets of ``range(atom_count)``.

    ``atom_labels`` is an optional tuple of opaque labels; stage models put
    the generator assignment of each atom there.
    """

    atom_count: int
    atom_labels: Optional[tuple] = None
    name: str = ""
    uid: int = field(default_factory=lambda: next(_uid_counter))

    def __post_init__(self):
        if self.atom_count < 1:
            raise KernelError("a Boolean algebra needs at least one atom")
        check_capacity(self.atom_count)
        if self.atom_labels is not None and len(self.atom_labels) != self.atom_count:
            raise KernelError("atom_labels length must equal atom_count")

    def __repr__(self):
        tag = f" {self.name!r}" if self.name else ""
        return f"<FiniteBA{tag} atoms={self.atom_count} id={self.uid}>"

    @property
    def full_bits(self) -> int:
        return (1 << self.atom_count) - 1

    @property
    def zero(self) -> "Elem":
        return Elem(self, 0)

    @property
    def one(self) -> "Elem":
        return Elem(self, self.full_bits)

    def elem(self, bits: int) -> "Elem":
        if bits < 0 or bits >> self.atom_count:
            raise KernelError("bitset has bits outside the atom range")
        return Elem(self, bits)

    def from_atoms(self, indices: Iterable[int]) -> "Elem":
        return self.elem(indices_to_bits(indices))

    def from_mask(self, mask: np.ndarray) -> "Elem":
        return Elem(self, mask_to_bits(mask))

    def atom(self, i: int) -> "Elem":
        return Elem(self, 1 << i)

    def atoms(self) -> list["Elem"]:
        return [self.atom(i) for i in range(self.atom_count)]

    def elements(self) -> Iterator["Elem"]:
        """All 2^atom_count elements; refused above the brute-force gate."""
        if self.atom_count > BRUTE_FORCE_MAX_ATOMS:
            raise CapacityError("element enumeration is gated at 16 atoms")
        for bits in range(1 << self.atom_count):
            yield Elem(self, bits)


@dataclass(frozen=True)
class Elem:
    ba: FiniteBA
    bits: int

    def _same(self, other: "Elem") -> None:
        if not isinstance(other, Elem):
            raise TypeError(f"expected Elem, got {type(other).__name__}")
        if other.ba is not self.ba:
            raise AlgebraMismatchError(f"operands live in {self.ba!r} and {other.ba!r}")

    def __and__(self, other: "Elem") -> "Elem":
        self._same(other)
        return Elem(self.ba, self.bits & other.bits)

    def __or__(self, other: "Elem") -> "Elem":
        self._same(other)
        return Elem(self.ba, self.bits | other.bits)

    def __xor__(self, other: "Elem") -> "Elem":
        self._same(other)
        return Elem(self.ba, self.bits ^ other.bits)

    def __sub__(self, other: "Elem") -> "Elem":
        self._same(other)
        return Elem(self.ba, self.bits & ~other.bits)

    def __invert__(self) -> "Elem":
        return Elem(self.ba, self.ba.full_bits ^ self.bits)

    def __le__(self, other: "Elem") -> bool:
        self._same(other)
        return self.bits & ~other.bits == 0

    def __lt__(self, other: "Elem") -> bool:
        return self <= other and self.bits != other.bits

    def __ge__(self, other: "Elem") -> bool:
        return other <= self

    def __gt__(self, other: "Elem") -> bool:
        return other < self

    def __bool__(self):
        return self.bits != 0

    def __repr__(self):
        return f"Elem({self.bits:#x} in {self.ba.uid})"

    @property
    def is_zero(self) -> bool:
        return self.bits == 0

    @property
    def is_one(self) -> bool:
        return self.bits == self.ba.full_bits

    def mask(self) -> np.ndarray:
        return bits_to_mask(self.bits, self.ba.atom_count)

    def atom_indices(self) -> list[int]:
        return bits_to_indices(self.bits)


# functional spellings of the Boolean operations

def meet(a: Elem, b: Elem) -> Elem:
    return a & b


def join(a: Elem, b: Elem) -> Elem:
    return a | b


def complement(a: Elem) -> Elem:
    return ~a


def leq(a: Elem, b: Elem) -> bool:
    return a <= b


def eq(a: Elem, b: Elem) -> bool:
    a._same(b)
    return a.bits == b.bits


def literal(x: Elem, exponent: int) -> Elem:
    """``x^0 = x`` and ``x^1 = -x``."""
    if exponent not in (0, 1):
        raise ValueError("exponent must be 0 or 1")
    return x if exponent == 0 else ~x


def meet_all(ba: FiniteBA, elems: Iterable[Elem]) -> Elem:
    out = ba.one
    for e in elems:
        out = out & e
    return out


def join_all(ba: FiniteBA, elems: Iterable[Elem]) -> Elem:
    out = ba.zero
    for e in elems:
        out = out | e
    return out


def elementary_product(ba: FiniteBA, xs: Sequence[Elem], exponents: Sequence[int]) -> Elem:
    return meet_all(ba, (literal(x, e) for x, e in zip(xs, exponents)))


# -- free algebras ------------------------------------------------------------

def make_free(n: int) -> tuple[FiniteBA, list[Elem]]:
    """Fr(n): 2^n atoms in binary minterm order, generator i = atoms with bit i set."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n > 62 or (1 << n) > max_atoms():
        raise CapacityError(f"Fr({n}) needs {1 << n} atoms")
    ba = FiniteBA(1 << n, atom_labels=tuple(range(1 << n)), name=f"Fr({n})")
    codes = np.arange(1 << n, dtype=np.int64)
    gens = [ba.from_mask((codes >> i) & 1) for i in range(n)]
    return ba, gens


# -- subalgebras --------------------------------------------------------------

def _canonical_labels(raw: np.ndarray) -> np.ndarray:
    """Renumber block labels so blocks are numbered by their least atom."""
    _, first, inverse = np.unique(raw, return_index=True, return_inverse=True)
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    return rank[inverse.reshape(-1)].astype(np.int64)


class SubalgebraDesc:
    """A subalgebra of ``ba`` given by a partition of the atoms into blocks."""

    __slots__ = ("ba", "labels", "block_count", "_sizes", "_blocks")

    def __init__(self, ba: FiniteBA, labels):
        labels = np.asarray(labels, dtype=np.int64)
        if labels.shape != (ba.atom_count,):
            raise KernelError("need one block label per atom")
        self.ba = ba
        self.labels = _canonical_labels(labels)
        self.labels.setflags(write=False)
        self.block_count = int(self.labels.max()) + 1
        self._sizes = None
        self._blocks = None

    @classmethod
    def from_blocks(cls, ba: FiniteBA, blocks: Sequence[Iterable[int]]) -> "SubalgebraDesc":
        labels = np.full(ba.atom_count, -1, dtype=np.int64)
        for j, block in enumerate(blocks):
            idx = list(block)
            if not idx:
                raise KernelError("blocks must be nonempty")
            if (labels[idx] != -1).any():
                raise KernelError("blocks must be pairwise disjoint")
            labels[idx] = j
        if (labels == -1).any():
            raise KernelError("blocks must cover every atom")
        return cls(ba, labels)

    @classmethod
    def trivial(cls, ba: FiniteBA) -> "SubalgebraDesc":
        return cls(ba, np.zeros(ba.atom_count, dtype=np.int64))

    @classmethod
    def whole(cls, ba: FiniteBA) -> "SubalgebraDesc":
        return cls(ba, np.arange(ba.atom_count, dtype=np.int64))

    def __eq__(self, other):
        return (
            isinstance(other, SubalgebraDesc)
            and other.ba is self.ba
            and np.array_equal(other.labels, self.labels)
        )

    def __hash__(self):
        return hash((self.ba.uid, self.labels.tobytes()))

    def __repr__(self):
        return f"<SubalgebraDesc of {self.ba!r}: {self.block_count} blocks>"

    @property
    def sizes(self) -> np.ndarray:
        if self._sizes is None:
            self._sizes = np.bincount(self.labels, minlength=self.block_count)
        return self._sizes

    def blocks(self) -> list[int]:
        """Blocks as bitsets, ordered by least atom."""
        if self._blocks is None:
            order = np.argsort(self.labels, kind="stable")
            bounds = np.cumsum(self.sizes)[:-1]
            self._blocks = [indices_to_bits(chunk) for chunk in np.split(order, bounds)]
        return self._blocks

    def block_elems(self) -> list[Elem]:
        return [Elem(self.ba, b) for b in self.blocks()]

    def block_index_lists(self) -> list[list[int]]:
        order = np.argsort(self.labels, kind="stable")
        bounds = np.cumsum(self.sizes)[:-1]
        return [sorted(int(i) for i in chunk) for chunk in np.split(order, bounds)]

    def contains(self, a: Elem) -> bool:
        if a.ba is not self.ba:
            raise AlgebraMismatchError("element from another algebra")
        mask = a.mask()
        inside = np.bincount(self.labels, weights=mask, minlength=self.block_count)
        return bool(np.all((inside == 0) | (inside == self.sizes)))

    def union_of_blocks(self, block_indices: Iterable[int]) -> Elem:
        chosen = np.zeros(self.block_count, dtype=bool)
        chosen[list(block_indices)] = True
        return self.ba.from_mask(chosen[self.labels])

    def elements(self) -> Iterator[Elem]:
        if self.block_count > BRUTE_FORCE_MAX_ATOMS:
            raise CapacityError("subalgebra enumeration is gated at 16 blocks")
        blocks = self.blocks()
        for choice in range(1 << self.block_count):
            bits = 0
            for j, b in enumerate(blocks):
                if choice >> j & 1:
                    bits |= b
            yield Elem(self.ba, bits)

    def refines(self, other: "SubalgebraDesc") -> bool:
        """True iff ``other`` is a subalgebra of ``self`` (every other-block is a union of self-blocks)."""
        if other.ba is not self.ba:
            raise AlgebraMismatchError("partitions of different algebras")
        pair = self.labels * other.block_count + other.labels
        return len(np.unique(pair)) == self.block_count

    def meet_with(self, other: "SubalgebraDesc") -> "SubalgebraDesc":
        """The subalgebra generated by both (common refinement)."""
        if other.ba is not self.ba:
            raise AlgebraMismatchError("partitions of different algebras")
        return SubalgebraDesc(self.ba, self.labels * other.block_count + other.labels)


def generated_subalgebra(ba: FiniteBA, gens: Sequence[Elem]) -> SubalgebraDesc:
    """Partition atoms by which generators they lie under."""
    raw = np.zeros(ba.atom_count, dtype=np.int64)
    width = 0
    for g in gens:
        if g.ba is not ba:
            raise AlgebraMismatchError("generator from another algebra")
        if width == 62:
            raw = _canonical_labels(raw)
            width = int(raw.max()).bit_length()
        raw = raw * 2 + g.mask()
        width += 1
    return SubalgebraDesc(ba, raw)


def _check_sub(ba: FiniteBA, sub: SubalgebraDesc, b: Elem) -> None:
    if sub.ba is not ba or b.ba is not ba:
        raise AlgebraMismatchError("subalgebra, element and algebra must agree")


def lpr(ba: FiniteBA, sub: SubalgebraDesc, b: Elem) -> Elem:
    """Lower projection: the largest element of ``sub`` below ``b``."""
    _check_sub(ba, sub, b)
    outside = np.bincount(sub.labels, weights=~b.mask(), minlength=sub.block_count)
    return ba.from_mask((outside == 0)[sub.labels])


def upr(ba: FiniteBA, sub: SubalgebraDesc, b: Elem) -> Elem:
    """Upper projection: the least element of ``sub`` above ``b``."""
    _check_sub(ba, sub, b)
    inside = np.bincount(sub.labels, weights=b.mask(), minlength=sub.block_count)
    return ba.from_mask((inside > 0)[sub.labels])


def is_independent_over(ba: FiniteBA, sub: SubalgebraDesc, xs: Sequence[Elem]) -> bool:
    """Every block of ``sub`` meets every sign cell of ``xs``."""
    k = len(xs)
    if k == 0:
        return True
    cell = np.zeros(ba.atom_count, dtype=np.int64)
    for x in xs:
        if x.ba is not ba:
            raise AlgebraMismatchError("element from another algebra")
        cell = cell * 2 + x.mask()
    key = np.unique(sub.labels * (1 << k) + cell)
    per_block = np.bincount(key >> k, minlength=sub.block_count)
    return bool(np.all(per_block == (1 << k)))


# -- homomorphisms ------------------------------------------------------------

class Hom:
    """Homomorphism ``source -> target`` given by a map from target atoms to source atoms.

    ``h(a) = {t : atom_image[t] in a}``.  Every Boolean homomorphism between
    finite algebras has this form; it is injective iff ``atom_image`` is onto.
    """

    __slots__ = ("source", "target", "atom_image")

    def __init__(self, source: FiniteBA, target: FiniteBA, atom_image):
        image = np.asarray(atom_image, dtype=np.int64)
        if image.shape != (target.atom_count,):
            raise KernelError("atom_image needs one entry per target atom")
        if target.atom_count and (image.min() < 0 or image.max() >= source.atom_count):
            raise KernelError("atom_image points outside the source atoms")
        image.setflags(write=False)
        self.source = source
        self.target = target
        self.atom_image = image

    def __call__(self, a: Elem) -> Elem:
        if a.ba is not self.source:
            raise AlgebraMismatchError("element is not in the source algebra")
        return self.target.from_mask(a.mask()[self.atom_image])

    @property
    def is_injective(self) -> bool:
        return len(np.unique(self.atom_image)) == self.source.atom_count

    def compose(self, after: "Hom") -> "Hom":
        """``after ∘ self``."""
        if after.source is not self.target:
            raise AlgebraMismatchError("homomorphisms do not compose")
        cls = Embedding if isinstance(self, Embedding) and isinstance(after, Embedding) else Hom
        return cls(self.source, after.target, self.atom_image[after.atom_image])

    def image_subalgebra(self) -> SubalgebraDesc:
        return SubalgebraDesc(self.target, self.atom_image)


class Embedding(Hom):
    __slots__ = ()

    def __init__(self, source: FiniteBA, target: FiniteBA, atom_image):
        super().__init__(source, target, atom_image)
        if not self.is_injective:
            raise KernelError("atom_image is not onto the source atoms; map is not injective")


def identity_embedding(ba: FiniteBA) -> Embedding:
    return Embedding(ba, ba, np.arange(ba.atom_count))


def subalgebra_as_algebra(sub: SubalgebraDesc, name: str = "") -> tuple[FiniteBA, Embedding]:
    """Realize a subalgebra as its own FiniteBA (atoms = blocks) with the inclusion."""
    ba = FiniteBA(sub.block_count, name=name or f"sub({sub.ba.name})")
    return ba, Embedding(ba, sub.ba, sub.labels)


def pull_back(emb: Embedding, sub: SubalgebraDesc) -> SubalgebraDesc:
    """Given ``sub`` ≤ target contained in the image of ``emb``, its preimage as a partition of the source."""
    if sub.ba is not emb.target:
        raise AlgebraMismatchError("subalgebra is not in the embedding's target")
    src = np.full(emb.source.atom_count, -1, dtype=np.int64)
    src[emb.atom_image] = sub.labels
    pairs = np.unique(np.stack([emb.atom_image, sub.labels]), axis=1)
    if len(np.unique(pairs[0])) != pairs.shape[1]:
        raise KernelError("subalgebra is not contained in the embedding's image")
    return SubalgebraDesc(emb.source, src)


def embedding_by_generators(
    source: FiniteBA, source_gens: Sequence[Elem], target: FiniteBA, target_gens: Sequence[Elem]
) -> Embedding:
    """The embedding sending each source generator to the matching target generator.

    Requires the source generators to separate atoms; raises if the induced
    map is not a well-defined injective homomorphism.
    """
    if len(source_gens) != len(target_gens):
        raise KernelError("generator lists differ in length")
    src_code = np.zeros(source.atom_count, dtype=np.int64)
    tgt_code = np.zeros(target.atom_count, dtype=np.int64)
    for g, h in zip(source_gens, target_gens):
        src_code = src_code * 2 + g.mask()
        tgt_code = tgt_code * 2 + h.mask()
    if len(np.unique(src_code)) != source.atom_count:
        raise KernelError("source generators do not separate atoms")
    lookup = {int(c): i for i, c in enumerate(src_code)}
    try:
        image = [lookup[int(c)] for c in tgt_code]
    except KeyError as exc:
        raise KernelError(f"target atom with generator pattern {exc} has no source atom") from None
    return Embedding(source, target, image)


# -- constructions ------------------------------------------------------------

def coproduct(b1: FiniteBA, b2: FiniteBA) -> tuple[FiniteBA, Embedding, Embedding]:
    """B1 ⊕ B2; atom ``i * |B2| + j`` is the pair (atom i of B1, atom j of B2)."""
    n1, n2 = b1.atom_count, b2.atom_count
    check_capacity(n1 * n2)
    labels = None
    if b1.atom_labels is not None and b2.atom_labels is not None:
        labels = tuple((p, q) for p in b1.atom_labels for q in b2.atom_labels)
    g = FiniteBA(n1 * n2, atom_labels=labels, name=f"({b1.name}⊕{b2.name})")
    t = np.arange(n1 * n2)
    return g, Embedding(b1, g, t // n2), Embedding(b2, g, t % n2)


def coproduct_many(algebras: Sequence[FiniteBA]) -> tuple[FiniteBA, list[Embedding]]:
    if not algebras:
        return FiniteBA(1, name="2"), []
    total = 1
    for b in algebras:
        total *= b.atom_count
    check_capacity(total)
    g = FiniteBA(total, name="⊕".join(b.name or "?" for b in algebras))
    t = np.arange(total, dtype=np.int64)
    embs = []
    stride = total
    for b in algebras:
        stride //= b.atom_count
        embs.append(Embedding(b, g, (t // stride) % b.atom_count))
    return g, embs


def quotient_by_element(ba: FiniteBA, r: Elem) -> tuple[FiniteBA, Hom]:
    """B / (B↾r), realized as the relative algebra below -r."""
    if r.ba is not ba:
        raise AlgebraMismatchError("element from another algebra")
    if r.is_one:
        raise DegenerateQuotientError("quotient by the unit ideal is the trivial algebra")
    kept = np.flatnonzero(~r.mask())
    labels = None if ba.atom_labels is None else tuple(ba.atom_labels[i] for i in kept)
    q = FiniteBA(len(kept), atom_labels=labels, name=f"{ba.name}/r" if ba.name else "")
    return q, Hom(ba, q, kept)


@dataclass(frozen=True)
class Quotient:
    algebra: Optional[FiniteBA]
    projection: Optional[Hom]
    kernel_generator: Elem
    degenerate: bool


def quotient_by_congruence(ba: FiniteBA, pairs: Iterable[tuple[Elem, Elem]]) -> Quotient:
    """Quotient by the least congruence identifying each pair.

    Congruences of Boolean algebras are ideals; the ideal here is generated
    by the join of the symmetric differences.
    """
    r = ba.zero
    for u, v in pairs:
        r = r | (u ^ v)
    if r.is_one:
        return Quotient(None, None, r, True)
    q, proj = quotient_by_element(ba, r)
    return Quotient(q, proj, r, False)


def adjoin_element(a: FiniteBA, i_gen: Elem, j_gen: Elem) -> tuple[FiniteBA, Embedding, Elem]:
    """Extend A by x with e[A]↾x = e[A↾i_gen] and e[A]↾-x = e[A↾j_gen].

    Pair model (A/J) × (A/I): the first factor is the part below x.
    """
    if i_gen.ba is not a or j_gen.ba is not a:
        raise AlgebraMismatchError("ideal generators must lie in A")
    if not (i_gen & j_gen).is_zero:
        raise InconsistentExtensionError("prescribed ideals must intersect in {0}")
    upper = np.flatnonzero(~j_gen.mask())
    lower = np.flatnonzero(~i_gen.mask())
    image = np.concatenate([upper, lower])
    labels = None
    if a.atom_labels is not None:
        labels = tuple((a.atom_labels[i], 1) for i in upper) + tuple((a.atom_labels[i], 0) for i in lower)
    b = FiniteBA(len(image), atom_labels=labels, name=f"{a.name}(x)" if a.name else "")
    x = b.elem((1 << len(upper)) - 1)
    return b, Embedding(a, b, image), x


def is_free_over(ba: FiniteBA, sub: SubalgebraDesc) -> Optional[list[Elem]]:
    """Witness X independent over ``sub`` with ⟨sub ∪ X⟩ = ba, or None.

    Such X exists iff all blocks have the same size 2^m; then the i-th
    witness collects, inside every block, the atoms whose position in the
    block has bit i set.
    """
    if sub.ba is not ba:
        raise AlgebraMismatchError("subalgebra of another algebra")
    sizes = sub.sizes
    size = int(sizes[0])
    if not np.all(sizes == size) or size & (size - 1):
        return None
    m = size.bit_length() - 1
    order = np.argsort(sub.labels, kind="stable")
    position = np.empty(ba.atom_count, dtype=np.int64)
    position[order] = np.arange(ba.atom_count) % size
    return [ba.from_mask((position >> i) & 1) for i in range(m)]


# -- serialization ------------------------------------------------------------

def ba_to_json(ba: FiniteBA) -> dict:
    out = {"atom_count": ba.atom_count}
    if ba.name:
        out["name"] = ba.name
    return out


def elem_to_json(a: Elem) -> str:
    return format(a.bits, "#x")


def elem_from_json(ba: FiniteBA, text: str) -> Elem:
    return ba.elem(int(text, 16))


def sub_to_json(sub: SubalgebraDesc) -> dict:
    return {"atom_count": sub.ba.atom_count, "blocks": sub.block_index_lists()}


def sub_from_json(ba: FiniteBA, data: dict) -> SubalgebraDesc:
    if data["atom_count"] != ba.atom_count:
        raise KernelError("atom count mismatch")
    return SubalgebraDesc.from_blocks(ba, data["blocks"])
