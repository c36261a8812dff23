"""Bookkeeping for the discrete cube {0,1}^k.

A vertex ``omega`` of {0,1}^k is stored as an integer bitmask: bit ``i - 1``
holds the coordinate ``omega_i``.  The same integer is the subset
``{i : omega_i = 1}`` of ``[k] = {1, ..., k}``, so ``S <= omega`` (inclusion)
is ``S & omega == S``.

Configurations are plain tuples of length ``2**k`` indexed by vertex mask,
i.e. listed in binary-counting order with ``omega_1`` as the least
significant bit.  ``1`` (the all-ones vertex) is always the last entry.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, product
from typing import Iterable, Iterator, Sequence

MAX_DIM = 16

# per-output-coordinate tags of a cube morphism
ZERO = "0"
ONE = "1"
COPY = "x"
FLIP = "1-x"


class DimensionError(ValueError):
    """Raised when configurations or morphisms have incompatible dimensions."""


def check_dim(k: int) -> None:
    if not 0 <= k <= MAX_DIM:
        raise DimensionError(f"cube dimension {k} outside 0..{MAX_DIM}")


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def top(k: int) -> int:
    """The all-ones vertex of {0,1}^k."""
    return (1 << k) - 1


def vertices(k: int) -> range:
    check_dim(k)
    return range(1 << k)


def config_dim(config: Sequence) -> int:
    """Dimension k of a configuration with 2**k entries."""
    n = len(config)
    k = n.bit_length() - 1
    if n <= 0 or 1 << k != n:
        raise DimensionError(f"configuration has {n} entries, not a power of two")
    return k


def corner_dim(corner: Sequence) -> int:
    """Dimension k of a corner, i.e. a sequence with 2**k - 1 entries."""
    return config_dim(tuple(corner) + (None,))


def bits(mask: int, k: int) -> str:
    """Render ``omega`` as the string omega_1 omega_2 ... omega_k."""
    return "".join("1" if mask >> i & 1 else "0" for i in range(k))


def from_bits(word: str) -> int:
    """Inverse of :func:`bits`."""
    return sum(1 << i for i, ch in enumerate(word) if ch == "1")


@lru_cache(maxsize=None)
def canonical_subset_order(k: int) -> tuple[int, ...]:
    """All subsets of [k], by size and then by bitmask value.

    The order respects inclusion: ``S_i <= S_j`` implies ``i <= j``.
    """
    check_dim(k)
    return tuple(sorted(range(1 << k), key=lambda m: (popcount(m), m)))


def respects_inclusion(order: Sequence[int]) -> bool:
    pos = {s: i for i, s in enumerate(order)}
    return all(pos[a] <= pos[b] for a in order for b in order if a & b == a)


def is_downward_closed(vertex_set: Iterable[int], k: int) -> bool:
    """True iff the set contains every sub-vertex of each of its members."""
    members = set(vertex_set)
    for w in members:
        if not 0 <= w < 1 << k:
            raise DimensionError(f"vertex {w} is not in {{0,1}}^{k}")
        sub = w
        while sub:
            sub = (sub - 1) & w
            if sub not in members:
                return False
    return True


def submasks(mask: int) -> list[int]:
    """Sub-vertices of ``mask`` in increasing numeric order."""
    out = []
    sub = mask
    while True:
        out.append(sub)
        if sub == 0:
            break
        sub = (sub - 1) & mask
    return out[::-1]


@dataclass(frozen=True)
class Face:
    """A face of {0,1}^k: coordinates in ``fixed`` (a mask) are pinned to the
    corresponding bits of ``values``; the rest vary."""

    k: int
    fixed: int
    values: int

    def __post_init__(self) -> None:
        check_dim(self.k)
        if self.values & ~self.fixed:
            raise DimensionError("face values set outside the fixed coordinates")

    @property
    def dim(self) -> int:
        return self.k - popcount(self.fixed)

    @property
    def codim(self) -> int:
        return popcount(self.fixed)

    @property
    def free(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.k) if not self.fixed >> i & 1)

    def is_upper(self) -> bool:
        return self.values == self.fixed

    def vertices(self) -> list[int]:
        """Vertices of the face listed in the face's own binary order."""
        free = self.free
        out = []
        for local in range(1 << len(free)):
            w = self.values
            for j, i in enumerate(free):
                if local >> j & 1:
                    w |= 1 << i
            out.append(w)
        return out

    def embedding(self) -> CubeMorphism:
        """The injective morphism {0,1}^dim -> {0,1}^k onto this face."""
        coords = []
        free = self.free
        for i in range(self.k):
            if self.fixed >> i & 1:
                coords.append((ONE, None) if self.values >> i & 1 else (ZERO, None))
            else:
                coords.append((COPY, free.index(i)))
        return CubeMorphism(len(free), self.k, tuple(coords))


def upper_face(k: int, subset: int) -> Face:
    """The face F_S = {omega : omega contains S}."""
    return Face(k, subset, subset)


def lower_faces(k: int) -> list[Face]:
    """The k codimension-one faces {omega_i = 0}."""
    return [Face(k, 1 << i, 0) for i in range(k)]


def faces(k: int, dim: int) -> Iterator[Face]:
    """Every face of {0,1}^k of the given dimension."""
    for free in combinations(range(k), dim):
        fixed = top(k) & ~sum(1 << i for i in free)
        fixed_coords = [i for i in range(k) if fixed >> i & 1]
        for vals in product((0, 1), repeat=len(fixed_coords)):
            values = sum(1 << i for i, b in zip(fixed_coords, vals) if b)
            yield Face(k, fixed, values)


def restrict(config: Sequence, face: Face) -> tuple:
    return tuple(config[w] for w in face.vertices())


@dataclass(frozen=True)
class CubeMorphism:
    """A morphism of discrete cubes {0,1}^k_in -> {0,1}^k_out.

    ``coords[i]`` describes output coordinate ``i`` as ``(tag, j)`` with tag in
    ``{"0", "1", "x", "1-x"}`` and ``j`` an input coordinate (``None`` for
    constants).  Coordinates are 0-based here.
    """

    k_in: int
    k_out: int
    coords: tuple[tuple[str, int | None], ...]

    def __post_init__(self) -> None:
        check_dim(self.k_in)
        check_dim(self.k_out)
        if len(self.coords) != self.k_out:
            raise DimensionError("one coordinate rule per output coordinate")
        for tag, j in self.coords:
            if tag in (ZERO, ONE):
                if j is not None:
                    raise DimensionError("constant coordinates take no input index")
            elif tag in (COPY, FLIP):
                if j is None or not 0 <= j < self.k_in:
                    raise DimensionError(f"input coordinate {j} out of range")
            else:
                raise DimensionError(f"unknown coordinate tag {tag!r}")

    def __call__(self, w: int) -> int:
        out = 0
        for i, (tag, j) in enumerate(self.coords):
            if tag == ONE:
                b = 1
            elif tag == ZERO:
                b = 0
            else:
                b = w >> j & 1
                if tag == FLIP:
                    b ^= 1
            out |= b << i
        return out

    def table(self) -> tuple[int, ...]:
        """Images of all input vertices, in binary order."""
        return _table(self)

    def then(self, other: CubeMorphism) -> CubeMorphism:
        """``other o self``: apply ``self`` first."""
        if other.k_in != self.k_out:
            raise DimensionError("morphisms are not composable")
        coords = []
        for tag, j in other.coords:
            if tag in (ZERO, ONE):
                coords.append((tag, None))
                continue
            inner_tag, inner_j = self.coords[j]
            if inner_tag in (ZERO, ONE):
                b = inner_tag == ONE
                if tag == FLIP:
                    b = not b
                coords.append((ONE if b else ZERO, None))
            else:
                flip = (inner_tag == FLIP) != (tag == FLIP)
                coords.append((FLIP if flip else COPY, inner_j))
        return CubeMorphism(self.k_in, other.k_out, tuple(coords))

    @classmethod
    def identity(cls, k: int) -> CubeMorphism:
        return cls(k, k, tuple((COPY, i) for i in range(k)))


@lru_cache(maxsize=4096)
def _table(rho: CubeMorphism) -> tuple[int, ...]:
    return tuple(rho(w) for w in range(1 << rho.k_in))


def apply_morphism(config: Sequence, rho: CubeMorphism) -> tuple:
    """Pull back a configuration on {0,1}^k_out to {0,1}^k_in along rho."""
    if config_dim(config) != rho.k_out:
        raise DimensionError(
            f"morphism targets dimension {rho.k_out}, configuration has "
            f"dimension {config_dim(config)}"
        )
    return tuple(config[v] for v in rho.table())


def all_morphisms(k_in: int, k_out: int) -> Iterator[CubeMorphism]:
    """Every morphism {0,1}^k_in -> {0,1}^k_out; there are (2 + 2 k_in)^k_out."""
    options = [(ZERO, None), (ONE, None)]
    options += [(COPY, j) for j in range(k_in)] + [(FLIP, j) for j in range(k_in)]
    for coords in product(options, repeat=k_out):
        yield CubeMorphism(k_in, k_out, coords)


def generating_morphisms(k_max: int) -> Iterator[CubeMorphism]:
    """A generating set for all morphisms between dimensions <= k_max.

    Transpositions of adjacent coordinates, reflection of the first
    coordinate, restriction to the face ``omega_l = 0``, the diagonal that
    repeats the last coordinate, and duplication along a new coordinate.
    Every morphism factors through these without leaving dimensions
    ``<= max(k_in, k_out)``, so closure under them implies closure under all.
    """
    for k in range(k_max + 1):
        ident = [(COPY, i) for i in range(k)]
        for i in range(k - 1):
            coords = list(ident)
            coords[i], coords[i + 1] = coords[i + 1], coords[i]
            yield CubeMorphism(k, k, tuple(coords))
        if k >= 1:
            yield CubeMorphism(k, k, ((FLIP, 0),) + tuple(ident[1:]))
            # {0,1}^(k-1) -> {0,1}^k
            yield CubeMorphism(k - 1, k, tuple(ident[:-1]) + ((ZERO, None),))
        if k >= 2:
            yield CubeMorphism(k - 1, k, tuple(ident[:-1]) + ((COPY, k - 2),))
        if k + 1 <= k_max:
            # {0,1}^(k+1) -> {0,1}^k forgetting the last input coordinate
            yield CubeMorphism(k + 1, k, tuple(ident))


def duplicate(config: Sequence) -> tuple:
    """Two copies of ``config`` stacked along a new last coordinate."""
    return tuple(config) * 2


def glue(bottom: Sequence, top_: Sequence) -> tuple:
    """The configuration [c, c']: ``c`` on omega_{k+1} = 0, ``c'`` on 1."""
    if len(bottom) != len(top_):
        raise DimensionError("glued halves must have equal dimension")
    return tuple(bottom) + tuple(top_)


def corner_config(k: int, base, apex) -> tuple:
    """The configuration that is ``base`` everywhere except ``apex`` at 1."""
    return (base,) * ((1 << k) - 1) + (apex,)


def constant(k: int, value) -> tuple:
    return (value,) * (1 << k)
