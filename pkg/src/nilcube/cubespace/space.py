"""Finite cubespaces stored as explicit cube tables.

Points are indices ``0..n-1`` with string labels.  ``cubes[k]`` is a
read-only ``(N_k, 2**k)`` integer array whose rows are the k-cubes in vertex
mask order, sorted and without repeats.  Rows are compared through integer
keys (base-``n`` digits) when they fit in 63 bits, and through raw byte
views otherwise.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from itertools import product
from typing import Iterable, Mapping, Sequence

import numpy as np

from ..cube import DimensionError, canonical_subset_order, popcount
from ..groups import AbelianGroup, finite_abelian

DS_GUARD = 10**8

AXIOMS = "axioms"
COMPLETION = "completion"
GLUEING = "glueing"


class CubespaceError(ValueError):
    pass


class CertificationRequired(CubespaceError):
    """An operation needs a property that has not been verified on the input."""


def point_dtype(n: int):
    if n <= 256:
        return np.uint8
    if n <= 65536:
        return np.uint16
    return np.int32


def row_keys(arr: np.ndarray, n: int) -> np.ndarray:
    """Keys comparing rows of ``arr`` (entries in ``0..n-1``) for equality and
    order-independent lookup."""
    arr = np.asarray(arr)
    m = arr.shape[1]
    if m == 0:
        return np.zeros(arr.shape[0], dtype=np.int64)
    if n ** m < 2**63:
        keys = np.zeros(arr.shape[0], dtype=np.int64)
        for j in range(m):
            keys *= n
            keys += arr[:, j]
        return keys
    arr = np.ascontiguousarray(arr)
    return arr.view(np.dtype((np.void, arr.dtype.itemsize * m))).ravel()


def sorted_unique_rows(arr: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    keys = row_keys(arr, n)
    keys, idx = np.unique(keys, return_index=True)
    return arr[idx], keys


def lookup(sorted_keys: np.ndarray, keys: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Positions of ``keys`` in ``sorted_keys`` and whether they were found."""
    if len(sorted_keys) == 0:
        z = np.zeros(len(keys), dtype=np.intp)
        return z, np.zeros(len(keys), dtype=bool)
    pos = np.searchsorted(sorted_keys, keys)
    pos_c = np.minimum(pos, len(sorted_keys) - 1)
    found = sorted_keys[pos_c] == keys
    return pos_c, found


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class FiniteCubespace:
    """A finite set of labelled points with explicit k-cubes for ``k <= k_max``.

    ``certified`` records which properties have been verified (see
    :func:`nilcube.cubespace.checks.certify_nilspace`); operations that rely
    on a property refuse to run until it is recorded.
    """

    labels: tuple[str, ...]
    cubes: tuple[np.ndarray, ...]
    keys: tuple[np.ndarray, ...]
    certified: frozenset = field(default_factory=frozenset)
    certified_degree: int | None = None

    # -- construction ---------------------------------------------------------

    @classmethod
    def from_arrays(cls, labels: Sequence[str], cube_arrays: Mapping[int, np.ndarray] | Sequence[np.ndarray],
                    k_max: int | None = None) -> FiniteCubespace:
        labels = tuple(str(x) for x in labels)
        n = len(labels)
        if n == 0:
            raise CubespaceError("a cubespace needs at least one point")
        if len(set(labels)) != n:
            raise CubespaceError("point labels must be distinct")
        if not isinstance(cube_arrays, Mapping):
            cube_arrays = dict(enumerate(cube_arrays))
        if k_max is None:
            k_max = max(cube_arrays, default=0)
        if k_max > 16:
            raise DimensionError("k_max above 16 is not supported")
        dtype = point_dtype(n)
        cubes = [np.arange(n, dtype=dtype).reshape(n, 1)]
        keys = [np.arange(n, dtype=np.int64)]
        for k in range(1, k_max + 1):
            arr = np.asarray(cube_arrays.get(k, np.zeros((0, 1 << k))), dtype=np.int64)
            if arr.size == 0:
                arr = arr.reshape(0, 1 << k)
            if arr.ndim != 2 or arr.shape[1] != 1 << k:
                raise CubespaceError(f"{k}-cubes must have {1 << k} vertices")
            if arr.size and (arr.min() < 0 or arr.max() >= n):
                raise CubespaceError(f"{k}-cube refers to an unknown point")
            rows, kk = sorted_unique_rows(arr.astype(dtype), n)
            cubes.append(_freeze(rows))
            keys.append(_freeze(kk))
        return cls(labels, tuple(cubes), tuple(keys))

    @classmethod
    def from_cubes(cls, labels: Sequence[str], cubes: Mapping[int, Iterable[Sequence]],
                   k_max: int | None = None) -> FiniteCubespace:
        """Build from cube lists given as label tuples or point indices."""
        labels = tuple(str(x) for x in labels)
        index = {lab: i for i, lab in enumerate(labels)}
        arrays = {}
        for k, rows in cubes.items():
            if k == 0:
                continue
            conv = []
            for row in rows:
                row = tuple(row)
                if len(row) != 1 << k:
                    raise CubespaceError(f"{k}-cube {row} must have {1 << k} vertices")
                try:
                    conv.append([r if isinstance(r, (int, np.integer)) else index[str(r)] for r in row])
                except KeyError as exc:
                    raise CubespaceError(f"unknown point {exc.args[0]!r} in {k}-cube") from None
            arrays[k] = np.array(conv, dtype=np.int64).reshape(-1, 1 << k)
        if k_max is None:
            k_max = max(cubes, default=0)
        return cls.from_arrays(labels, arrays, k_max)

    # -- basic queries ----------------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def k_max(self) -> int:
        return len(self.cubes) - 1

    def count(self, k: int) -> int:
        self._check_k(k)
        return int(self.cubes[k].shape[0])

    def index(self, label: str) -> int:
        try:
            return self.labels.index(str(label))
        except ValueError:
            raise CubespaceError(f"unknown point {label!r}") from None

    def _check_k(self, k: int) -> None:
        if not 0 <= k <= self.k_max:
            raise DimensionError(f"dimension {k} outside the stored range 0..{self.k_max}")

    def contains(self, k: int, configs: np.ndarray) -> np.ndarray:
        """Boolean mask: which rows of ``configs`` are k-cubes."""
        self._check_k(k)
        configs = np.asarray(configs)
        if configs.ndim == 1:
            configs = configs.reshape(1, -1)
        _, found = lookup(self.keys[k], row_keys(configs, self.n))
        return found

    def is_cube(self, config: Sequence) -> bool:
        """Membership of one configuration given by labels or indices."""
        idx = [c if isinstance(c, (int, np.integer)) else self.index(c) for c in config]
        k = len(idx).bit_length() - 1
        if 1 << k != len(idx):
            raise DimensionError("configuration length is not a power of two")
        return bool(self.contains(k, np.array([idx]))[0])

    def cube_labels(self, k: int) -> list[tuple[str, ...]]:
        return [tuple(self.labels[i] for i in row) for row in self.cubes[k]]

    def fmt(self, row) -> str:
        return "(" + " ".join(self.labels[int(i)] for i in row) + ")"

    def has(self, prop: str) -> bool:
        return prop in self.certified

    def require(self, *props: str) -> None:
        missing = [p for p in props if p not in self.certified]
        if missing:
            raise CertificationRequired(
                f"cubespace lacks certified {', '.join(missing)}; run certify_nilspace first")

    def with_certificates(self, props: Iterable[str], degree: int | None = None) -> FiniteCubespace:
        return replace(self, certified=self.certified | frozenset(props),
                       certified_degree=degree if degree is not None else self.certified_degree)

    def uncertified(self) -> FiniteCubespace:
        return replace(self, certified=frozenset(), certified_degree=None)

    def truncate(self, k_max: int) -> FiniteCubespace:
        if k_max > self.k_max:
            raise DimensionError("cannot extend k_max by truncation")
        return FiniteCubespace(self.labels, self.cubes[: k_max + 1], self.keys[: k_max + 1])

    def same_cubes(self, other: FiniteCubespace) -> bool:
        if self.labels != other.labels or self.k_max != other.k_max:
            return False
        return all(np.array_equal(a, b) for a, b in zip(self.cubes, other.cubes))

    def with_cubes(self, k: int, rows: np.ndarray) -> FiniteCubespace:
        """Copy with the k-cubes replaced (certificates dropped)."""
        arrays = {j: self.cubes[j] for j in range(1, self.k_max + 1)}
        arrays[k] = rows
        return FiniteCubespace.from_arrays(self.labels, arrays, self.k_max)

    def __repr__(self) -> str:
        counts = [self.count(k) for k in range(self.k_max + 1)]
        return f"<FiniteCubespace n={self.n} k_max={self.k_max} cubes={counts}>"


@dataclass(frozen=True, eq=False)
class CubespaceMap:
    """A map of point sets; ``mapping[i]`` is the image of source point ``i``."""

    source: FiniteCubespace
    target: FiniteCubespace
    mapping: np.ndarray

    def __post_init__(self) -> None:
        m = np.asarray(self.mapping, dtype=np.int64)
        if m.shape != (self.source.n,):
            raise CubespaceError("a map needs one image per source point")
        if m.size and (m.min() < 0 or m.max() >= self.target.n):
            raise CubespaceError("map image outside the target")
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "mapping", m)

    @classmethod
    def from_labels(cls, source: FiniteCubespace, target: FiniteCubespace,
                    pairs: Mapping[str, str]) -> CubespaceMap:
        missing = [lab for lab in source.labels if lab not in pairs]
        if missing:
            raise CubespaceError(f"map is not total: no image for {missing[0]!r}")
        return cls(source, target, np.array([target.index(pairs[lab]) for lab in source.labels]))

    def apply(self, configs: np.ndarray) -> np.ndarray:
        return self.mapping[np.asarray(configs, dtype=np.intp)].astype(point_dtype(self.target.n))

    def then(self, other: CubespaceMap) -> CubespaceMap:
        """``other o self``."""
        return CubespaceMap(self.source, other.target, other.mapping[self.mapping])

    def fibers(self) -> list[np.ndarray]:
        return [np.flatnonzero(self.mapping == y) for y in range(self.target.n)]

    def as_pairs(self) -> list[tuple[str, str]]:
        return [(self.source.labels[i], self.target.labels[int(j)]) for i, j in enumerate(self.mapping)]


# -- builders -----------------------------------------------------------------


def one_point_space(k_max: int = 1, label: str = "*") -> FiniteCubespace:
    return FiniteCubespace.from_arrays([label], {k: np.zeros((1, 1 << k), dtype=np.int64)
                                                 for k in range(1, k_max + 1)}, k_max)


def full_space(labels: Sequence[str], k_max: int) -> FiniteCubespace:
    """Every configuration is a cube."""
    n = len(labels)
    arrays = {k: np.array(list(product(range(n), repeat=1 << k)), dtype=np.int64).reshape(-1, 1 << k)
              for k in range(1, k_max + 1)}
    return FiniteCubespace.from_arrays(labels, arrays, k_max)


def element_label(g: tuple) -> str:
    return str(g[0]) if len(g) == 1 else "(" + ",".join(str(v) for v in g) + ")"


def hk_cube_count(A: AbelianGroup, k: int) -> int:
    """Number of Host-Kra k-cubes of a finite abelian group with levels."""
    total = 1
    for s in canonical_subset_order(k):
        total *= _subgroup_order(A, popcount(s))
    return total


def _subgroup_order(A: AbelianGroup, i: int) -> int:
    return math.prod(n for n, lv in zip(A.kinds, A.levels) if i <= lv)


def build_hk_cubespace(A: AbelianGroup, k_max: int, guard: int = DS_GUARD) -> FiniteCubespace:
    """Host-Kra cubespace of a finite abelian group with per-coordinate levels.

    Cubes are generated from their face coordinates, so the work is
    proportional to the number of cubes rather than to ``|A|^(2^k)``.
    """
    if not A.is_finite():
        raise CubespaceError("need a finite abelian group")
    if not A.proper:
        raise CubespaceError("need a proper filtration (every level >= 1)")
    for k in range(1, k_max + 1):
        total = hk_cube_count(A, k)
        if total > guard:
            raise CubespaceError(f"{total} {k}-cubes exceed the enumeration guard {guard}")
    elems = list(A.elements())
    labels = [element_label(g) for g in elems]
    dtype = point_dtype(len(elems))
    arrays = {}
    for k in range(1, k_max + 1):
        # point index = mixed radix over the coordinates, last coordinate fastest
        idx = np.zeros((1, 1 << k), dtype=dtype)
        for n, lv in zip(A.kinds, A.levels):
            part = _cyclic_hk_cubes(n, lv, k).astype(dtype)
            idx = (idx[:, None, :] * dtype(n) + part[None, :, :]).reshape(-1, 1 << k)
        arrays[k] = idx
    return FiniteCubespace.from_arrays(labels, arrays, k_max)


def _span(n: int, gens: list[np.ndarray], nv: int) -> np.ndarray:
    """All sums of multiples of ``gens`` mod ``n`` (one row per coefficient choice)."""
    out = np.zeros((1, nv), dtype=np.int32)
    vals = np.arange(n, dtype=np.int32)
    for g in gens:
        out = ((out[:, None, :] + vals[None, :, None] * g[None, None, :]) % n).reshape(-1, nv)
    return out


def _cyclic_hk_cubes(n: int, level: int, k: int) -> np.ndarray:
    """Host-Kra k-cubes of Z/n with the degree-``level`` filtration."""
    nv = 1 << k
    gens = [np.array([1 if w & s == s else 0 for w in range(nv)], dtype=np.int32)
            for s in canonical_subset_order(k) if popcount(s) <= level]
    half = len(gens) // 2
    lo, hi = _span(n, gens[:half], nv), _span(n, gens[half:], nv)
    small = np.uint8 if 2 * n <= 256 else np.int32
    out = lo.astype(small)[:, None, :] + hi.astype(small)[None, :, :]
    out %= n
    return out.reshape(-1, nv)


def build_ds_cubespace(moduli: Sequence[int] | int, s: int, k_max: int | None = None,
                       guard: int = DS_GUARD) -> FiniteCubespace:
    """The cubespace of a finite abelian group with the degree-s filtration."""
    if isinstance(moduli, int):
        moduli = (moduli,)
    if s < 1:
        raise CubespaceError("degree must be at least 1")
    if k_max is None:
        k_max = s + 2
    return build_hk_cubespace(finite_abelian(tuple(moduli), s), k_max, guard)


def product_cubespace(X: FiniteCubespace, Y: FiniteCubespace) -> FiniteCubespace:
    """Points are pairs; cubes are pairs of cubes of the same dimension."""
    k_max = min(X.k_max, Y.k_max)
    labels = [f"({a},{b})" for a in X.labels for b in Y.labels]
    arrays = {}
    for k in range(1, k_max + 1):
        cx = X.cubes[k].astype(np.int64)
        cy = Y.cubes[k].astype(np.int64)
        arrays[k] = (cx[:, None, :] * Y.n + cy[None, :, :]).reshape(-1, 1 << k)
    return FiniteCubespace.from_arrays(labels, arrays, k_max)


def induced_subspace(X: FiniteCubespace, subset: Iterable) -> FiniteCubespace:
    """Points in ``subset`` with the cubes of ``X`` that stay inside it."""
    keep = sorted({x if isinstance(x, (int, np.integer)) else X.index(x) for x in subset})
    if not keep:
        raise CubespaceError("a cubespace needs at least one point")
    new_index = np.full(X.n, -1, dtype=np.int64)
    new_index[keep] = np.arange(len(keep))
    arrays = {}
    for k in range(1, X.k_max + 1):
        rows = new_index[X.cubes[k].astype(np.intp)]
        arrays[k] = rows[(rows >= 0).all(axis=1)]
    return FiniteCubespace.from_arrays([X.labels[i] for i in keep], arrays, X.k_max)


def identity_map(X: FiniteCubespace) -> CubespaceMap:
    return CubespaceMap(X, X, np.arange(X.n))


def constant_map(X: FiniteCubespace, k_max: int | None = None) -> CubespaceMap:
    return CubespaceMap(X, one_point_space(X.k_max if k_max is None else k_max), np.zeros(X.n, dtype=np.int64))


def modular_map(X: FiniteCubespace, Y: FiniteCubespace, m: int) -> CubespaceMap:
    """Reduction ``i -> i mod m`` between spaces labelled by residues."""
    return CubespaceMap(X, Y, np.array([Y.index(str(int(lab) % m)) for lab in X.labels]))


def edge_cubespace(X: FiniteCubespace) -> FiniteCubespace:
    """Points are the 1-cubes of ``X``; k-cubes are the (k+1)-cubes of ``X``
    read as configurations of edges along the last coordinate."""
    if X.k_max < 1:
        raise DimensionError("the edge space needs 1-cubes")
    edges = X.cubes[1]
    labels = [f"({X.labels[a]},{X.labels[b]})" for a, b in edges]
    arrays = {}
    for k in range(1, X.k_max):
        rows = X.cubes[k + 1]
        half = 1 << k
        pairs = np.stack([rows[:, :half], rows[:, half:]], axis=2).reshape(-1, 2)
        pos, found = lookup(X.keys[1], row_keys(pairs, X.n))
        if not found.all():
            raise CubespaceError("a (k+1)-cube has an edge that is not a 1-cube")
        arrays[k] = pos.reshape(-1, half)
    return FiniteCubespace.from_arrays(labels, arrays, X.k_max - 1)


_NUM = re.compile(r"(\d+)")


def natural_key(label: str):
    return [int(t) if t.isdigit() else t for t in _NUM.split(label)]
