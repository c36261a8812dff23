"""Canonical equivalences ``~_s`` and the factors ``pi_s X``."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from ..cube import DimensionError
from ..nilmanifold import InconsistencyError
from ..report import Report
from .checks import check_fibration, certify_nilspace, check_uniqueness, require_nilspace
from .space import (
    CubespaceError,
    CubespaceMap,
    FiniteCubespace,
    natural_key,
    point_dtype,
    row_keys,
)


@dataclass(frozen=True)
class Partition:
    """Blocks of point indices, ordered by their smallest member."""

    blocks: tuple[tuple[int, ...], ...]
    block_of: np.ndarray

    @classmethod
    def from_labels(cls, block_of: np.ndarray) -> Partition:
        n = len(block_of)
        first: dict[int, int] = {}
        for i, b in enumerate(block_of.tolist()):
            first.setdefault(b, len(first))
        relabel = np.array([first[b] for b in block_of.tolist()], dtype=np.int64)
        blocks = [[] for _ in range(len(first))]
        for i in range(n):
            blocks[relabel[i]].append(i)
        return cls(tuple(tuple(b) for b in blocks), relabel)

    def __len__(self) -> int:
        return len(self.blocks)

    def same(self, x: int, y: int) -> bool:
        return self.block_of[x] == self.block_of[y]

    def pairs(self) -> int:
        return sum(len(b) ** 2 for b in self.blocks)

    def label(self, X: FiniteCubespace, b: int) -> str:
        return "{" + ",".join(sorted((X.labels[i] for i in self.blocks[b]), key=natural_key)) + "}"


def _corner_relation(X: FiniteCubespace, s: int) -> np.ndarray:
    """``R[x, y]``: the configuration equal to ``x`` except ``y`` at the top is
    an (s+1)-cube."""
    k = s + 1
    n = X.n
    xs, ys = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    rows = np.repeat(xs.reshape(-1, 1), 1 << k, axis=1)
    rows[:, -1] = ys.ravel()
    return X.contains(k, rows.astype(point_dtype(n))).reshape(n, n)


def _definition_relation(X: FiniteCubespace, s: int) -> np.ndarray:
    """``R[x, y]``: some two (s+1)-cubes share every vertex but the top, where
    they take the values ``x`` and ``y``."""
    cubes = X.cubes[s + 1]
    ck = row_keys(cubes[:, :-1], X.n)
    _, group = np.unique(ck, return_inverse=True)
    order = np.argsort(group, kind="stable")
    g = group[order]
    tops = cubes[order, -1].astype(np.int64)
    starts = np.flatnonzero(np.r_[True, g[1:] != g[:-1]])
    sizes = np.diff(np.r_[starts, len(g)])
    R = np.zeros((X.n, X.n), dtype=bool)
    # pairs within each group: row i with every row of its group
    rep_sizes = np.repeat(sizes, sizes)
    rep_starts = np.repeat(starts, sizes)
    left = np.repeat(np.arange(len(g)), rep_sizes)
    offs = np.arange(len(left)) - np.repeat(np.cumsum(rep_sizes) - rep_sizes, rep_sizes)
    right = np.repeat(rep_starts, rep_sizes) + offs
    R[tops[left], tops[right]] = True
    return R


def _equivalence_partition(R: np.ndarray, what: str) -> Partition:
    n = len(R)
    if not R.diagonal().all():
        x = int(np.flatnonzero(~R.diagonal())[0])
        raise InconsistencyError(f"{what} is not reflexive at point {x}")
    if not (R == R.T).all():
        x, y = np.argwhere(R != R.T)[0]
        raise InconsistencyError(f"{what} is not symmetric at ({x}, {y})")
    src, dst = np.nonzero(R)
    ncomp, label = connected_components(coo_matrix((np.ones(len(src)), (src, dst)), shape=(n, n)),
                                        directed=False)
    size = np.bincount(label, minlength=ncomp)
    if int((size.astype(np.int64) ** 2).sum()) != int(R.sum()):
        for comp in np.flatnonzero(np.bincount(label[src], minlength=ncomp) != size ** 2):
            members = np.flatnonzero(label == comp)
            for b in members:
                for a in members[R[members, b]]:
                    for c in members[R[b, members]]:
                        if not R[a, c]:
                            raise InconsistencyError(f"{what} is not transitive: {a} ~ {b} ~ {c}")
        raise InconsistencyError(f"{what} is not transitive")
    return Partition.from_labels(label)


def canonical_relation(X: FiniteCubespace, s: int, f: CubespaceMap | None = None) -> Partition:
    """The partition of ``X`` into ``~_s`` classes.

    Computed twice, from corner-type configurations and from pairs of cubes
    sharing a corner; the two must agree.  With ``f``, the relative relation
    (same image under ``f`` as well).
    """
    require_nilspace(X)
    if s < 0:
        raise DimensionError("s must be non-negative")
    if s + 1 > X.k_max:
        raise DimensionError(f"~_{s} needs (s+1)-cubes but k_max = {X.k_max}")
    R = _corner_relation(X, s)
    D = _definition_relation(X, s)
    if not np.array_equal(R, D):
        x, y = np.argwhere(R != D)[0]
        raise InconsistencyError(
            f"the two descriptions of ~_{s} disagree on ({X.labels[x]}, {X.labels[y]})")
    if f is not None:
        if f.source is not X:
            raise ValueError("relative relation needs a map out of X")
        R = R & (f.mapping[:, None] == f.mapping[None, :])
    return _equivalence_partition(R, f"~_{s}")


def replacement_report(X: FiniteCubespace, part: Partition, k: int) -> Report:
    """Whether ``C^k`` is a union of full class-configurations: any
    configuration pointwise equivalent to a cube is a cube."""
    rep = Report(f"replacement-{k}")
    cls = part.block_of[X.cubes[k].astype(np.intp)]
    uniq = np.unique(cls, axis=0)
    sizes = np.array([len(b) for b in part.blocks], dtype=object)
    expected = sum(math.prod(sizes[row].tolist()) for row in uniq)
    rep.metrics["cubes"] = X.count(k)
    rep.metrics["expected"] = expected
    if expected != X.count(k):
        rep.add("replacement-fails", f"dimension {k}",
                f"{expected - X.count(k)} equivalent configurations are not cubes")
    return rep


def partition_from_blocks(X: FiniteCubespace, blocks) -> Partition:
    """A partition given as blocks of labels (or indices) covering ``X``."""
    block_of = np.full(X.n, -1, dtype=np.int64)
    for b, block in enumerate(blocks):
        for p in block:
            i = p if isinstance(p, (int, np.integer)) else X.index(p)
            if block_of[i] != -1:
                raise CubespaceError(f"point {X.labels[i]} lies in two blocks")
            block_of[i] = b
    if (block_of < 0).any():
        raise CubespaceError(f"point {X.labels[int(np.flatnonzero(block_of < 0)[0])]} is in no block")
    return Partition.from_labels(block_of)


def quotient_cubespace(X: FiniteCubespace, part: Partition) -> CubespaceMap:
    """The projection onto ``X / part``; cubes of the quotient are the
    pointwise images of cubes.  Blocks are labelled by their sorted members."""
    if len(part.block_of) != X.n:
        raise CubespaceError("partition does not cover the space")
    labels = [part.label(X, b) for b in range(len(part))]
    arrays = {k: part.block_of[X.cubes[k].astype(np.intp)] for k in range(1, X.k_max + 1)}
    Q = FiniteCubespace.from_arrays(labels, arrays, X.k_max)
    return CubespaceMap(X, Q, part.block_of)


def canonical_quotient(X: FiniteCubespace, s: int) -> CubespaceMap:
    """``X -> pi_s X``, after checking that ``~_s`` classes can be swapped
    freely inside cubes of dimension up to ``s + 1``."""
    part = canonical_relation(X, s)
    for k in range(1, min(s + 1, X.k_max) + 1):
        rep = replacement_report(X, part, k)
        if not rep.ok:
            raise InconsistencyError(f"~_{s} classes do not respect {k}-cubes: {rep.items[0]}")
    return quotient_cubespace(X, part)


@dataclass
class Tower:
    """Projections ``X -> pi_t X`` for ``t = s, s-1, ..., 0``."""

    levels: list[CubespaceMap]
    report: Report = field(default_factory=lambda: Report("tower"))

    @property
    def heights(self) -> list[int]:
        return [p.target.n for p in self.levels]

    def factor(self, t: int) -> CubespaceMap:
        s = len(self.levels) - 1
        return self.levels[s - t]


def _certified_factor(X: FiniteCubespace, p: CubespaceMap) -> tuple[FiniteCubespace, Report]:
    """Certify ``pi_t X``; a discrete partition leaves ``X`` unchanged."""
    Q = p.target
    if Q.n == X.n:
        return Q.with_certificates(X.certified, X.certified_degree), Report("certify")
    return certify_nilspace(Q)


def canonical_tower(X: FiniteCubespace) -> Tower:
    """All canonical factors of a certified nilspace, with consistency checks.

    Each projection is checked to be a fibration, each ``pi_t X`` to have
    (t+1)-uniqueness, and factors of factors to coincide with factors.
    """
    require_nilspace(X)
    s = X.certified_degree
    if s + 1 > X.k_max:
        raise DimensionError(f"the tower of a degree-{s} space needs k_max >= {s + 1}")
    rep = Report("tower")
    levels = []
    parts = {}
    for t in range(s, -1, -1):
        p = canonical_quotient(X, t)
        parts[t] = p.mapping
        fib = check_fibration(p)
        rep.merge(fib, f"pi_{t}")
        uniq = check_uniqueness(p.target, t + 1)
        rep.merge(uniq, f"pi_{t}")
        Q, cert = _certified_factor(X, p)
        rep.merge(cert, f"pi_{t}")
        if fib.ok and uniq.ok and Q.certified_degree is not None:
            for r in range(t - 1, -1, -1):
                inner = canonical_relation(Q, r).block_of[p.mapping]
                if not _same_partition(inner, parts[r] if r in parts else canonical_relation(X, r).block_of):
                    rep.add("nesting-fails", f"pi_{r}(pi_{t} X)", f"differs from pi_{r} X")
        levels.append(p)
    rep.metrics["heights"] = [p.target.n for p in levels]
    return Tower(levels, rep)


def _same_partition(a: np.ndarray, b: np.ndarray) -> bool:
    return np.array_equal(Partition.from_labels(np.asarray(a)).block_of,
                          Partition.from_labels(np.asarray(b)).block_of)


def fiber_surjectivity(f: CubespaceMap, up_to: int | None = None) -> Report:
    """For a fibration of nilspaces: the image of every ``~_t`` class of the
    source is a whole ``~_t`` class of the target."""
    X, Y = f.source, f.target
    require_nilspace(X)
    require_nilspace(Y)
    top = min(X.k_max, Y.k_max) - 1 if up_to is None else up_to
    rep = Report("fiber-surjectivity")
    for t in range(0, top + 1):
        px = canonical_relation(X, t)
        py = canonical_relation(Y, t)
        for block in px.blocks:
            img = set(f.mapping[list(block)].tolist())
            target = set(py.blocks[py.block_of[next(iter(img))]])
            if img != target:
                rep.add("class-not-onto", f"t={t} class {px.label(X, px.block_of[block[0]])}",
                        f"image misses {len(target - img)} points" if img < target else "image spans classes")
    return rep
