"""Structure groups of fibrations of finite nilspaces.

For a fibration ``f: X -> Y`` of degree at most ``s`` the pairs ``[x, x']``
with ``f(x) = f(x')`` are grouped by the relation
``[x, x'] ~ [y, y']  iff  [L(x;x'), L(y;y')]`` is an (s+1)-cube, where
``L(x;x')`` is the s-configuration equal to ``x`` except ``x'`` at the top.
The classes form an abelian group acting freely on each fiber.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from ..nilmanifold import InconsistencyError
from ..report import Report
from .canonical import _equivalence_partition
from .checks import (
    check_fibration,
    check_relative_ergodicity,
    certify_nilspace,
    relative_uniqueness_degree,
    require_nilspace,
)
from .space import (
    CubespaceError,
    CubespaceMap,
    FiniteCubespace,
    constant_map,
    point_dtype,
    row_keys,
)


class PreconditionError(CubespaceError):
    pass


@dataclass
class StructureGroupResult:
    """The group ``A`` as classes of pairs, with its table and action.

    Element ``i`` is represented by the pair ``[base, representatives[i]]``;
    ``action[i, x]`` is the image of point ``x`` under element ``i``.
    """

    s: int
    base: int
    representatives: list[int]
    classes: list[list[tuple[int, int]]]
    table: np.ndarray
    identity: int
    action: np.ndarray
    invariant_factors: tuple[int, ...]
    labels: list[str]
    report: Report = field(default_factory=lambda: Report("structure-group"))

    @property
    def order(self) -> int:
        return len(self.table)

    def add(self, a: int, b: int) -> int:
        return int(self.table[a, b])

    def negate(self, a: int) -> int:
        return int(np.flatnonzero(self.table[a] == self.identity)[0])

    def multiple(self, a: int, m: int) -> int:
        out = self.identity
        for _ in range(m):
            out = int(self.table[out, a])
        return out

    def element_order(self, a: int) -> int:
        m, cur = 1, a
        while cur != self.identity:
            cur = int(self.table[cur, a])
            m += 1
        return m

    @property
    def isomorphism_type(self) -> str:
        if not self.invariant_factors:
            return "0"
        return " x ".join(f"Z/{d}" for d in self.invariant_factors)


def _corner_rows(x: np.ndarray, x2: np.ndarray, s: int) -> np.ndarray:
    rows = np.repeat(x.reshape(-1, 1), 1 << s, axis=1)
    rows[:, -1] = x2
    return rows


def _relation_matrix(X: FiniteCubespace, pairs: np.ndarray, s: int) -> np.ndarray:
    m = len(pairs)
    half = _corner_rows(pairs[:, 0], pairs[:, 1], s)
    left = np.repeat(half, m, axis=0)
    right = np.tile(half, (m, 1))
    rows = np.concatenate([left, right], axis=1).astype(point_dtype(X.n))
    return X.contains(s + 1, rows).reshape(m, m)


def check_preconditions(f: CubespaceMap, s: int) -> Report:
    """Everything a structure group needs, as one report."""
    X, Y = f.source, f.target
    rep = Report("structure-preconditions")
    for name, Z in (("source", X), ("target", Y)):
        try:
            require_nilspace(Z)
        except CubespaceError as exc:
            rep.add("not-certified", name, str(exc))
    if s < 0 or s + 1 > min(X.k_max, Y.k_max):
        rep.add("dimension", f"s={s}", "needs s+1 <= k_max of both spaces")
        return rep
    if not rep.ok:
        return rep
    rep.merge(check_fibration(f), "fibration")
    if not rep.ok:
        return rep
    rep.merge(check_relative_ergodicity(f, s), "relative-ergodicity")
    deg = relative_uniqueness_degree(f)
    rep.metrics["relative_degree"] = deg if deg is not None else f"> {X.k_max - 1}"
    if deg is None or deg > s:
        rep.add("degree", f"s={s}", f"relative degree {rep.metrics['relative_degree']} exceeds s")
    return rep


def _prime_factors(n: int) -> dict[int, int]:
    out: dict[int, int] = {}
    p = 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def invariant_factors(table: np.ndarray, identity: int) -> tuple[int, ...]:
    """Invariant factors ``d_1 | d_2 | ...`` of a finite abelian group table,
    from the sizes of its ``p^j``-torsion subgroups."""
    n = len(table)
    if n == 1:
        return ()
    # multiples[m][a] = m * a
    def times(vec: np.ndarray, m: int) -> np.ndarray:
        out = np.full(n, identity)
        base = vec.copy()
        while m:
            if m & 1:
                out = table[out, base]
            base = table[base, base]
            m >>= 1
        return out

    elems = np.arange(n)
    # cyclic factor exponents per prime: counts[j] = #factors of order >= p^j
    per_prime: dict[int, list[int]] = {}
    for p, e in _prime_factors(n).items():
        sizes = [1]
        for j in range(1, e + 1):
            sizes.append(int((times(elems, p ** j) == identity).sum()))
        at_least = [round(math.log(sizes[j] // sizes[j - 1], p)) for j in range(1, e + 1)]
        exps = []
        for j in range(e, 0, -1):
            count = at_least[j - 1] - (at_least[j] if j < e else 0)
            exps += [j] * count
        per_prime[p] = sorted(exps, reverse=True)
    width = max(len(v) for v in per_prime.values())
    factors = []
    for i in range(width):
        d = 1
        for p, exps in per_prime.items():
            if i < len(exps):
                d *= p ** exps[i]
        factors.append(d)
    return tuple(sorted(factors))


def _abelian_report(table: np.ndarray, identity: int) -> Report:
    rep = Report("abelian-group")
    n = len(table)
    idx = np.arange(n)
    if not (table[identity] == idx).all() or not (table[:, identity] == idx).all():
        rep.add("identity", "table", "identity class is not neutral")
    if not np.array_equal(table, table.T):
        a, b = np.argwhere(table != table.T)[0]
        rep.add("commutativity", f"({a}, {b})")
    for a in range(n):
        if not (table[a] == identity).any():
            rep.add("inverse", f"{a}")
        row = np.sort(table[a])
        if not np.array_equal(row, idx):
            rep.add("latin", f"row {a}")
    left = table[table[:, :, None], idx[None, None, :]]  # (a+b)+c
    right = table[idx[:, None, None], table[None, :, :]]  # a+(b+c)
    bad = np.argwhere(left != right)
    for a, b, c in bad[:5]:
        rep.add("associativity", f"({a}, {b}, {c})")
    rep.omitted += max(0, len(bad) - 5)
    return rep


def structure_group(f: CubespaceMap | FiniteCubespace, s: int, base: int = 0,
                    check_cubes: bool = True) -> StructureGroupResult:
    """The structure group of a fibration of degree at most ``s``.

    Given a cubespace instead of a map, the map to a point is used.
    """
    if isinstance(f, FiniteCubespace):
        point = constant_map(f).target
        point, _ = certify_nilspace(point)
        f = CubespaceMap(f, point, np.zeros(f.n, dtype=np.int64))
    X = f.source
    pre = check_preconditions(f, s)
    if not pre.ok:
        raise PreconditionError(f"structure group preconditions fail: {pre.items[0] if pre.items else pre.name}")
    img = f.mapping
    pairs = np.array([(x, y) for x in range(X.n) for y in np.flatnonzero(img == img[x])], dtype=np.int64)
    R = _relation_matrix(X, pairs, s)
    part = _equivalence_partition(R, "pair relation")
    cls = part.block_of
    ncls = len(part)
    # action[c, x] = the unique x' with [x, x'] in class c
    action = np.full((ncls, X.n), -1, dtype=np.int64)
    for (x, y), c in zip(pairs.tolist(), cls.tolist()):
        if action[c, x] != -1:
            raise InconsistencyError(f"class {c} sends point {X.labels[x]} to two points")
        action[c, x] = y
    if (action < 0).any():
        c, x = np.argwhere(action < 0)[0]
        raise InconsistencyError(f"class {c} does not act on point {X.labels[x]}")
    ident = {int(cls[i]) for i, (x, y) in enumerate(pairs.tolist()) if x == y}
    if len(ident) != 1:
        raise InconsistencyError("the pairs [x, x] fall into several classes")
    identity = ident.pop()
    fiber = np.flatnonzero(img == img[base])
    reps = [int(action[c, base]) for c in range(ncls)]
    if sorted(reps) != sorted(fiber.tolist()):
        raise InconsistencyError("classes do not match the base fiber one to one")
    # [x, a.x] + [a.x, b.(a.x)] = [x, b.(a.x)]
    pair_index = {p: i for i, p in enumerate(map(tuple, pairs.tolist()))}
    table = np.zeros((ncls, ncls), dtype=np.int64)
    for a in range(ncls):
        ax = action[a]
        for b in range(ncls):
            bax = action[b, ax]
            got = {int(cls[pair_index[(x, int(bax[x]))]]) for x in range(X.n)}
            if len(got) != 1:
                raise InconsistencyError(f"sum of classes {a} and {b} depends on the representative")
            table[a, b] = got.pop()
    rep = Report("structure-group")
    rep.merge(_abelian_report(table, identity), "table")
    for a in range(ncls):
        for b in range(ncls):
            if not np.array_equal(action[table[a, b]], action[a, action[b]]):
                rep.add("action", f"({a}, {b})", "(a+b).x differs from a.(b.x)")
    if not rep.ok:
        raise InconsistencyError(f"structure group is not an abelian group action: {rep.items[0]}")
    factors = invariant_factors(table, identity)
    labels = [f"[{X.labels[base]},{X.labels[r]}]" for r in reps]
    classes = [[(int(x), int(y)) for x, y in pairs[cls == c]] for c in range(ncls)]
    result = StructureGroupResult(s, base, reps, classes, table, identity, action, factors, labels, rep)
    rep.metrics["order"] = ncls
    rep.metrics["isomorphism_type"] = result.isomorphism_type
    if check_cubes:
        rep.merge(relative_cubes_report(f, result), "cubes")
    return result


def relative_cubes_report(f: CubespaceMap, G: StructureGroupResult) -> Report:
    """Cubes over a fixed cube of the target differ by cubes of ``D_s(A)``.

    Checked as closure of ``C^k(X)`` under ``[b]_{F_S}`` for ``|S| <= s``
    together with the count ``|A|^(sum_{r<=s} C(k, r))`` of cubes over each
    target cube, which pins the lifts of each target cube to a single orbit.
    """
    X, Y = f.source, f.target
    s = G.s
    rep = Report("relative-cubes")
    for k in range(1, min(X.k_max, Y.k_max) + 1):
        cubes = X.cubes[k]
        nv = 1 << k
        for r in range(0, min(s, k) + 1):
            for S in combinations(range(k), r):
                mask = sum(1 << i for i in S)
                cols = [w for w in range(nv) if w & mask == mask]
                for b in range(G.order):
                    moved = cubes.copy()
                    moved[:, cols] = G.action[b][cubes[:, cols].astype(np.intp)]
                    ok = X.contains(k, moved)
                    if not ok.all():
                        i = int(np.flatnonzero(~ok)[0])
                        rep.add("not-closed", f"k={k} S={mask:b} b={G.labels[b]}",
                                f"{X.fmt(cubes[i])} -> {X.fmt(moved[i])}")
        expected = G.order ** sum(math.comb(k, r) for r in range(min(s, k) + 1))
        images = row_keys(f.apply(cubes), Y.n)
        _, counts = np.unique(images, return_counts=True)
        rep.metrics[f"lifts_{k}"] = expected
        if len(counts) != Y.count(k) or (counts != expected).any():
            rep.add("lift-count", f"k={k}", f"expected {expected} cubes over every target cube")
    return rep


def is_isomorphic_to_cyclic(G: StructureGroupResult, n: int) -> bool:
    """Brute force: some element generates and matches addition mod n."""
    if G.order != n:
        return False
    for g in range(n):
        powers = [G.identity]
        for _ in range(n - 1):
            powers.append(G.add(powers[-1], g))
        if len(set(powers)) != n:
            continue
        if all(G.add(powers[i], powers[j]) == powers[(i + j) % n] for i in range(n) for j in range(n)):
            return True
    return False
