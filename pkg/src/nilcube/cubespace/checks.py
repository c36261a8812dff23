"""Axiom and property checks on finite cubespaces and maps between them."""

from __future__ import annotations

import math
from typing import Mapping, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from ..cube import (
    CubeMorphism,
    DimensionError,
    Face,
    all_morphisms,
    faces,
    generating_morphisms,
    is_downward_closed,
    popcount,
    submasks,
)
from ..nilmanifold import InconsistencyError
from ..report import Report
from .space import (
    AXIOMS,
    COMPLETION,
    GLUEING,
    CertificationRequired,
    CubespaceError,
    CubespaceMap,
    FiniteCubespace,
    lookup,
    point_dtype,
    row_keys,
)

ERGODIC = "ergodic"
UNIQUENESS = "uniqueness"


class NotAMorphism(CubespaceError):
    pass


# -- morphism closure ----------------------------------------------------------


def _morphisms_for(k_max: int, exhaustive: bool):
    if not exhaustive:
        yield from generating_morphisms(k_max)
        return
    seen = set()
    for k_in in range(k_max + 1):
        for k_out in range(k_max + 1):
            for rho in all_morphisms(k_in, k_out):
                key = (k_in, k_out, rho.table())
                if key not in seen:
                    seen.add(key)
                    yield rho


def describe_morphism(rho: CubeMorphism) -> str:
    parts = [tag if j is None else tag.replace("x", f"x{j + 1}") for tag, j in rho.coords]
    return f"{{0,1}}^{rho.k_in}->{{0,1}}^{rho.k_out}[{','.join(parts)}]"


def certify_cubespace(X: FiniteCubespace, exhaustive: bool = False, limit: int = 20) -> Report:
    """Closure of the cube sets under morphisms of discrete cubes.

    By default only a generating set of morphisms is used; since every
    morphism between dimensions ``<= k_max`` factors through generators
    without leaving that range, this is equivalent to checking all of them.
    ``exhaustive=True`` checks every morphism instead.
    """
    rep = Report("cubespace-axioms", limit=limit)
    checked = 0
    for rho in _morphisms_for(X.k_max, exhaustive):
        src = X.cubes[rho.k_out]
        if len(src) == 0:
            continue
        pulled = src[:, list(rho.table())]
        found = X.contains(rho.k_in, pulled)
        checked += 1
        if not found.all():
            bad = np.flatnonzero(~found)
            examples = [(describe_morphism(rho), f"cube {X.fmt(src[i])} pulls back to {X.fmt(pulled[i])}")
                        for i in bad[: max(0, limit - len(rep.items))]]
            rep.add_many("missing-pullback", len(bad), examples)
    rep.metrics["morphisms_checked"] = checked
    rep.metrics["mode"] = "exhaustive" if exhaustive else "generators"
    return rep


# -- corners, completion, uniqueness -------------------------------------------


def _lower_face_vertices(k: int) -> list[list[int]]:
    return [Face(k, 1 << i, 0).vertices() for i in range(k)]


def _join(P: np.ndarray, pcols: list[int], C: np.ndarray, ccols: list[int], n: int):
    """Pairs (row of P, row of C) agreeing on the given columns."""
    ck = row_keys(C[:, ccols], n)
    order = np.argsort(ck, kind="stable")
    ck = ck[order]
    pk = row_keys(P[:, pcols], n)
    lo = np.searchsorted(ck, pk, side="left")
    hi = np.searchsorted(ck, pk, side="right")
    cnt = hi - lo
    total = int(cnt.sum())
    prow = np.repeat(np.arange(len(P)), cnt)
    start = np.repeat(lo - (np.cumsum(cnt) - cnt), cnt)
    crow = order[start + np.arange(total)]
    return prow, crow


def enumerate_corners(X: FiniteCubespace, k: int) -> np.ndarray:
    """All k-corners: configurations on {0,1}^k minus the top vertex whose
    lower faces are (k-1)-cubes.  Columns are vertices ``0..2^k-2``."""
    if not 1 <= k <= X.k_max:
        raise DimensionError(f"corners need 1 <= k <= k_max = {X.k_max}")
    C = X.cubes[k - 1]
    nv = (1 << k) - 1
    assigned = np.zeros(nv, dtype=bool)
    P = None
    for verts in _lower_face_vertices(k):
        if P is None:
            P = np.zeros((len(C), nv), dtype=C.dtype)
            P[:, verts] = C
        else:
            overlap = [j for j, v in enumerate(verts) if assigned[v]]
            fresh = [j for j, v in enumerate(verts) if not assigned[v]]
            prow, crow = _join(P, [verts[j] for j in overlap], C, overlap, X.n)
            P = P[prow]
            if fresh:
                P[:, [verts[j] for j in fresh]] = C[crow][:, fresh]
        assigned[verts] = True
    return P


def _corner_keys(X: FiniteCubespace, k: int) -> np.ndarray:
    return row_keys(X.cubes[k][:, :-1], X.n)


def check_completion(X: FiniteCubespace, k: int, limit: int = 20) -> Report:
    if not 1 <= k <= X.k_max:
        raise DimensionError(f"completion needs 1 <= k <= k_max = {X.k_max}")
    rep = Report(f"completion-{k}", limit=limit)
    corners = enumerate_corners(X, k)
    have = np.unique(_corner_keys(X, k))
    _, found = lookup(have, row_keys(corners, X.n))
    bad = np.flatnonzero(~found)
    rep.add_many("uncompletable-corner", len(bad),
                 [(X.fmt(corners[i]), "") for i in bad[:limit]])
    rep.metrics["corners"] = int(len(corners))
    return rep


def check_uniqueness(X: FiniteCubespace, k: int, limit: int = 20) -> Report:
    if not 1 <= k <= X.k_max:
        raise DimensionError(f"uniqueness needs 1 <= k <= k_max = {X.k_max}")
    rep = Report(f"uniqueness-{k}", limit=limit)
    ck = _corner_keys(X, k)
    order = np.argsort(ck, kind="stable")
    sk = ck[order]
    dup = np.flatnonzero(sk[1:] == sk[:-1])
    cubes = X.cubes[k]
    examples = []
    for d in dup[:limit]:
        a, b = cubes[order[d]], cubes[order[d + 1]]
        examples.append((X.fmt(a[:-1]), f"tops {X.labels[a[-1]]} and {X.labels[b[-1]]}"))
    rep.add_many("two-completions", len(dup), examples)
    return rep


def check_ergodic(X: FiniteCubespace, k: int = 1) -> Report:
    """Every configuration of dimension ``k`` is a cube."""
    rep = Report(f"ergodic-{k}")
    full = X.n ** (1 << k)
    have = X.count(k)
    rep.metrics["cubes"] = have
    rep.metrics["configurations"] = full
    if have != full:
        rep.add("missing-cubes", f"dimension {k}", f"{full - have} configurations are not cubes")
    return rep


def _transitivity_violations(src: np.ndarray, dst: np.ndarray, nodes: np.ndarray | None,
                             limit: int) -> list[tuple[int, int, int]]:
    """Triples a -> b -> c with a -> c missing, searching through ``nodes``."""
    rel = set(zip(src.tolist(), dst.tolist()))
    outs: dict[int, list[int]] = {}
    ins: dict[int, list[int]] = {}
    for a, b in rel:
        outs.setdefault(a, []).append(b)
        ins.setdefault(b, []).append(a)
    found = []
    middle = ins.keys() if nodes is None else nodes.tolist()
    for b in middle:
        for a in ins.get(b, ()):
            for c in outs.get(b, ()):
                if (a, c) not in rel:
                    found.append((a, b, c))
                    if len(found) >= limit:
                        return found
    return found


def check_glueing(X: FiniteCubespace, k: int, limit: int = 20) -> Report:
    """Glueing two k-cubes along a common (k-1)-face yields a k-cube.

    With ``c = [bottom, top]`` split along the last coordinate this is
    transitivity of the relation ``bottom -> top`` on (k-1)-configurations.
    When the relation is reflexive and symmetric, transitivity is checked by
    requiring every connected component to be complete.
    """
    if not 1 <= k <= X.k_max:
        raise DimensionError(f"glueing needs 1 <= k <= k_max = {X.k_max}")
    rep = Report(f"glueing-{k}", limit=limit)
    cubes = X.cubes[k]
    half = 1 << (k - 1)
    bk = row_keys(cubes[:, :half], X.n)
    tk = row_keys(cubes[:, half:], X.n)
    nodes, inv = np.unique(np.concatenate([bk, tk]), return_inverse=True)
    src, dst = inv[: len(cubes)], inv[len(cubes):]
    m = len(nodes)
    pair = src.astype(np.int64) * m + dst
    pair_sorted = np.sort(pair)
    _, sym = lookup(pair_sorted, dst.astype(np.int64) * m + src)
    loops = np.zeros(m, dtype=bool)
    loops[src[src == dst]] = True
    touched = np.zeros(m, dtype=bool)
    touched[src] = True
    touched[dst] = True
    node_rows = None
    if sym.all() and loops[touched].all():
        graph = coo_matrix((np.ones(len(src), dtype=np.int8), (src, dst)), shape=(m, m))
        ncomp, label = connected_components(graph, directed=False)
        size = np.bincount(label, minlength=ncomp).astype(np.int64)
        edges = np.bincount(label[src], minlength=ncomp).astype(np.int64)
        bad_comp = np.flatnonzero(edges != size * size)
        rep.metrics["components"] = int(ncomp)
        if len(bad_comp) == 0:
            return rep
        node_rows = np.flatnonzero(np.isin(label, bad_comp))
    triples = _transitivity_violations(src, dst, node_rows, limit)
    if not triples:
        raise InconsistencyError("glueing check found incomplete components but no violating triple")
    rows = {}
    for i, (a, b) in enumerate(zip(src.tolist(), dst.tolist())):
        rows.setdefault(a, cubes[i, :half])
        rows.setdefault(b, cubes[i, half:])
    for a, b, c in triples:
        rep.add("glueing-fails", f"{X.fmt(rows[a])} | {X.fmt(rows[b])} | {X.fmt(rows[c])}",
                "outer halves do not form a cube")
    if node_rows is None:
        rep.metrics["relation"] = "not reflexive/symmetric"
    return rep


# -- certification ----------------------------------------------------------------


def uniqueness_degree(X: FiniteCubespace) -> int | None:
    """Smallest ``s`` with (s+1)-uniqueness inside the stored range, if any."""
    for k in range(1, X.k_max + 1):
        if check_uniqueness(X, k, limit=1).ok:
            return k - 1
    return None


def certify_nilspace(X: FiniteCubespace, exhaustive: bool = False) -> tuple[FiniteCubespace, Report]:
    """Run every structural check and record what passed on a copy of ``X``.

    Records ``axioms``, ``completion`` (k-completion for all stored k),
    ``glueing``, ``ergodic`` and the degree: the least ``s`` with
    (s+1)-uniqueness, set only on fibrant spaces satisfying the axioms.
    """
    rep = Report("certify")
    props = []
    ax = certify_cubespace(X, exhaustive=exhaustive)
    rep.merge(ax, "axioms")
    if ax.ok:
        props.append(AXIOMS)
    comp_ok = True
    glue_ok = True
    for k in range(1, X.k_max + 1):
        c = check_completion(X, k)
        rep.merge(c, f"completion-{k}")
        comp_ok &= c.ok
        g = check_glueing(X, k)
        rep.merge(g, f"glueing-{k}")
        glue_ok &= g.ok
    if comp_ok:
        props.append(COMPLETION)
    if glue_ok:
        props.append(GLUEING)
    if X.k_max >= 1 and check_ergodic(X, 1).ok:
        props.append(ERGODIC)
    degree = uniqueness_degree(X)
    rep.metrics["degree"] = degree if degree is not None else f"> {X.k_max - 1}"
    rep.metrics["ergodic"] = ERGODIC in props
    cert_degree = degree if (AXIOMS in props and COMPLETION in props and degree is not None) else None
    if cert_degree is not None:
        props.append(UNIQUENESS)
    return X.with_certificates(props, cert_degree), rep


def require_nilspace(X: FiniteCubespace) -> None:
    X.require(AXIOMS, COMPLETION, GLUEING)
    if X.certified_degree is None:
        raise CertificationRequired("cubespace has no certified degree")


# -- maps ---------------------------------------------------------------------


def check_morphism(f: CubespaceMap, up_to_k: int | None = None, limit: int = 20) -> Report:
    X, Y = f.source, f.target
    top = min(X.k_max, Y.k_max) if up_to_k is None else up_to_k
    rep = Report("morphism", limit=limit)
    for k in range(1, top + 1):
        img = f.apply(X.cubes[k])
        ok = Y.contains(k, img)
        bad = np.flatnonzero(~ok)
        rep.add_many("image-not-cube", len(bad),
                     [(X.fmt(X.cubes[k][i]), f"maps to {Y.fmt(img[i])}") for i in bad[:limit]])
    return rep


def check_fibration(f: CubespaceMap, up_to_k: int | None = None, limit: int = 20) -> Report:
    """Every corner of X whose image extends to a cube of Y extends compatibly.

    Raises :class:`NotAMorphism` when ``f`` does not map cubes to cubes.
    ``k = 0`` is surjectivity.
    """
    X, Y = f.source, f.target
    top = min(X.k_max, Y.k_max) if up_to_k is None else up_to_k
    if top > min(X.k_max, Y.k_max):
        raise DimensionError("fibration check beyond stored cubes")
    mor = check_morphism(f, top)
    if not mor.ok:
        raise NotAMorphism(f"not a cubespace morphism: {mor.items[0]}")
    rep = Report("fibration", limit=limit)
    missing = np.setdiff1d(np.arange(Y.n), f.mapping)
    rep.add_many("not-surjective", len(missing),
                 [(Y.labels[y], "has no preimage") for y in missing[:limit]])
    for k in range(1, top + 1):
        corners = enumerate_corners(X, k)
        if len(corners) == 0:
            continue
        img = f.apply(corners)
        # Y-cubes over each corner image
        ycub = Y.cubes[k]
        yprow, ycrow = _join(img, list(range(img.shape[1])), ycub, list(range(img.shape[1])), Y.n)
        need = yprow.astype(np.int64) * Y.n + ycub[ycrow, -1]
        # X-completions of each corner
        xcub = X.cubes[k]
        xprow, xcrow = _join(corners, list(range(corners.shape[1])), xcub,
                             list(range(corners.shape[1])), X.n)
        have = np.unique(xprow.astype(np.int64) * Y.n + f.mapping[xcub[xcrow, -1]])
        _, ok = lookup(have, need)
        bad = np.flatnonzero(~ok)
        examples = []
        for i in bad[:limit]:
            lam = corners[yprow[i]]
            examples.append((f"k={k} corner {X.fmt(lam)}", f"target top {Y.labels[ycub[ycrow[i], -1]]} unreachable"))
        rep.add_many("no-compatible-completion", len(bad), examples)
        rep.metrics[f"corners_{k}"] = int(len(corners))
    rep.metrics["checked_up_to_k"] = top
    return rep


def relative_uniqueness_degree(f: CubespaceMap) -> int | None:
    """Least ``s`` such that two (s+1)-cubes agreeing off the top vertex and
    with tops in the same fiber coincide; ``None`` if none is found."""
    X = f.source
    width = max(X.n, f.target.n)
    for k in range(1, X.k_max + 1):
        cubes = X.cubes[k]
        rows = np.concatenate([cubes[:, :-1].astype(np.int64),
                               f.mapping[cubes[:, -1]][:, None]], axis=1)
        key = row_keys(rows, width)
        if len(np.unique(key)) == len(key):
            return k - 1
    return None


def check_relative_ergodicity(f: CubespaceMap, s: int) -> Report:
    """For ``1 <= l <= s``: every configuration over a cube of Y is a cube of X."""
    X, Y = f.source, f.target
    rep = Report(f"relative-ergodic-{s}")
    sizes = np.bincount(f.mapping, minlength=Y.n).astype(object)
    for k in range(1, s + 1):
        if k > min(X.k_max, Y.k_max):
            raise DimensionError("relative ergodicity beyond stored cubes")
        expected = sum(math.prod(int(sizes[y]) for y in row) for row in Y.cubes[k])
        have = X.count(k)
        if have != expected:
            rep.add("missing-cubes", f"dimension {k}", f"{expected - have} configurations over cubes are not cubes")
    return rep


# -- higher cubes, tri-cubes, lifting ------------------------------------------


def high_cube_membership(X: FiniteCubespace, config: Sequence, f: CubespaceMap | None = None) -> bool:
    """Membership for any dimension from the certified degree.

    A configuration is a cube iff every (s+1)-dimensional face is; with a
    map ``f`` its image must moreover be a cube of the target.
    """
    if X.certified_degree is None:
        raise CertificationRequired("high-dimensional membership needs a certified degree")
    idx = np.array([c if isinstance(c, (int, np.integer)) else X.index(c) for c in config])
    k = len(idx).bit_length() - 1
    if 1 << k != len(idx):
        raise DimensionError("configuration length is not a power of two")
    if k > 12:
        raise DimensionError("refusing dimensions above 12")
    if f is not None:
        image = f.mapping[idx]
        Y = f.target
        if Y.certified_degree is not None:
            if not high_cube_membership(Y, image):
                return False
        elif k > Y.k_max or not Y.contains(k, image[None])[0]:
            return False
    s = X.certified_degree
    if k <= s + 1 and k <= X.k_max:
        return bool(X.contains(k, idx[None])[0])
    d = min(s + 1, X.k_max)
    rows = np.array([idx[face.vertices()] for face in faces(k, d)])
    return bool(X.contains(d, rows).all())


def tricube_outer(pieces: Mapping[int, Sequence] | Sequence[Sequence], X: FiniteCubespace) -> tuple:
    """Outer cube ``w -> t_w(0)`` of a tri-cube, checked to be a cube."""
    X.require(GLUEING)
    if isinstance(pieces, Mapping):
        pieces = [pieces[v] for v in range(len(pieces))]
    t = np.array([[p if isinstance(p, (int, np.integer)) else X.index(p) for p in row] for row in pieces])
    nv = len(t)
    k = nv.bit_length() - 1
    if 1 << k != nv or t.shape[1] != nv:
        raise DimensionError("a tri-cube has 2^k pieces of 2^k vertices")
    if k > X.k_max:
        raise DimensionError("tri-cube dimension above k_max")
    ok = X.contains(k, t)
    if not ok.all():
        raise CubespaceError(f"piece {int(np.flatnonzero(~ok)[0])} is not a cube")
    full = nv - 1
    for nu in range(nv):
        for nu2 in range(nu + 1, nv):
            diff = nu ^ nu2
            for w in range(nv):
                # compatible positions: every differing coordinate has w_i = 1
                if diff & ~w & full == 0 and t[nu, w] != t[nu2, w]:
                    raise CubespaceError(f"pieces {nu} and {nu2} disagree at vertex {w}")
    outer = t[np.arange(nv), 0]
    if not X.contains(k, outer[None])[0]:
        raise InconsistencyError("outer cube of a tri-cube is not a cube despite glueing")
    return tuple(X.labels[i] for i in outer)


def lift_partial(f: CubespaceMap, A: Mapping[int, int], B: Mapping[int, int], k: int) -> dict[int, int]:
    """Extend ``A`` (on a down-set S) to the down-set T of ``B`` over ``f``.

    Vertices of ``T`` outside ``S`` are filled in increasing size; each new
    value is the first point of the right fiber completing the sub-cube below
    it.  Raises :class:`CubespaceError` when a step has no solution.
    """
    X = f.source
    S, T = set(A), set(B)
    if not S <= T or not is_downward_closed(S, k) or not is_downward_closed(T, k):
        raise CubespaceError("need down-sets S within T")
    out = dict(A)
    for w in sorted(T - S, key=lambda m: (popcount(m), m)):
        d = popcount(w)
        if d > X.k_max:
            raise DimensionError("sub-cube above k_max")
        subs = submasks(w)  # increasing, so index j of subs is the local vertex j
        fiber = np.flatnonzero(f.mapping == B[w])
        if len(fiber) == 0:
            raise CubespaceError(f"no point over {f.target.labels[B[w]]}")
        base = np.array([out[v] for v in subs[:-1]], dtype=np.int64)
        cand = np.concatenate([np.tile(base, (len(fiber), 1)), fiber[:, None]], axis=1)
        ok = X.contains(d, cand.astype(point_dtype(X.n)))
        if not ok.any():
            raise CubespaceError(f"vertex {w} cannot be filled")
        out[w] = int(fiber[np.flatnonzero(ok)[0]])
    return out
