"""Host-Kra cube groups of a filtered group.

``HK^k(G)`` is the subgroup of ``G^(2^k)`` generated by the configurations
``[x]_{F_S}`` equal to ``x`` on the upper face ``F_S`` and ``id`` elsewhere,
for ``x`` in ``G_{|S|}``.  Membership is decided through face coordinates:
listing subsets in :func:`~nilcube.cube.canonical_subset_order` as
``S_1, ..., S_{2^k}``, every configuration factors uniquely as the ordered
product of ``[x_i]_{F_{S_i}}``, and it is a Host-Kra cube exactly when each
``x_i`` lies in ``G_{|S_i|}``.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Sequence

from .cube import (
    DimensionError,
    canonical_subset_order,
    config_dim,
    corner_dim,
    lower_faces,
    popcount,
    restrict,
)
from .groups import Element, FilteredGroup

MAX_HK_DIM = 12


class CornerError(ValueError):
    """A corner whose lower faces are not all cubes."""

    def __init__(self, face_index: int, witness):
        self.face_index = face_index
        self.witness = witness
        super().__init__(
            f"lower face omega_{face_index + 1} = 0 is not a cube "
            f"(face coordinate at {witness[0]} fails)"
        )


def _check_k(k: int) -> None:
    if k > MAX_HK_DIM:
        raise DimensionError(f"refusing Host-Kra computations in dimension {k} > {MAX_HK_DIM}")


@lru_cache(maxsize=None)
def _plan(k: int):
    """Per position ``i`` of the canonical order: the subset, and the positions
    ``j < i`` of its proper subsets, in order."""
    order = canonical_subset_order(k)
    plan = []
    for i, s in enumerate(order):
        subs = tuple(j for j in range(i) if order[j] & s == order[j])
        plan.append((s, subs))
    return order, tuple(plan)


@dataclass(frozen=True)
class FaceCoordinates:
    """``coords[i]`` belongs to the ``i``-th subset of the canonical order."""

    k: int
    coords: tuple

    @property
    def subsets(self) -> tuple[int, ...]:
        return canonical_subset_order(self.k)

    def by_subset(self) -> dict[int, Element]:
        return dict(zip(self.subsets, self.coords))


@dataclass(frozen=True)
class Membership:
    ok: bool
    witness: tuple | None = None  # (subset mask, face coordinate) of the first failure

    def __bool__(self) -> bool:
        return self.ok


def face_coordinates(config: Sequence, G: FilteredGroup) -> FaceCoordinates:
    """Face coordinates of a configuration (``2**k`` entries in mask order)."""
    k = config_dim(config)
    _check_k(k)
    _, plan = _plan(k)
    xs: list = []
    for s, subs in plan:
        partial = G.prod(xs[j] for j in subs)
        xs.append(G.ldiv(partial, config[s]))
    return FaceCoordinates(k, tuple(xs))


def vertex_coordinates(fc: FaceCoordinates, G: FilteredGroup) -> tuple:
    """Inverse of :func:`face_coordinates`: ``g_w`` is the ordered product of
    the ``x_i`` with ``S_i`` contained in ``w``."""
    k = fc.k
    _check_k(k)
    order, plan = _plan(k)
    pos = {s: i for i, s in enumerate(order)}
    out = [None] * (1 << k)
    for w in range(1 << k):
        i = pos[w]
        _, subs = plan[i]
        out[w] = G.prod([*(fc.coords[j] for j in subs), fc.coords[i]])
    return tuple(out)


def first_bad_coordinate(fc: FaceCoordinates, G: FilteredGroup) -> tuple | None:
    for s, x in zip(fc.subsets, fc.coords):
        if not G.member(x, popcount(s)):
            return (s, x)
    return None


def hk_membership(config: Sequence, G: FilteredGroup) -> Membership:
    fc = face_coordinates(config, G)
    bad = first_bad_coordinate(fc, G)
    return Membership(bad is None, bad)


def is_hk_cube(config: Sequence, G: FilteredGroup) -> bool:
    return hk_membership(config, G).ok


def check_lower_faces(corner: Sequence, G: FilteredGroup,
                      member: Callable[[Sequence], Membership] | None = None) -> int:
    """Validate a corner's lower faces; return the dimension ``k``."""
    k = corner_dim(corner)
    if k == 0:
        raise DimensionError("a 0-dimensional corner has nothing to complete")
    padded = tuple(corner) + (None,)
    test = member or (lambda c: hk_membership(c, G))
    for i, face in enumerate(lower_faces(k)):
        verdict = test(restrict(padded, face))
        if not verdict.ok:
            raise CornerError(i, verdict.witness)
    return k


def hk_corner_complete(corner: Sequence, G: FilteredGroup) -> Element:
    """Value at the all-ones vertex making the corner a Host-Kra cube.

    Every face coordinate except the last is determined by the corner; the
    last one is set to the identity.  At ``k = degree + 1`` this is the only
    completion.
    """
    k = check_lower_faces(corner, G)
    _check_k(k)
    _, plan = _plan(k)
    xs: list = []
    for s, subs in plan[:-1]:
        partial = G.prod(xs[j] for j in subs)
        xs.append(G.ldiv(partial, corner[s]))
    return G.prod(xs)


def complete(corner: Sequence, G: FilteredGroup) -> tuple:
    return tuple(corner) + (hk_corner_complete(corner, G),)


# -- generators and sampling -------------------------------------------------


def face_generator(k: int, subset: int, x: Element, G: FilteredGroup) -> tuple:
    """The configuration ``[x]_{F_S}``: ``x`` on the upper face of ``S``."""
    e = G.identity()
    return tuple(x if w & subset == subset else e for w in range(1 << k))


def pointwise_mul(a: Sequence, b: Sequence, G: FilteredGroup) -> tuple:
    return tuple(G.mul(u, v) for u, v in zip(a, b))


def random_face_coordinates(G: FilteredGroup, k: int, rng: random.Random) -> FaceCoordinates:
    order = canonical_subset_order(k)
    return FaceCoordinates(k, tuple(G.random(rng, popcount(s)) for s in order))


def random_hk_cube(G: FilteredGroup, k: int, rng: random.Random) -> tuple:
    return vertex_coordinates(random_face_coordinates(G, k, rng), G)


def random_generator_product(G: FilteredGroup, k: int, rng: random.Random,
                             length: int = 8) -> tuple:
    """Product of ``length`` random generators ``[x]_{F_S}`` in random order."""
    out = tuple([G.identity()] * (1 << k))
    for _ in range(length):
        s = rng.randrange(1 << k)
        gen = face_generator(k, s, G.random(rng, popcount(s)), G)
        out = pointwise_mul(out, gen, G)
    return out


def alternating_sum(values: Sequence, G: FilteredGroup) -> Element:
    """``sum (-1)^|w| c(w)`` in an abelian group."""
    if not G.abelian:
        raise TypeError("alternating sums need an abelian group")
    acc = G.identity()
    for w, v in enumerate(values):
        acc = G.div(acc, v) if popcount(w) & 1 else G.mul(acc, v)
    return acc


# -- homomorphisms ----------------------------------------------------------


@dataclass
class HomomorphismReport:
    checked: int
    level_failures: list  # (element, i) with tau(g) outside H_i
    cube_failures: list  # configurations whose image is not a cube

    @property
    def ok(self) -> bool:
        return not self.level_failures and not self.cube_failures


def induced_homomorphism_check(tau: Callable[[Element], Element], G: FilteredGroup,
                               H: FilteredGroup, configs: Iterable[Sequence]) -> HomomorphismReport:
    """Check that pointwise ``tau`` sends Host-Kra cubes of ``G`` to cubes of ``H``.

    Configurations that are not cubes of ``G`` are skipped.  Each vertex
    value is also checked for ``tau(G_i) <= H_i``.
    """
    level_bad: list = []
    cube_bad: list = []
    seen: set = set()
    n = 0
    for c in configs:
        c = tuple(c)
        if not hk_membership(c, G).ok:
            continue
        n += 1
        for g in c:
            if g in seen:
                continue
            seen.add(g)
            img = tau(g)
            for i in range(G.degree + 2):
                if G.member(g, i) and not H.member(img, i):
                    level_bad.append((g, i))
        image = tuple(tau(g) for g in c)
        if not hk_membership(image, H).ok:
            cube_bad.append(c)
    return HomomorphismReport(n, level_bad, cube_bad)

