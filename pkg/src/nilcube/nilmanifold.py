"""Cubes on the nilmanifolds ``(Q/Z)^d`` and ``H/Gamma``.

``H`` is the rational Heisenberg group and ``Gamma`` its integer points.  A
configuration of points of ``G/Gamma`` is a cube when it is the pointwise
image of a Host-Kra cube of ``G``.  Points are always stored as canonical
representatives of a fundamental domain, so equality of points is equality
of tuples.

For the Heisenberg quotient the test is explicit:

* ``k <= 2``: the x and y coordinates form parallelepipeds mod 1,
* ``k = 3``: additionally the alternating sum of the z coordinates equals
  :func:`heisenberg_cocycle` mod 1,
* ``k >= 4``: every 3-dimensional face passes the ``k = 3`` test.

Every positive verdict carries a lift to ``HK^k(H)`` that reduces back to
the input, built independently of the criterion above.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .cube import DimensionError, config_dim, faces, popcount, restrict
from .groups import (
    HEISENBERG,
    AbelianGroup,
    FilteredGroup,
    GroupParseError,
    Heis,
    frac,
    frac_part,
    rationals,
    torus,
)
from .hostkra import (
    CornerError,
    FaceCoordinates,
    Membership,
    check_lower_faces,
    face_coordinates,
    hk_corner_complete,
    hk_membership,
    random_hk_cube,
    vertex_coordinates,
)

MAX_NIL_DIM = 12


class InconsistencyError(RuntimeError):
    """Two independent computations disagreed; indicates a bug."""


class Nilmanifold:
    """Base class of the supported quotients ``G/Gamma``."""

    name = "nil"
    group: FilteredGroup
    degree: int

    def reduce(self, g):
        raise NotImplementedError

    def lattice_element(self, g) -> bool:
        raise NotImplementedError

    def format(self, p) -> str:
        raise NotImplementedError

    def parse(self, text: str):
        raise NotImplementedError

    def random_point(self, rng: random.Random):
        return self.reduce(self.group.random(rng))

    def coerce(self, value):
        return self.reduce(self.group.coerce(value))

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.name}>"


class TorusNilmanifold(Nilmanifold):
    """``Q^d / Z^d`` with per-coordinate filtration levels."""

    def __init__(self, *levels: int):
        levels = levels or (1,)
        self.levels = tuple(levels)
        self.group = rationals(*levels)
        self.quotient: AbelianGroup = torus(*levels)
        self.degree = max(levels)
        self.name = f"torus{list(levels)}"

    def reduce(self, g) -> tuple:
        return tuple(frac_part(frac(v)) for v in g)

    def lattice_element(self, g) -> bool:
        return all(frac(v).denominator == 1 for v in g)

    def format(self, p) -> str:
        return "tnil:" + ",".join(str(v) for v in p)

    def parse(self, text: str) -> tuple:
        pre, _, body = text.strip().partition(":")
        if pre.strip() != "tnil":
            raise GroupParseError(f"expected a tnil: point, got {text!r}")
        vals = tuple(frac(v) for v in body.split(","))
        if len(vals) != len(self.levels):
            raise GroupParseError(f"{text!r} should have {len(self.levels)} coordinates")
        if any(not 0 <= v < 1 for v in vals):
            raise GroupParseError(f"{text!r} is not a canonical representative")
        return vals


class HeisenbergNilmanifold(Nilmanifold):
    """``H/Gamma`` with fundamental domain ``[0,1)^3``."""

    name = "hnil"
    group = HEISENBERG
    degree = 2

    def reduce(self, g) -> Heis:
        x, y, z = (frac(v) for v in g)
        return Heis(frac_part(x), frac_part(y), frac_part(z - x * math.floor(y)))

    def lattice_element(self, g) -> bool:
        return all(frac(v).denominator == 1 for v in g)

    def format(self, p) -> str:
        return "hnil:" + ",".join(str(v) for v in p)

    def parse(self, text: str) -> Heis:
        pre, _, body = text.strip().partition(":")
        if pre.strip() != "hnil":
            raise GroupParseError(f"expected an hnil: point, got {text!r}")
        parts = body.split(",")
        if len(parts) != 3:
            raise GroupParseError(f"{text!r} should have three coordinates")
        p = Heis(*(frac(v) for v in parts))
        if any(not 0 <= v < 1 for v in p):
            raise GroupParseError(f"{text!r} is not a canonical representative")
        return p


HEIS_NIL = HeisenbergNilmanifold()


def reduce(g, parent: Nilmanifold):
    """Canonical representative of ``g Gamma``."""
    return parent.reduce(g)


@dataclass(frozen=True)
class NilCubeVerdict:
    is_cube: bool
    certificate: tuple | None = None  # a Host-Kra cube of G projecting onto the input
    violation: str | None = None

    @property
    def ok(self) -> bool:
        return self.is_cube

    @property
    def witness(self):
        return self.violation

    def __bool__(self) -> bool:
        return self.is_cube


# -- parallelepipeds mod 1 ---------------------------------------------------


def _mod1_face_defect(values: Sequence[Fraction]) -> tuple[int, Fraction] | None:
    """First 2-face whose alternating sum is not an integer, as (face index, sum)."""
    k = config_dim(values)
    for n, face in enumerate(faces(k, 2)):
        a, b, c, d = restrict(values, face)
        s = a - b - c + d
        if s.denominator != 1:
            return n, frac_part(s)
    return None


def is_parallelepiped_mod1(values: Sequence[Fraction]) -> bool:
    return _mod1_face_defect(values) is None


def affine_lift(values: dict[int, Fraction] | Sequence[Fraction], k: int) -> list[Fraction]:
    """The affine function on {0,1}^k agreeing with ``values`` at 0 and at the
    unit vectors (unit vectors missing from ``values`` get slope 0)."""
    get = values.get if isinstance(values, dict) else (lambda w: values[w] if w < len(values) else None)
    base = get(0)
    slopes = []
    for i in range(k):
        v = get(1 << i)
        slopes.append(Fraction(0) if v is None else v - base)
    return [base + sum(slopes[i] for i in range(k) if w >> i & 1) for w in range(1 << k)]


def _mobius(values: Sequence[Fraction], k: int, masks) -> dict[int, Fraction]:
    """Abelian face coordinates ``sum_{T <= S} (-1)^{|S|-|T|} f(T)`` for each S."""
    out = {}
    for s in masks:
        acc = Fraction(0)
        t = s
        while True:
            sign = -1 if popcount(s ^ t) & 1 else 1
            acc += sign * values[t]
            if t == 0:
                break
            t = (t - 1) & s
        out[s] = acc
    return out


def heisenberg_cocycle(x: Sequence, y: Sequence) -> Fraction:
    """The twist of the z alternating sum for a 3-cube on ``H/Gamma``.

    ``x`` and ``y`` are the eight x and y coordinates (mask order); both must
    be parallelepipeds mod 1.  Returns a value in [0, 1).
    """
    x = [frac(v) for v in x]
    y = [frac(v) for v in y]
    if len(x) != 8 or len(y) != 8:
        raise DimensionError("the cocycle takes eight x and eight y values")
    for name, vals in (("x", x), ("y", y)):
        bad = _mod1_face_defect(vals)
        if bad is not None:
            raise ValueError(f"{name} coordinates are not a parallelepiped mod 1 (2-face #{bad[0]})")
    val = (
        x[3] * (y[3] - y[1] - y[2] + y[0])
        + x[5] * (y[5] - y[1] - y[4] + y[0])
        + x[6] * (y[6] - y[2] - y[4] + y[0])
        - x[7] * (y[7] + 2 * y[0] - y[4] - y[2] - y[1])
    )
    return frac_part(val)


def z_alternating_sum(points: Sequence) -> Fraction:
    return frac_part(sum((-1) ** popcount(w) * p[2] for w, p in enumerate(points)))


# -- Heisenberg lifts --------------------------------------------------------


def _heis_lift(points: dict[int, Heis], k: int) -> tuple[dict[int, Heis], dict[int, Fraction]]:
    """Lift points on a downward-closed vertex set to ``H``.

    x and y are lifted to affine functions; z is shifted so the lift reduces
    to the given points, then the integer parts of its high face coordinates
    are removed.  Returns the lift and the face coordinates (|S| >= 3) that
    had to be integral.
    """
    xs = {w: p[0] for w, p in points.items()}
    ys = {w: p[1] for w, p in points.items()}
    r = affine_lift(xs, k)
    s = affine_lift(ys, k)
    t1 = {w: points[w][2] + r[w] * math.floor(s[w]) for w in points}
    high = [m for m in sorted(points) if popcount(m) >= 3]
    mob = _mobius(t1, k, high)
    ints = {m: Fraction(math.floor(v)) for m, v in mob.items()}
    lift = {}
    for w in points:
        shift = sum((ints[m] for m in high if m & w == m), Fraction(0))
        lift[w] = Heis(r[w], s[w], t1[w] - shift)
    return lift, mob


def _heis_cube_verdict(points: Sequence[Heis], k: int) -> NilCubeVerdict:
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    for name, vals in (("x", xs), ("y", ys)):
        bad = _mod1_face_defect(vals)
        if bad is not None:
            return NilCubeVerdict(False, violation=f"{name}-coordinates: 2-face #{bad[0]} has alternating sum {bad[1]} mod 1")
    if k == 3:
        lhs = z_alternating_sum(points)
        rhs = heisenberg_cocycle(xs, ys)
        if lhs != rhs:
            return NilCubeVerdict(False, violation=f"z alternating sum {lhs} differs from cocycle {rhs} mod 1")
    elif k >= 4:
        for n, face in enumerate(faces(k, 3)):
            sub = restrict(points, face)
            v = _heis_cube_verdict(sub, 3)
            if not v.is_cube:
                return NilCubeVerdict(False, violation=f"3-face #{n} {face.vertices()}: {v.violation}")
    return NilCubeVerdict(True)


def _certify(points: Sequence, parent: Nilmanifold) -> tuple | None:
    """A Host-Kra lift of the configuration, or None if the construction fails."""
    k = config_dim(points)
    if isinstance(parent, HeisenbergNilmanifold):
        lift, mob = _heis_lift(dict(enumerate(points)), k)
        if any(v.denominator != 1 for v in mob.values()):
            return None
        cert = tuple(lift[w] for w in range(1 << k))
        if any(parent.reduce(cert[w]) != points[w] for w in range(1 << k)):
            return None
        return cert if hk_membership(cert, parent.group).ok else None
    fc = face_coordinates(points, parent.quotient)
    if not all(parent.quotient.member(x, popcount(s)) for s, x in zip(fc.subsets, fc.coords)):
        return None
    return vertex_coordinates(FaceCoordinates(k, fc.coords), parent.group)


def nil_cube_membership(points: Sequence, parent: Nilmanifold) -> NilCubeVerdict:
    """Is the configuration of canonical representatives a cube of ``G/Gamma``?"""
    k = config_dim(points)
    if k > MAX_NIL_DIM:
        raise DimensionError(f"refusing nilmanifold cubes in dimension {k} > {MAX_NIL_DIM}")
    points = tuple(parent.reduce(p) for p in points)
    if isinstance(parent, HeisenbergNilmanifold):
        verdict = _heis_cube_verdict(points, k)
    elif isinstance(parent, TorusNilmanifold):
        m = hk_membership(points, parent.quotient)
        verdict = NilCubeVerdict(m.ok, violation=None if m.ok else f"face coordinate at {m.witness[0]} is {m.witness[1]}")
    else:
        raise TypeError(f"unsupported nilmanifold {parent!r}")
    cert = _certify(points, parent)
    if (cert is not None) != verdict.is_cube:
        raise InconsistencyError(
            f"cube criterion says {verdict.is_cube} but lift construction says {cert is not None}")
    if cert is None:
        return verdict
    return NilCubeVerdict(True, certificate=cert)


def _as_membership(v: NilCubeVerdict) -> Membership:
    return Membership(v.is_cube, (v.violation, None))


def nil_corner_complete(corner: Sequence, parent: Nilmanifold):
    """Complete a corner of canonical representatives; the result is reduced.

    Lifts the corner to ``G``, completes the lift with last face coordinate
    equal to the identity, and reduces.  At ``k = degree + 1`` the
    completion is unique.
    """
    corner = tuple(parent.reduce(p) for p in corner)
    try:
        k = check_lower_faces(corner, parent.group,
                              member=lambda c: _as_membership(nil_cube_membership(c, parent)))
    except CornerError as err:
        raise CornerError(err.face_index, (err.witness[0], None)) from None
    if isinstance(parent, HeisenbergNilmanifold):
        lift, _ = _heis_lift(dict(enumerate(corner)), k)
        lifted = tuple(lift[w] for w in range(len(corner)))
        return parent.reduce(hk_corner_complete(lifted, parent.group))
    return hk_corner_complete(corner, parent.quotient)


def random_nil_cube(parent: Nilmanifold, k: int, rng: random.Random) -> tuple:
    """Pointwise projection of a random Host-Kra cube of ``G``."""
    return tuple(parent.reduce(g) for g in random_hk_cube(parent.group, k, rng))
