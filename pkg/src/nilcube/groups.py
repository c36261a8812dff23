"""Filtered groups with exact elements.

Every group here is a :class:`FilteredGroup`: it knows how to multiply,
invert and compare its elements, and answers ``member(g, i)``, i.e. whether
``g`` lies in the ``i``-th filtration subgroup ``G_i``.  Elements are plain
hashable Python values:

* abelian groups (``Z``, ``Q``, ``Q/Z``, ``Z/n`` and products of those) use
  tuples with one entry per coordinate,
* the Heisenberg group uses :class:`Heis`,
* :class:`ProductGroup` uses pairs.

All real coordinates are realized over ``Fraction`` so that every identity is
checked with zero tolerance.
"""

from __future__ import annotations

import math
import random
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Any, Callable, Iterable, Iterator, NamedTuple, Sequence

Element = Any

# coordinate kinds of an abelian group
ZZ = "Z"
QQ = "Q"
TT = "Q/Z"


class GroupParseError(ValueError):
    pass


def frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise GroupParseError(f"not a rational number: {x!r}") from exc
    return Fraction(x)


def frac_part(x: Fraction) -> Fraction:
    """Fractional part ``{x} = x - floor(x)``, always in [0, 1)."""
    return x - math.floor(x)


def random_fraction(rng: random.Random, num: int = 20, den: int = 12) -> Fraction:
    return Fraction(rng.randint(-num, num), rng.randint(1, den))


class FilteredGroup(ABC):
    """A group ``G`` with a filtration ``G = G_0 >= G_1 >= ... >= G_{s+1} = {id}``."""

    name: str = "group"
    degree: int = 1
    abelian: bool = False

    @abstractmethod
    def identity(self) -> Element: ...

    @abstractmethod
    def mul(self, a: Element, b: Element) -> Element: ...

    @abstractmethod
    def inv(self, a: Element) -> Element: ...

    @abstractmethod
    def member(self, g: Element, i: int) -> bool:
        """Is ``g`` in ``G_i``?"""

    @abstractmethod
    def coerce(self, value) -> Element:
        """Normalize a loosely typed value into a canonical element."""

    @abstractmethod
    def format(self, g: Element) -> str: ...

    @abstractmethod
    def parse(self, text: str) -> Element: ...

    @abstractmethod
    def random(self, rng: random.Random, level: int = 0) -> Element:
        """A random element of ``G_level`` (small numerators and denominators)."""

    # -- derived operations -------------------------------------------------

    @property
    def proper(self) -> bool:
        return True

    def is_finite(self) -> bool:
        return False

    def elements(self) -> Iterator[Element]:
        raise TypeError(f"{self.name} is infinite")

    def is_identity(self, g: Element) -> bool:
        return g == self.identity()

    def div(self, a: Element, b: Element) -> Element:
        """``a * b^-1``."""
        return self.mul(a, self.inv(b))

    def ldiv(self, a: Element, b: Element) -> Element:
        """``a^-1 * b``."""
        return self.mul(self.inv(a), b)

    def prod(self, items: Iterable[Element]) -> Element:
        out = self.identity()
        for g in items:
            out = self.mul(out, g)
        return out

    def commutator(self, a: Element, b: Element) -> Element:
        """``[a, b] = a^-1 b^-1 a b``."""
        return self.mul(self.mul(self.inv(a), self.inv(b)), self.mul(a, b))

    def power(self, g: Element, n: int) -> Element:
        return group_pow(self, g, n)

    def level(self, g: Element) -> int:
        """Largest ``i <= degree + 1`` with ``g`` in ``G_i``."""
        i = 0
        while i <= self.degree and self.member(g, i + 1):
            i += 1
        return i

    def random_config(self, k: int, rng: random.Random) -> tuple:
        return tuple(self.random(rng) for _ in range(1 << k))

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.name}>"


def group_pow(G: FilteredGroup, g: Element, n: int) -> Element:
    """``g**n`` by square-and-multiply; negative ``n`` uses the inverse."""
    if n < 0:
        g, n = G.inv(g), -n
    out = G.identity()
    base = g
    while n:
        if n & 1:
            out = G.mul(out, base)
        base = G.mul(base, base)
        n >>= 1
    return out


# -- abelian groups ---------------------------------------------------------


@dataclass(frozen=True, repr=False)
class AbelianGroup(FilteredGroup):
    """A finite product of copies of Z, Q, Q/Z and Z/n.

    ``kinds[j]`` is ``"Z"``, ``"Q"``, ``"Q/Z"`` or a modulus ``n >= 1``.
    ``levels[j]`` is the last filtration index at which coordinate ``j`` may be
    nonzero, so ``G_i`` is the set of elements vanishing on every coordinate
    with ``levels[j] < i``.  Uniform levels ``s`` give the degree-``s``
    filtration ``A = A_0 = ... = A_s > {0}``.
    """

    kinds: tuple
    levels: tuple
    name: str = field(default="abelian")

    abelian = True

    def __post_init__(self) -> None:
        if len(self.kinds) != len(self.levels) or not self.kinds:
            raise ValueError("need one level per coordinate")
        for kd in self.kinds:
            if kd not in (ZZ, QQ, TT) and not (isinstance(kd, int) and kd >= 1):
                raise ValueError(f"unknown coordinate kind {kd!r}")
        if any(lv < 0 for lv in self.levels):
            raise ValueError("levels must be nonnegative")

    @property
    def degree(self) -> int:  # type: ignore[override]
        return max(self.levels)

    @property
    def proper(self) -> bool:
        return min(self.levels) >= 1

    @property
    def rank(self) -> int:
        return len(self.kinds)

    def _norm(self, j: int, v):
        kd = self.kinds[j]
        if kd == ZZ:
            if isinstance(v, Fraction):
                if v.denominator != 1:
                    raise ValueError(f"{v} is not an integer")
                v = v.numerator
            return int(v)
        if kd == QQ:
            return frac(v)
        if kd == TT:
            return frac_part(frac(v))
        return int(v) % kd

    def identity(self) -> tuple:
        return tuple(self._norm(j, 0) for j in range(self.rank))

    def mul(self, a, b) -> tuple:
        return tuple(self._norm(j, x + y) for j, (x, y) in enumerate(zip(a, b)))

    def inv(self, a) -> tuple:
        return tuple(self._norm(j, -x) for j, x in enumerate(a))

    def div(self, a, b) -> tuple:
        return tuple(self._norm(j, x - y) for j, (x, y) in enumerate(zip(a, b)))

    def scale(self, n: int, a) -> tuple:
        return tuple(self._norm(j, n * x) for j, x in enumerate(a))

    def member(self, g, i: int) -> bool:
        return all(x == 0 or i <= lv for x, lv in zip(g, self.levels))

    def coerce(self, value) -> tuple:
        if not isinstance(value, (tuple, list)):
            value = (value,)
        if len(value) != self.rank:
            raise ValueError(f"{self.name} elements have {self.rank} coordinates")
        return tuple(self._norm(j, v) for j, v in enumerate(value))

    def is_finite(self) -> bool:
        return all(isinstance(kd, int) for kd in self.kinds)

    @property
    def order(self) -> int:
        if not self.is_finite():
            raise TypeError(f"{self.name} is infinite")
        return math.prod(self.kinds)

    def elements(self) -> Iterator[tuple]:
        if not self.is_finite():
            raise TypeError(f"{self.name} is infinite")
        return iter(product(*(range(n) for n in self.kinds)))

    def random(self, rng: random.Random, level: int = 0) -> tuple:
        out = []
        for kd, lv in zip(self.kinds, self.levels):
            if level > lv:
                out.append(0)
            elif kd == ZZ:
                out.append(rng.randint(-20, 20))
            elif kd in (QQ, TT):
                out.append(random_fraction(rng))
            else:
                out.append(rng.randrange(kd))
        return self.coerce(out)

    # text form: int:5  rat:1/2,3  torus:1/3  mod:2/3,1/4
    def _prefix(self) -> str:
        kinds = set(self.kinds)
        if kinds == {ZZ}:
            return "int"
        if kinds == {QQ}:
            return "rat"
        if kinds == {TT}:
            return "torus"
        if all(isinstance(kd, int) for kd in kinds):
            return "mod"
        return "ab"

    def format(self, g) -> str:
        pre = self._prefix()
        if pre == "mod":
            body = ",".join(f"{x}/{n}" for x, n in zip(g, self.kinds))
        elif pre == "ab":
            body = ",".join(
                f"{x}/{kd}" if isinstance(kd, int) else str(x)
                for x, kd in zip(g, self.kinds)
            )
        else:
            body = ",".join(str(x) for x in g)
        return f"{pre}:{body}"

    def parse(self, text: str) -> tuple:
        pre, body = _split_tag(text)
        if pre != self._prefix():
            raise GroupParseError(f"expected a {self._prefix()}: element, got {text!r}")
        parts = [p.strip() for p in body.split(",")]
        if len(parts) != self.rank:
            raise GroupParseError(f"{text!r} should have {self.rank} coordinates")
        vals = []
        for j, p in enumerate(parts):
            kd = self.kinds[j]
            if isinstance(kd, int):
                res, _, mod = p.partition("/")
                try:
                    r, m = int(res), int(mod)
                except ValueError as exc:
                    raise GroupParseError(f"bad residue {p!r}") from exc
                if m != kd:
                    raise GroupParseError(f"modulus {m} does not match Z/{kd}")
                if not 0 <= r < m:
                    raise GroupParseError(f"residue {r} not reduced mod {m}")
                vals.append(r)
            elif kd == ZZ:
                try:
                    vals.append(int(p))
                except ValueError as exc:
                    raise GroupParseError(f"not an integer: {p!r}") from exc
            else:
                v = frac(p)
                if kd == TT and not 0 <= v < 1:
                    raise GroupParseError(f"torus coordinate {p} not in [0,1)")
                vals.append(v)
        return tuple(vals)


def _split_tag(text: str) -> tuple[str, str]:
    pre, sep, body = text.strip().partition(":")
    if not sep:
        raise GroupParseError(f"missing type tag in {text!r}")
    return pre.strip(), body.strip()


def integers(s: int = 1) -> AbelianGroup:
    """Z with Z_0 = ... = Z_s = Z."""
    return AbelianGroup((ZZ,), (s,), name="Z" if s == 1 else f"Z@{s}")


def rationals(*levels: int) -> AbelianGroup:
    """Q^d with coordinate ``j`` living up to filtration index ``levels[j]``."""
    levels = levels or (1,)
    return AbelianGroup((QQ,) * len(levels), tuple(levels), name=f"Q{list(levels)}")


def torus(*levels: int) -> AbelianGroup:
    """(Q/Z)^d, the rational points of a torus, with per-coordinate levels."""
    levels = levels or (1,)
    return AbelianGroup((TT,) * len(levels), tuple(levels), name=f"T{list(levels)}")


def cyclic(n: int, s: int = 1) -> AbelianGroup:
    """Z/n with the degree-s filtration."""
    return AbelianGroup((n,), (s,), name=f"Z/{n}@{s}")


def finite_abelian(moduli: Sequence[int], s: int | Sequence[int] = 1) -> AbelianGroup:
    """prod Z/n_j; ``s`` is a single degree or one level per factor."""
    levels = tuple(s) if isinstance(s, (tuple, list)) else (s,) * len(moduli)
    tag = "x".join(f"Z/{n}" for n in moduli)
    return AbelianGroup(tuple(moduli), levels, name=f"{tag}@{list(levels)}")


# -- Heisenberg group -------------------------------------------------------


class Heis(NamedTuple):
    """The unipotent matrix [[1, x, z], [0, 1, y], [0, 0, 1]]."""

    x: Fraction
    y: Fraction
    z: Fraction


def heis(x, y, z) -> Heis:
    return Heis(frac(x), frac(y), frac(z))


class HeisenbergGroup(FilteredGroup):
    """Rational Heisenberg group with its lower central series.

    ``(x,y,z)(x',y',z') = (x+x', y+y', z+z'+xy')``; ``G_2`` is the center.
    """

    name = "heis"
    degree = 2

    def identity(self) -> Heis:
        return Heis(Fraction(0), Fraction(0), Fraction(0))

    def mul(self, a: Heis, b: Heis) -> Heis:
        return Heis(a[0] + b[0], a[1] + b[1], a[2] + b[2] + a[0] * b[1])

    def inv(self, a: Heis) -> Heis:
        return Heis(-a[0], -a[1], a[0] * a[1] - a[2])

    def prod(self, items: Iterable[Heis]) -> Heis:
        # integer arithmetic over common denominators; z collects x_i y_j, i < j
        items = list(items)
        d = math.lcm(*(c.denominator for a in items for c in a[:2]))
        dz = math.lcm(*(a[2].denominator for a in items))
        x = y = cross = z = 0
        for a in items:
            ax = a[0].numerator * (d // a[0].denominator)
            ay = a[1].numerator * (d // a[1].denominator)
            cross += x * ay
            x += ax
            y += ay
            z += a[2].numerator * (dz // a[2].denominator)
        return Heis(Fraction(x, d), Fraction(y, d), Fraction(z * d * d + cross * dz, dz * d * d))

    def div(self, a: Heis, b: Heis) -> Heis:
        # a b^-1 = (ax - bx, ay - by, az - bz - ax by + bx by)
        return Heis(a[0] - b[0], a[1] - b[1], a[2] - b[2] - (a[0] - b[0]) * b[1])

    def ldiv(self, a: Heis, b: Heis) -> Heis:
        # a^-1 b = (bx - ax, by - ay, bz - az - ax (by - ay))
        return Heis(b[0] - a[0], b[1] - a[1], b[2] - a[2] - a[0] * (b[1] - a[1]))

    def member(self, g: Heis, i: int) -> bool:
        if i <= 1:
            return True
        if i == 2:
            return g[0] == 0 and g[1] == 0
        return g[0] == 0 and g[1] == 0 and g[2] == 0

    def power(self, g: Heis, n: int) -> Heis:
        x, y, z = g
        return Heis(n * x, n * y, n * z + Fraction(n * (n - 1), 2) * x * y)

    def coerce(self, value) -> Heis:
        if len(value) != 3:
            raise ValueError("Heisenberg elements have three coordinates")
        return heis(*value)

    def format(self, g: Heis) -> str:
        return "heis:" + ",".join(str(v) for v in g)

    def parse(self, text: str) -> Heis:
        pre, body = _split_tag(text)
        if pre != "heis":
            raise GroupParseError(f"expected a heis: element, got {text!r}")
        parts = body.split(",")
        if len(parts) != 3:
            raise GroupParseError(f"{text!r} should have three coordinates")
        return heis(*(frac(p) for p in parts))

    def random(self, rng: random.Random, level: int = 0) -> Heis:
        if level >= 3:
            return self.identity()
        z = random_fraction(rng)
        if level == 2:
            return heis(0, 0, z)
        return heis(random_fraction(rng), random_fraction(rng), z)


HEISENBERG = HeisenbergGroup()


# -- products and re-filtered groups ----------------------------------------


@dataclass(frozen=True, repr=False)
class ProductGroup(FilteredGroup):
    """Direct product ``G x H`` with ``(G x H)_i = G_i x H_i``."""

    left: FilteredGroup
    right: FilteredGroup

    @property
    def name(self) -> str:  # type: ignore[override]
        return f"({self.left.name} x {self.right.name})"

    @property
    def degree(self) -> int:  # type: ignore[override]
        return max(self.left.degree, self.right.degree)

    @property
    def abelian(self) -> bool:  # type: ignore[override]
        return self.left.abelian and self.right.abelian

    @property
    def proper(self) -> bool:
        return self.left.proper and self.right.proper

    def identity(self):
        return (self.left.identity(), self.right.identity())

    def mul(self, a, b):
        return (self.left.mul(a[0], b[0]), self.right.mul(a[1], b[1]))

    def inv(self, a):
        return (self.left.inv(a[0]), self.right.inv(a[1]))

    def member(self, g, i: int) -> bool:
        return self.left.member(g[0], i) and self.right.member(g[1], i)

    def coerce(self, value):
        a, b = value
        return (self.left.coerce(a), self.right.coerce(b))

    def is_finite(self) -> bool:
        return self.left.is_finite() and self.right.is_finite()

    def elements(self):
        return iter(product(list(self.left.elements()), list(self.right.elements())))

    def format(self, g) -> str:
        return f"pair:[{self.left.format(g[0])}][{self.right.format(g[1])}]"

    def parse(self, text: str):
        pre, body = _split_tag(text)
        if pre != "pair" or not (body.startswith("[") and body.endswith("]")):
            raise GroupParseError(f"expected pair:[..][..], got {text!r}")
        depth = 0
        for pos, ch in enumerate(body):
            depth += ch == "["
            depth -= ch == "]"
            if depth == 0:
                break
        a, b = body[1:pos], body[pos + 1 :]
        if not (b.startswith("[") and b.endswith("]")):
            raise GroupParseError(f"expected pair:[..][..], got {text!r}")
        return (self.left.parse(a), self.right.parse(b[1:-1]))

    def random(self, rng: random.Random, level: int = 0):
        return (self.left.random(rng, level), self.right.random(rng, level))


class Refiltered(FilteredGroup):
    """The group law of ``base`` with a different (possibly invalid) filtration.

    Used to build deliberately broken filtrations for the axiom checker.
    """

    def __init__(self, base: FilteredGroup, member: Callable[[Element, int], bool],
                 degree: int, name: str | None = None):
        self.base = base
        self._member = member
        self.degree = degree
        self.abelian = base.abelian
        self.name = name or f"{base.name}*"

    def identity(self):
        return self.base.identity()

    def mul(self, a, b):
        return self.base.mul(a, b)

    def inv(self, a):
        return self.base.inv(a)

    def member(self, g, i: int) -> bool:
        return self._member(g, i)

    def coerce(self, value):
        return self.base.coerce(value)

    def format(self, g) -> str:
        return self.base.format(g)

    def parse(self, text: str):
        return self.base.parse(text)

    def random(self, rng, level: int = 0):
        return self.base.random(rng, 0)

    def is_finite(self) -> bool:
        return self.base.is_finite()

    def elements(self):
        return self.base.elements()


# -- axiom checks -----------------------------------------------------------


@dataclass
class FiltrationViolation:
    kind: str  # "commutator", "monotone", "top", "identity"
    detail: tuple

    def __str__(self) -> str:
        return f"{self.kind}: {self.detail}"


def check_filtration_axioms(G: FilteredGroup, witnesses: Iterable[Element] | None = None,
                            limit: int | None = None) -> list[FiltrationViolation]:
    """Check a filtration on ``witnesses`` (all elements when ``None``).

    Looks for identity outside some ``G_i``, failures of ``G_{i+1} <= G_i``,
    non-identity members of ``G_{s+1}``, and pairs ``g in G_i, h in G_j``
    with ``[g, h]`` outside ``G_{i+j}``.
    """
    ws = list(G.elements() if witnesses is None else witnesses)
    s = G.degree
    top_level = s + 1
    out: list[FiltrationViolation] = []

    def full() -> bool:
        return limit is not None and len(out) >= limit

    e = G.identity()
    for i in range(top_level + 1):
        if not G.member(e, i):
            out.append(FiltrationViolation("identity", (i,)))
    for g in ws:
        if not G.member(g, 0):
            out.append(FiltrationViolation("monotone", (G.format(g), 0)))
        for i in range(top_level):
            if G.member(g, i + 1) and not G.member(g, i):
                out.append(FiltrationViolation("monotone", (G.format(g), i + 1)))
        if G.member(g, top_level) and not G.is_identity(g):
            out.append(FiltrationViolation("top", (G.format(g), top_level)))
    if full():
        return out
    levels = [(g, [i for i in range(1, top_level + 1) if G.member(g, i)]) for g in ws]
    for g, gl in levels:
        if not gl:
            continue
        for h, hl in levels:
            if not hl:
                continue
            c = G.commutator(g, h)
            if G.is_identity(c):
                continue
            # the strongest constraint comes from the deepest levels of g and h
            i, j = max(gl), max(hl)
            if not G.member(c, i + j):
                out.append(FiltrationViolation(
                    "commutator", (G.format(g), G.format(h), i, j)))
                if full():
                    return out
    return out


def check_group_axioms(G: FilteredGroup, witnesses: Sequence[Element]) -> list[str]:
    """Associativity, identity and inverse laws on all triples of witnesses."""
    bad = []
    e = G.identity()
    for a in witnesses:
        if G.mul(a, e) != a or G.mul(e, a) != a:
            bad.append(f"identity law fails at {G.format(a)}")
        if G.mul(a, G.inv(a)) != e or G.mul(G.inv(a), a) != e:
            bad.append(f"inverse law fails at {G.format(a)}")
    for a in witnesses:
        for b in witnesses:
            ab = G.mul(a, b)
            for c in witnesses:
                if G.mul(ab, c) != G.mul(a, G.mul(b, c)):
                    bad.append(f"associativity fails at {G.format(a)}, {G.format(b)}, {G.format(c)}")
    return bad


# -- catalog ----------------------------------------------------------------


def make_standard_groups() -> dict[str, FilteredGroup]:
    """The named groups used throughout the package and the CLI."""
    return {
        "z": integers(1),
        "q1": rationals(1),
        "q2": rationals(2),
        "q1q2": rationals(1, 2),
        "heis": HEISENBERG,
        "torus1": torus(1),
        "torus2": torus(2),
        "torus1t2": torus(1, 2),
        "z2": cyclic(2, 1),
        "z3": cyclic(3, 1),
        "z4": cyclic(4, 1),
        "z2xz4": finite_abelian((2, 4), 1),
    }


def lookup_group(ident: str) -> FilteredGroup:
    """Resolve a group id.

    Besides the catalog names, ``zN@s`` gives Z/N with the degree-s
    filtration and ``zN`` is shorthand for ``zN@1``.
    """
    table = make_standard_groups()
    key = ident.strip().lower()
    if key in table:
        return table[key]
    if key.startswith("z") and key[1:2].isdigit():
        n_txt, _, s_txt = key[1:].partition("@")
        try:
            n = int(n_txt)
            s = int(s_txt) if s_txt else 1
        except ValueError:
            n = s = 0
        if n >= 1 and s >= 1:
            return cyclic(n, s)
    raise KeyError(f"unknown group id {ident!r}; known: {', '.join(sorted(table))}, zN@s")
