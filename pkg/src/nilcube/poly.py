"""Polynomial sequences ``Z -> G`` into filtered groups.

Two tests of polynomiality are provided.  :func:`is_polynomial_sequence`
evaluates nested difference quotients ``d_{h_i} ... d_{h_1} f(x)`` and asks
that they lie in ``G_i``; :func:`poly_cube_check` asks that
``w -> f(x + w.h)`` be a Host-Kra cube for every sampled parallelepiped.
Both only see the finite windows they are given.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .groups import AbelianGroup, Element, FilteredGroup, HEISENBERG, Heis, frac
from .hostkra import hk_membership
from .nilmanifold import Nilmanifold

Sequence_ = Callable[[int], Element]


def derivative(f: Sequence_, h: int, G: FilteredGroup) -> Sequence_:
    """``x -> f(x + h) f(x)^-1``."""
    def d(x: int) -> Element:
        return G.div(f(x + h), f(x))
    return d


def nested_derivative(f: Sequence_, hs: Sequence[int], G: FilteredGroup) -> Sequence_:
    for h in hs:
        f = derivative(f, h, G)
    return f


def _poly_value(coeffs: Sequence, n: int):
    """Horner evaluation of ``sum c_i n^i`` with exact arithmetic."""
    acc = 0
    for c in reversed(coeffs):
        acc = acc * n + c
    return acc


@dataclass(frozen=True)
class AbelianPoly:
    """``n -> (p_1(n), ..., p_d(n))`` with one coefficient list per coordinate."""

    group: AbelianGroup
    coeffs: tuple[tuple, ...]

    def __call__(self, n: int) -> tuple:
        vals = []
        for kind, cs in zip(self.group.kinds, self.coeffs):
            v = _poly_value([frac(c) for c in cs], n)
            vals.append(v % kind if isinstance(kind, int) else v)
        return self.group.coerce(tuple(vals))


@dataclass(frozen=True)
class HeisenbergPoly:
    """``n -> heis(p(n), q(n), r(n))``.

    The closed form of a polynomial sequence for the standard filtration is
    ``heis(a1 n + a0, b1 n + b0, c2 n^2 + c1 n + c0)``; longer coefficient
    lists give sequences that are generally not polynomial.
    """

    xs: tuple
    ys: tuple
    zs: tuple

    group = HEISENBERG

    @classmethod
    def closed_form(cls, a1, a0, b1, b0, c2, c1, c0) -> HeisenbergPoly:
        return cls((frac(a0), frac(a1)), (frac(b0), frac(b1)), (frac(c0), frac(c1), frac(c2)))

    def __call__(self, n: int) -> Heis:
        return Heis(_poly_value(self.xs, n), _poly_value(self.ys, n), _poly_value(self.zs, n))

    @property
    def is_closed_form(self) -> bool:
        def deg(cs):
            return max((i for i, c in enumerate(cs) if c != 0), default=-1)
        return deg(self.xs) <= 1 and deg(self.ys) <= 1 and deg(self.zs) <= 2


@dataclass(frozen=True)
class OrbitSequence:
    """``n -> g^n x``, optionally reduced into a nilmanifold."""

    group: FilteredGroup
    g: Element
    x: Element
    parent: Nilmanifold | None = None

    def __call__(self, n: int):
        val = self.group.mul(self.group.power(self.g, n), self.x)
        return val if self.parent is None else self.parent.reduce(val)

    def lift(self, n: int) -> Element:
        return self.group.mul(self.group.power(self.g, n), self.x)


def random_heisenberg_poly(rng: random.Random, polynomial: bool = True, den: int = 6) -> HeisenbergPoly:
    """A random closed-form sequence, or with ``polynomial=False`` one with a
    spurious higher-degree term in a random coordinate."""
    def r():
        return Fraction(rng.randint(-9, 9), rng.randint(1, den))
    seq = HeisenbergPoly.closed_form(r(), r(), r(), r(), r(), r(), r())
    if polynomial:
        return seq
    extra = Fraction(rng.choice([-3, -2, -1, 1, 2, 3]), rng.randint(1, den))
    which = rng.randrange(3)
    if which == 0:
        return HeisenbergPoly(seq.xs + (extra,), seq.ys, seq.zs)
    if which == 1:
        return HeisenbergPoly(seq.xs, seq.ys + (extra,), seq.zs)
    return HeisenbergPoly(seq.xs, seq.ys, seq.zs + (extra,))


# -- the two tests ----------------------------------------------------------------


@dataclass
class PolyReport:
    ok: bool
    checked: int = 0
    failures: list = field(default_factory=list)  # (sample, detail)

    def __bool__(self) -> bool:
        return self.ok


def random_window(rng: random.Random, depth: int, count: int, span: int = 12) -> list[tuple[int, ...]]:
    """``count`` tuples ``(x, h_1, ..., h_depth)`` with entries in ``[-span, span]``."""
    return [tuple(rng.randint(-span, span) for _ in range(depth + 1)) for _ in range(count)]


def is_polynomial_sequence(f: Sequence_, G: FilteredGroup, window: Sequence[Sequence[int]],
                           max_failures: int = 10) -> PolyReport:
    """Nested differences on ``window``.

    Each tuple ``(x, h_1, ..., h_i)`` is checked at every depth ``j <= i``:
    ``d_{h_j} ... d_{h_1} f(x)`` must lie in ``G_j``.  Depth ``s + 1`` thus
    requires the identity.
    """
    rep = PolyReport(True)
    cache: dict[int, Element] = {}

    def fv(n: int):
        if n not in cache:
            cache[n] = f(n)
        return cache[n]

    for sample in window:
        x, hs = sample[0], tuple(sample[1:])
        if len(hs) > G.degree + 1:
            raise ValueError(f"depth {len(hs)} exceeds degree + 1 = {G.degree + 1}")
        for depth in range(1, len(hs) + 1):
            val = nested_derivative(fv, hs[:depth], G)(x)
            rep.checked += 1
            if not G.member(val, depth):
                rep.ok = False
                if len(rep.failures) < max_failures:
                    rep.failures.append((sample, f"depth {depth} difference {G.format(val)} outside G_{depth}"))
                break
    return rep


def parallelepiped(f: Sequence_, x: int, hs: Sequence[int]) -> tuple:
    """``w -> f(x + w_1 h_1 + ... + w_k h_k)`` in vertex mask order."""
    k = len(hs)
    return tuple(f(x + sum(h for i, h in enumerate(hs) if w >> i & 1)) for w in range(1 << k))


def poly_cube_check(f: Sequence_, G: FilteredGroup, k: int | None, samples: Sequence[Sequence[int]],
                    max_failures: int = 10) -> PolyReport:
    """Host-Kra membership of the parallelepiped configurations of ``f``.

    ``samples`` are tuples ``(x, h_1, ..., h_k)``; with ``k=None`` each
    sample's own length decides the dimension.
    """
    rep = PolyReport(True)
    for sample in samples:
        x, hs = sample[0], tuple(sample[1:])
        if k is not None and len(hs) != k:
            raise ValueError(f"sample {sample} does not have {k} steps")
        verdict = hk_membership(parallelepiped(f, x, hs), G)
        rep.checked += 1
        if not verdict.ok:
            rep.ok = False
            if len(rep.failures) < max_failures:
                s, val = verdict.witness
                rep.failures.append((tuple(sample), f"face coordinate {G.format(val)} at subset {s:b}"))
    return rep
