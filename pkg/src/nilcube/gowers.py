"""Gowers uniformity norms, inner products, nilsequences and correlations on
``Z/N``.

Averages over parallelepipeds are computed exactly by peeling off one
direction at a time: once the conjugations are applied, for a fixed step
``h`` the pair ``f_{w,0}, f_{w,1}`` collapses to ``y -> f_{w,0}(y) f_{w,1}(y + h)``.  Above
:data:`EXHAUSTIVE_GUARD` terms the average is estimated by Monte Carlo with a
reported seed and sample count.
"""

from __future__ import annotations

import cmath
import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .groups import HEISENBERG, frac, frac_part, heis
from .nilmanifold import HEIS_NIL, Nilmanifold
from .poly import OrbitSequence

MAX_K = 4
EXHAUSTIVE_GUARD = 2**32  # N^(k+1) terms
CHUNK = 2**22
TOL = 1e-9


class GowersError(ValueError):
    pass


@dataclass(frozen=True)
class CyclicFunction:
    """A function ``Z/N -> C``, indexed modulo ``N``."""

    N: int
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=np.complex128).reshape(-1)
        if self.N < 1 or len(vals) != self.N:
            raise GowersError(f"need exactly N = {self.N} values, got {len(vals)}")
        if not np.isfinite(vals).all():
            raise GowersError("values must be finite")
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def __call__(self, n: int) -> complex:
        return complex(self.values[n % self.N])

    @classmethod
    def constant(cls, N: int, c: complex = 1.0) -> CyclicFunction:
        return cls(N, np.full(N, c, dtype=np.complex128))

    @classmethod
    def character(cls, N: int, a: int = 1) -> CyclicFunction:
        """``x -> e(a x / N)``."""
        return cls(N, np.array([e(Fraction(a * x, N)) for x in range(N)]))

    @classmethod
    def from_callable(cls, N: int, fn: Callable[[int], complex]) -> CyclicFunction:
        return cls(N, np.array([fn(n) for n in range(N)], dtype=np.complex128))

    @classmethod
    def random(cls, N: int, rng: np.random.Generator, kind: str = "disc") -> CyclicFunction:
        if kind == "sign":
            return cls(N, rng.choice([-1.0, 1.0], size=N))
        if kind == "phase":
            return cls(N, np.exp(2j * np.pi * rng.random(N)))
        r = np.sqrt(rng.random(N))
        return cls(N, r * np.exp(2j * np.pi * rng.random(N)))

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("n,re,im\n")
        for n, v in enumerate(self.values):
            out.write(f"{n},{float(v.real)!r},{float(v.imag)!r}\n")
        return out.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> CyclicFunction:
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or [c.strip() for c in rows[0]] != ["n", "re", "im"]:
            raise GowersError("line 1: expected header 'n,re,im'")
        vals = {}
        for lineno, row in enumerate(rows[1:], start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise GowersError(f"line {lineno}: expected 3 fields")
            try:
                n, re_, im = int(row[0]), float(row[1]), float(row[2])
            except ValueError:
                raise GowersError(f"line {lineno}: unparsable row {','.join(row)!r}") from None
            if n in vals:
                raise GowersError(f"line {lineno}: duplicate index {n}")
            vals[n] = complex(re_, im)
        N = len(vals)
        if sorted(vals) != list(range(N)):
            raise GowersError("indices must be exactly 0..N-1")
        return cls(N, np.array([vals[n] for n in range(N)]))

    def sup(self) -> float:
        return float(np.abs(self.values).max())


def e(x) -> complex:
    """``exp(2 pi i x)``, reducing exact rationals mod 1 first."""
    if isinstance(x, (Fraction, int)):
        x = frac_part(Fraction(x))
    return cmath.exp(2j * math.pi * float(x))


# -- averages ------------------------------------------------------------------


@dataclass(frozen=True)
class Average:
    """A parallelepiped average and how it was obtained."""

    value: complex
    k: int
    N: int
    exhaustive: bool
    samples: int | None = None
    seed: int | None = None


def _shift_table(N: int) -> np.ndarray:
    idx = np.arange(N)
    return (idx[None, :] + idx[:, None]) % N  # [h, y] -> y + h


def _collapse(fs: list[np.ndarray], N: int) -> np.ndarray:
    """Average over ``x`` and all steps; ``fs`` holds ``2^k`` arrays of shape
    ``(B, N)`` in vertex order, result has shape ``(B,)``."""
    if len(fs) == 1:
        return fs[0].mean(axis=-1)
    half = len(fs) // 2
    B = fs[0].shape[0]
    if B * N * N > CHUNK and B > 1:
        step = max(1, CHUNK // (N * N))
        return np.concatenate([_collapse([f[i:i + step] for f in fs], N) for i in range(0, B, step)])
    shift = _shift_table(N)
    # last coordinate is the most significant bit: w < half has w_k = 0
    gs = []
    for lo, hi in zip(fs[:half], fs[half:]):
        g = lo[:, None, :] * hi[:, shift]  # (B, h, y)
        gs.append(g.reshape(B * N, N))
    inner = _collapse(gs, N)
    return inner.reshape(B, N).mean(axis=1)


def _conj_pattern(fs: Sequence[np.ndarray]) -> list[np.ndarray]:
    """Apply ``C^{|w|}`` to the function at vertex ``w``."""
    out = []
    for w, f in enumerate(fs):
        out.append(np.conj(f) if bin(w).count("1") & 1 else f)
    return out


def _monte_carlo(fs: Sequence[np.ndarray], k: int, N: int, samples: int, seed: int) -> complex:
    rng = np.random.default_rng(seed)
    x = rng.integers(0, N, size=samples)
    hs = rng.integers(0, N, size=(k, samples))
    acc = np.ones(samples, dtype=np.complex128)
    for w, f in enumerate(fs):
        pos = x.copy()
        for i in range(k):
            if w >> i & 1:
                pos += hs[i]
        acc *= f[pos % N]
    return complex(acc.mean())


def parallelepiped_average(functions: Sequence[CyclicFunction], k: int, monte_carlo: bool = False,
                           samples: int = 200_000, seed: int = 0) -> Average:
    """``E_{x,h} prod_w C^{|w|} f_w(x + w.h)`` over ``Z/N``."""
    if not 1 <= k <= MAX_K:
        raise GowersError(f"k must lie in 1..{MAX_K}")
    if len(functions) != 1 << k:
        raise GowersError(f"need {1 << k} functions for k = {k}")
    N = functions[0].N
    if any(f.N != N for f in functions):
        raise GowersError("all functions must share one modulus")
    fs = _conj_pattern([f.values for f in functions])
    if N ** (k + 1) <= EXHAUSTIVE_GUARD:
        val = complex(_collapse([f.reshape(1, N) for f in fs], N)[0])
        return Average(val, k, N, True)
    if not monte_carlo:
        raise GowersError(f"N^(k+1) = {N ** (k + 1)} terms exceed the exhaustive guard; "
                          "enable Monte Carlo to estimate")
    return Average(_monte_carlo(fs, k, N, samples, seed), k, N, False, samples, seed)


def gowers_inner_product(functions: Sequence[CyclicFunction], k: int | None = None, **kw) -> complex:
    if k is None:
        k = len(functions).bit_length() - 1
    return parallelepiped_average(functions, k, **kw).value


@dataclass(frozen=True)
class Norm:
    value: float
    average: Average


def gowers_norm_details(f: CyclicFunction, k: int, **kw) -> Norm:
    avg = parallelepiped_average([f] * (1 << k), k, **kw)
    v = avg.value
    scale = max(1.0, f.sup() ** (1 << k))
    if avg.exhaustive and (abs(v.imag) > TOL * scale or v.real < -TOL * scale):
        raise GowersError(f"U^{k} average {v} is not a nonnegative real")
    return Norm(max(v.real, 0.0) ** (1.0 / (1 << k)), avg)


def gowers_norm(f: CyclicFunction, k: int, **kw) -> float:
    return gowers_norm_details(f, k, **kw).value


def correlation(f: CyclicFunction, phi: CyclicFunction) -> complex:
    """``E_x f(x) conj(phi(x))``."""
    if f.N != phi.N:
        raise GowersError(f"moduli differ: {f.N} and {phi.N}")
    return complex(np.mean(f.values * np.conj(phi.values)))


# -- nilsequences -----------------------------------------------------------------


def nilsequence(F: Callable, p: Callable[[int], object], N: int) -> CyclicFunction:
    """``n -> F(p(n))`` for ``n = 0..N-1``.

    ``p`` is a sequence on the integers; nothing is assumed about
    periodicity mod ``N``, so the result is a sample, not a function that
    factors through ``Z/N``.
    """
    return CyclicFunction(N, np.array([complex(F(p(n))) for n in range(N)]))


def heisenberg_orbit(alpha, beta, gamma=0, parent: Nilmanifold = HEIS_NIL) -> OrbitSequence:
    """``n -> heis(alpha, beta, gamma)^n`` reduced into the Heisenberg nilmanifold."""
    return OrbitSequence(HEISENBERG, heis(frac(alpha), frac(beta), frac(gamma)), HEISENBERG.identity(), parent)


def heisenberg_linear(alpha, beta, parent: Nilmanifold = HEIS_NIL) -> Callable[[int], object]:
    """``n -> heis(alpha n, beta n, 0)`` reduced (a polynomial sequence)."""
    a, b = frac(alpha), frac(beta)
    return lambda n: parent.reduce(heis(a * n, b * n, 0))


def z_phase(point) -> complex:
    """``F(x, y, z) = e(z)`` on canonical representatives."""
    return e(point[2])
