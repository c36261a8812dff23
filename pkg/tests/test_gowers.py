from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nilcube.cube import popcount
from nilcube.groups import HEISENBERG, heis
from nilcube.gowers import (
    EXHAUSTIVE_GUARD,
    TOL,
    CyclicFunction,
    _monte_carlo,
    GowersError,
    correlation,
    e,
    gowers_inner_product,
    gowers_norm,
    gowers_norm_details,
    heisenberg_linear,
    heisenberg_orbit,
    nilsequence,
    parallelepiped_average,
    z_phase,
)
from nilcube.nilmanifold import HEIS_NIL, TorusNilmanifold, nil_cube_membership
from nilcube.poly import parallelepiped

F = Fraction


def naive_average(fs, k, N):
    total = 0j
    for x in range(N):
        for hs in itertools.product(range(N), repeat=k):
            prod = 1 + 0j
            for w, f in enumerate(fs):
                v = f((x + sum(h for i, h in enumerate(hs) if w >> i & 1)) % N)
                prod *= v.conjugate() if popcount(w) & 1 else v
            total += prod
    return total / N ** (k + 1)


def rng_for(seed):
    return np.random.default_rng(seed)


def test_constant_and_character_norms():
    for k in (1, 2, 3):
        assert abs(gowers_norm(CyclicFunction.constant(16), k) - 1) < TOL
    chi = CyclicFunction.character(16, 1)
    for k in (2, 3, 4):
        assert abs(gowers_norm(chi, k) - 1) < TOL
    # U^1 only sees the mean; compare before the square root
    assert abs(gowers_norm_details(chi, 1).average.value) < TOL


@pytest.mark.parametrize("k,N", [(1, 7), (2, 6), (3, 5)])
def test_average_matches_direct_summation(k, N):
    rng = rng_for(k)
    fs = [CyclicFunction.random(N, rng) for _ in range(1 << k)]
    assert abs(gowers_inner_product(fs, k) - naive_average(fs, k, N)) < 1e-12


def test_norm_matches_direct_summation():
    f = CyclicFunction.random(6, rng_for(9), "phase")
    assert abs(gowers_norm(f, 3) - naive_average([f] * 8, 3, 6).real ** (1 / 8)) < 1e-12


def test_random_sign_snapshot():
    f = CyclicFunction.random(64, rng_for(0), "sign")
    assert abs(gowers_norm(f, 3) - 0.6901924582323341) < TOL


def test_zero_function_kills_inner_product():
    rng = rng_for(1)
    fs = [CyclicFunction.random(16, rng) for _ in range(4)]
    fs[2] = CyclicFunction.constant(16, 0)
    assert abs(gowers_inner_product(fs, 2)) < TOL


def test_inner_product_of_copies_is_the_power():
    f = CyclicFunction.random(16, rng_for(2))
    assert abs(gowers_inner_product([f] * 8, 3) - gowers_norm(f, 3) ** 8) < TOL


@settings(max_examples=25)
@given(st.integers(0, 10**6), st.sampled_from([2, 3]), st.sampled_from([8, 16]))
def test_cauchy_schwarz(seed, k, N):
    rng = rng_for(seed)
    fs = [CyclicFunction.random(N, rng) for _ in range(1 << k)]
    bound = math.prod(gowers_norm(f, k) for f in fs)
    assert abs(gowers_inner_product(fs, k)) <= bound + TOL


@settings(max_examples=25)
@given(st.integers(0, 10**6), st.sampled_from(["disc", "sign", "phase"]))
def test_norm_monotone_and_average_real(seed, kind):
    f = CyclicFunction.random(16, rng_for(seed), kind)
    for k in (1, 2, 3):
        avg = gowers_norm_details(f, k).average.value
        assert abs(avg.imag) <= TOL and avg.real >= -TOL
    assert gowers_norm(f, 2) <= gowers_norm(f, 3) + TOL


def test_guard_and_monte_carlo():
    f = CyclicFunction.constant(300)
    assert 300 ** 4 > EXHAUSTIVE_GUARD
    with pytest.raises(GowersError, match="guard"):
        gowers_norm(f, 3)
    d = gowers_norm_details(f, 3, monte_carlo=True, samples=1000, seed=7)
    assert not d.average.exhaustive and d.average.seed == 7 and d.average.samples == 1000
    assert abs(d.value - 1) < TOL


def test_monte_carlo_estimate_is_close():
    f = CyclicFunction.random(40, rng_for(3))
    exact = parallelepiped_average([f] * 4, 2).value
    est = _monte_carlo([f.values, f.values.conj(), f.values.conj(), f.values], 2, 40, 200_000, 0)
    assert abs(est - exact) < 0.02


def test_errors():
    with pytest.raises(GowersError):
        gowers_norm(CyclicFunction.constant(4), 5)
    with pytest.raises(GowersError):
        gowers_inner_product([CyclicFunction.constant(4), CyclicFunction.constant(5)], 1)
    with pytest.raises(GowersError):
        parallelepiped_average([CyclicFunction.constant(4)] * 3, 2)
    with pytest.raises(GowersError):
        correlation(CyclicFunction.constant(4), CyclicFunction.constant(5))
    with pytest.raises(GowersError):
        CyclicFunction(3, [1, 2])


def test_csv_round_trip_and_errors():
    f = CyclicFunction.random(10, rng_for(4))
    g = CyclicFunction.from_csv(f.to_csv())
    assert np.array_equal(f.values, g.values)
    with pytest.raises(GowersError, match="line 1"):
        CyclicFunction.from_csv("x,y,z\n0,1,0\n")
    with pytest.raises(GowersError, match="line 3"):
        CyclicFunction.from_csv("n,re,im\n0,1,0\n1,abc,0\n")
    with pytest.raises(GowersError, match="duplicate"):
        CyclicFunction.from_csv("n,re,im\n0,1,0\n0,1,0\n")
    with pytest.raises(GowersError, match="0..N-1"):
        CyclicFunction.from_csv("n,re,im\n0,1,0\n2,1,0\n")


def test_exact_phase():
    assert e(Fraction(7, 4)) == e(Fraction(3, 4))
    assert abs(e(Fraction(1, 2)) + 1) < 1e-15


def test_nilsequence_values():
    one = nilsequence(lambda p: 1, heisenberg_linear(F(1, 7), F(1, 5)), 32)
    assert np.allclose(one.values, 1)
    a, b = F(1, 7), F(1, 5)
    phi = nilsequence(z_phase, heisenberg_linear(a, b), 64)
    for n in range(64):
        direct = e(-(a * n) * math.floor(b * n))
        assert abs(phi(n) - direct) < 1e-12
    T = TorusNilmanifold(1)
    tor = nilsequence(lambda p: e(p[0]), lambda n: T.reduce((F(3, 11) * n,)), 50)
    assert np.allclose(tor.values, [e(F(3 * n, 11)) for n in range(50)])


def test_correlation_examples():
    f = CyclicFunction.random(32, rng_for(5))
    c = correlation(f, f)
    assert abs(c.imag) < TOL and c.real >= 0
    assert abs(c - np.mean(np.abs(f.values) ** 2)) < TOL
    assert correlation(f, CyclicFunction.constant(32, 0)) == 0
    phi = nilsequence(z_phase, heisenberg_linear(F(1, 7), F(1, 5)), 64)
    assert abs(abs(correlation(phi, phi)) - 1) < TOL
    assert gowers_norm(phi, 3) > 0.5


def test_orbit_parallelepipeds_are_cubes():
    rng = np.random.default_rng(6)
    seq = heisenberg_orbit(F(2, 7), F(3, 5), F(1, 3))
    for _ in range(40):
        x, *hs = (int(v) for v in rng.integers(-20, 20, size=4))
        conf = parallelepiped(seq, x, hs)
        assert nil_cube_membership(conf, HEIS_NIL).is_cube
    lin = heisenberg_linear(F(1, 7), F(1, 5))
    conf = parallelepiped(lin, 3, [4, -2, 9])
    assert nil_cube_membership(conf, HEIS_NIL).is_cube
    assert seq.lift(2) == HEISENBERG.power(heis(F(2, 7), F(3, 5), F(1, 3)), 2)
