from __future__ import annotations

import itertools

import numpy as np
import pytest

from nilcube.cube import submasks
from nilcube.cubespace import (
    CertificationRequired,
    CubespaceMap,
    build_ds_cubespace,
    canonical_quotient,
    canonical_relation,
    canonical_tower,
    certify_nilspace,
    check_fibration,
    check_morphism,
    fiber_surjectivity,
    identity_map,
    lift_partial,
    partition_from_blocks,
    product_cubespace,
    quotient_cubespace,
    structure_group,
)
from nilcube.cubespace.canonical import replacement_report
from nilcube.cubespace.checks import NotAMorphism, relative_uniqueness_degree
from nilcube.cubespace.space import constant_map, modular_map
from nilcube.cubespace.structure import PreconditionError, is_isomorphic_to_cyclic

import oracles


@pytest.fixture(scope="module")
def ds():
    cache = {}

    def get(n, s, k_max=None):
        key = (n, s, k_max)
        if key not in cache:
            cache[key] = certify_nilspace(build_ds_cubespace(n, s, k_max))[0]
        return cache[key]
    return get


@pytest.fixture(scope="module")
def product():
    P = product_cubespace(build_ds_cubespace(2, 1, 3), build_ds_cubespace(2, 2, 3))
    return certify_nilspace(P)[0]


def blocks(part, X):
    return sorted(part.label(X, b) for b in range(len(part)))


# -- canonical relations and quotients ------------------------------------------


def test_canonical_relation_examples(ds):
    assert len(canonical_relation(ds(3, 2), 1)) == 1
    assert blocks(canonical_relation(ds(3, 2), 2), ds(3, 2)) == ["{0}", "{1}", "{2}"]
    assert len(canonical_relation(ds(4, 1), 0)) == 1


def test_canonical_relation_needs_certification():
    with pytest.raises(CertificationRequired):
        canonical_relation(build_ds_cubespace(2, 1), 0)


def test_relation_matches_pairs_of_cubes(product):
    """x ~_s y iff two (s+1)-cubes agree off the top and end at x and y."""
    for s in (0, 1, 2):
        part = canonical_relation(product, s)
        by_corner = {}
        for c in oracles.cube_set(product, s + 1):
            by_corner.setdefault(c[:-1], set()).add(c[-1])
        related = {(x, y) for tops in by_corner.values() for x in tops for y in tops}
        for x in range(product.n):
            for y in range(product.n):
                assert part.same(x, y) == ((x, y) in related)


@pytest.mark.parametrize("n,s", [(2, 1), (3, 1), (4, 1), (2, 2), (3, 2)])
def test_replacement_and_quotient_uniqueness(ds, n, s):
    X = ds(n, s)
    for t in range(0, s + 1):
        part = canonical_relation(X, t)
        for k in range(1, min(t + 1, X.k_max) + 1):
            assert replacement_report(X, part, k).ok
        Q = quotient_cubespace(X, part).target
        assert oracles.uniqueness_pairs(Q, t + 1) == []


def test_quotient_by_singletons_is_a_copy(ds):
    X = ds(3, 1)
    part = partition_from_blocks(X, [[p] for p in X.labels])
    p = quotient_cubespace(X, part)
    assert p.target.labels == ("{0}", "{1}", "{2}")
    assert all(np.array_equal(a, b) for a, b in zip(p.target.cubes, X.cubes))


def test_quotient_to_a_point(ds):
    p = canonical_quotient(ds(3, 2), 1)
    assert p.target.n == 1
    assert all(p.target.count(k) == 1 for k in range(1, p.target.k_max + 1))


def test_quotient_by_subgroup_cosets(ds):
    X = ds(4, 1)
    p = quotient_cubespace(X, partition_from_blocks(X, [["0", "2"], ["1", "3"]]))
    Q = p.target
    assert Q.labels == ("{0,2}", "{1,3}")
    Z2 = build_ds_cubespace(2, 1)
    for k in range(1, Q.k_max + 1):
        assert oracles.cube_set(Q, k) == oracles.cube_set(Z2, k)


def test_tower_examples(ds, product):
    assert canonical_tower(ds(3, 2)).heights == [3, 1, 1]
    assert canonical_tower(ds(4, 1)).heights == [4, 1]
    tower = canonical_tower(product)
    assert tower.report.ok
    assert tower.heights == [4, 2, 1]
    pi1 = tower.factor(1)
    assert sorted(pi1.target.labels) == ["{(0,0),(0,1)}", "{(1,0),(1,1)}"]


def test_tower_nesting_exhaustive(product):
    """~_s refines ~_t for t < s, and pi_t(pi_s X) = pi_t X."""
    rel = {s: canonical_relation(product, s) for s in range(3)}
    for s in range(3):
        for t in range(s):
            for x in range(product.n):
                for y in range(product.n):
                    if rel[s].same(x, y):
                        assert rel[t].same(x, y)
        Q = certify_nilspace(canonical_quotient(product, s).target)[0]
        proj = canonical_quotient(product, s).mapping
        for t in range(s):
            inner = canonical_relation(Q, t)
            for x in range(product.n):
                for y in range(product.n):
                    assert inner.same(proj[x], proj[y]) == rel[t].same(x, y)


def test_tower_requires_fibrancy():
    with pytest.raises(CertificationRequired):
        canonical_tower(build_ds_cubespace(2, 1))


# -- fibrations ----------------------------------------------------------------


def test_identity_is_a_fibration(ds):
    assert check_fibration(identity_map(ds(3, 1))).ok


def test_mod_two_reduction(ds):
    f = modular_map(ds(4, 1), ds(2, 1), 2)
    assert check_fibration(f).ok
    assert fiber_surjectivity(f).ok


def test_identity_carrier_is_not_a_fibration(ds):
    X, Y = ds(2, 1), ds(2, 2)
    f = CubespaceMap(X, Y, np.arange(2))
    assert check_morphism(f).ok
    assert check_fibration(f, 1).ok
    rep = check_fibration(f, 2)
    assert not rep.ok
    assert all(item.location.startswith("k=2") for item in rep.items)
    assert not fiber_surjectivity(f).ok


def test_non_morphism_is_rejected(ds):
    X, Y = ds(2, 2), ds(2, 1)
    with pytest.raises(NotAMorphism):
        check_fibration(CubespaceMap(X, Y, np.arange(2)))


def test_universal_property_mod_tower():
    Z8, Z4, Z2 = (certify_nilspace(build_ds_cubespace(n, 1, 3))[0] for n in (8, 4, 2))
    f = modular_map(Z8, Z4, 4)
    g = modular_map(Z4, Z2, 2)
    assert check_fibration(f).ok
    assert check_fibration(f.then(g)).ok
    assert check_fibration(g).ok


def _maps(ds, product):
    X, Y = ds(2, 1), ds(2, 2)
    pairs = [
        modular_map(ds(4, 1), ds(2, 1), 2),
        CubespaceMap(X, Y, np.arange(2)),
        CubespaceMap(Y, X, np.arange(2)) if check_morphism(CubespaceMap(Y, X, np.arange(2))).ok else None,
        identity_map(ds(3, 2)),
        constant_map(ds(3, 1)),
    ]
    tower = canonical_tower(product)
    for t in range(3):
        p = tower.factor(t)
        pairs.append(CubespaceMap(product, certify_nilspace(p.target)[0], p.mapping))
    # projection of the product onto its first factor
    first = np.array([int(lab[1]) for lab in product.labels])
    pairs.append(CubespaceMap(product, certify_nilspace(build_ds_cubespace(2, 1, 3))[0], first))
    return [p for p in pairs if p is not None]


def test_fibration_iff_fiber_surjective(ds, product):
    for f in _maps(ds, product):
        Y = f.target
        if Y.certified_degree is None:
            Y = certify_nilspace(Y)[0]
            f = CubespaceMap(f.source, Y, f.mapping)
        top = min(3, f.source.k_max, Y.k_max)
        fib = check_fibration(f, top).ok
        assert fib == fiber_surjectivity(f, top - 1).ok


def test_relative_degree(ds):
    f = modular_map(ds(4, 1), ds(2, 1), 2)
    assert relative_uniqueness_degree(f) == 1
    assert relative_uniqueness_degree(constant_map(ds(3, 2))) == 2


# -- lifting partial cubes ---------------------------------------------------------


def _check_lifting(f, k):
    X, Y = f.source, f.target
    sets = oracles.downsets(k)
    cases = 0
    for T in sets:
        Bs = oracles.partial_cubes(Y, k, T)
        for S in sets:
            if not S <= T:
                continue
            As = oracles.partial_cubes(X, k, S)
            for B in Bs:
                for A in As:
                    if any(f.mapping[A[w]] != B[w] for w in S):
                        continue
                    ext = lift_partial(f, A, B, k)
                    assert set(ext) == set(T)
                    assert all(ext[w] == A[w] for w in S)
                    assert all(f.mapping[ext[w]] == B[w] for w in T)
                    assert oracles.is_partial_cube(X, k, ext)
                    cases += 1
    return cases


@pytest.mark.parametrize("k", [1, 2])
def test_lifting_exhaustive_small(ds, k):
    assert _check_lifting(modular_map(ds(4, 1), ds(2, 1), 2), k) > 0
    assert _check_lifting(constant_map(ds(3, 1)), k) > 0


@pytest.mark.slow
def test_lifting_exhaustive_three(ds):
    assert _check_lifting(modular_map(ds(4, 1), ds(2, 1), 2), 3) > 0


def test_lifting_rejects_non_downsets(ds):
    from nilcube.cubespace import CubespaceError
    f = constant_map(ds(2, 1))
    with pytest.raises(CubespaceError):
        lift_partial(f, {1: 0}, {0: 0, 1: 0}, 1)


# -- structure groups ---------------------------------------------------------------


def test_structure_group_of_z4(ds):
    G = structure_group(ds(4, 1), 1)
    assert G.invariant_factors == (4,)
    assert G.isomorphism_type == "Z/4"
    assert oracles.cyclic_isomorphism(G.table, G.identity, 4)
    assert is_isomorphic_to_cyclic(G, 4)
    assert G.report.ok


def test_structure_group_of_degree_two(ds):
    G = structure_group(ds(3, 2), 2)
    assert G.invariant_factors == (3,)
    assert oracles.cyclic_isomorphism(G.table, G.identity, 3)
    assert canonical_quotient(ds(3, 2), 1).target.n == 1


def test_relative_structure_group(ds):
    f = modular_map(ds(4, 1), ds(2, 1), 2)
    G = structure_group(f, 1)
    assert G.invariant_factors == (2,)
    assert oracles.cyclic_isomorphism(G.table, G.identity, 2)
    for fiber in f.fibers():
        assert len(fiber) == 2
        for x in fiber:
            orbit = {int(G.action[a, x]) for a in range(G.order)}
            assert orbit == set(fiber.tolist())


@pytest.mark.parametrize("moduli,factors", [((2, 2), (2, 2)), ((2, 4), (2, 4)), ((3,), (3,)), ((6,), (6,))])
def test_invariant_factors(moduli, factors):
    X = certify_nilspace(build_ds_cubespace(moduli, 1, 2))[0]
    G = structure_group(X, 1)
    assert G.invariant_factors == factors


def test_structure_group_laws(ds):
    G = structure_group(ds(4, 1), 1)
    n = G.order
    for a, b in itertools.product(range(n), repeat=2):
        assert G.add(a, b) == G.add(b, a)
        for c in range(n):
            assert G.add(G.add(a, b), c) == G.add(a, G.add(b, c))
        assert np.array_equal(G.action[G.add(a, b)], G.action[a][G.action[b]])
    for a in range(n):
        assert G.add(a, G.negate(a)) == G.identity
        moved = [int(G.action[a, x]) for x in range(4)]
        if a != G.identity:
            assert all(m != x for x, m in enumerate(moved))  # free


def test_structure_group_preconditions(ds):
    with pytest.raises(PreconditionError):
        structure_group(ds(3, 2), 1)
    with pytest.raises(PreconditionError):
        structure_group(build_ds_cubespace(3, 1), 1)


def _difference_oracle(f, G, k, base_cube, n):
    """Lifts c' of f(c): cube iff the differences a(w), with c'(w) = a(w).c(w),
    form a cube of D_s(Z/n) under an isomorphism A -> Z/n."""
    X = f.source
    gen = next(a for a in range(G.order) if G.element_order(a) == n)
    to_int = {G.multiple(gen, m): m for m in range(n)}
    D = build_ds_cubespace(n, G.s, k)
    for diff in itertools.product(range(G.order), repeat=1 << k):
        moved = [int(G.action[d, x]) for d, x in zip(diff, base_cube)]
        lhs = X.is_cube(moved)
        rhs = D.is_cube([to_int[d] for d in diff])
        assert lhs == rhs


@pytest.mark.parametrize("case", ["z4", "z3_deg2", "mod2"])
def test_relative_cube_characterization_exhaustive(ds, case):
    if case == "z4":
        X = ds(4, 1)
        f = constant_map(X)
        G, n = structure_group(X, 1), 4
    elif case == "z3_deg2":
        X = ds(3, 2)
        f = constant_map(X)
        G, n = structure_group(X, 2), 3
    else:
        f = modular_map(ds(4, 1), ds(2, 1), 2)
        X = f.source
        G, n = structure_group(f, 1), 2
    kmax = min(X.k_max, 3 if n <= 3 else 2)
    for k in range(1, kmax + 1):
        for row in X.cubes[k][:: max(1, X.count(k) // 3)]:
            _difference_oracle(f, G, k, [int(v) for v in row], n)


@pytest.mark.parametrize("case", ["mod2_deg1", "mod2_deg2", "to_point"])
def test_relative_quotient_is_fibration(ds, case):
    if case == "mod2_deg1":
        f = modular_map(ds(4, 1), ds(2, 1), 2)
    elif case == "mod2_deg2":
        f = modular_map(ds(4, 2, 3), ds(2, 2, 3), 2)
    else:
        f = constant_map(ds(3, 2))
        f = CubespaceMap(f.source, certify_nilspace(f.target)[0], f.mapping)
    X, Y = f.source, f.target
    for s in range(X.certified_degree + 1):
        part = canonical_relation(X, s, f)
        for x, y in itertools.product(range(X.n), repeat=2):
            if part.same(x, y):
                assert f.mapping[x] == f.mapping[y]
        p = quotient_cubespace(X, part)
        Q = certify_nilspace(p.target)[0]
        assert Q.certified_degree is not None
        proj = CubespaceMap(X, Q, p.mapping)
        assert check_fibration(proj, 3).ok
        down = np.zeros(Q.n, dtype=np.int64)
        down[p.mapping] = f.mapping
        assert check_fibration(CubespaceMap(Q, Y, down), 3).ok
