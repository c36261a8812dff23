from __future__ import annotations

from itertools import combinations

import pytest
from hypothesis import given, strategies as st

from nilcube.cube import (
    COPY,
    FLIP,
    ONE,
    ZERO,
    CubeMorphism,
    DimensionError,
    Face,
    all_morphisms,
    apply_morphism,
    canonical_subset_order,
    faces,
    generating_morphisms,
    is_downward_closed,
    lower_faces,
    respects_inclusion,
    restrict,
    upper_face,
)


def test_identity_morphism_leaves_config():
    c = tuple("abcdefgh")
    assert apply_morphism(c, CubeMorphism.identity(3)) == c


def test_projection_drops_second_coordinate():
    # {0,1}^2 -> {0,1}^1 pulled back: the edge along coordinate 1 at w2 = 0
    rho = CubeMorphism(1, 2, ((COPY, 0), (ZERO, None)))
    square = ("x00", "x10", "x01", "x11")  # mask order: bit 0 is w1
    assert apply_morphism(square, rho) == ("x00", "x10")


def test_duplication_stacks_two_copies():
    rho = CubeMorphism(3, 2, ((COPY, 0), (COPY, 1)))
    square = (1, 2, 3, 4)
    assert apply_morphism(square, rho) == square + square


def test_dimension_mismatch_is_an_error():
    with pytest.raises(DimensionError):
        apply_morphism((1, 2), CubeMorphism.identity(2))


def test_subset_order_small_cases():
    assert canonical_subset_order(0) == (0,)
    assert canonical_subset_order(1) == (0, 1)
    assert canonical_subset_order(2) == (0, 1, 2, 3)
    assert canonical_subset_order(3) == (0, 1, 2, 4, 3, 5, 6, 7)


@pytest.mark.parametrize("k", range(7))
def test_subset_order_respects_inclusion(k):
    order = canonical_subset_order(k)
    assert sorted(order) == list(range(1 << k))
    pos = {s: i for i, s in enumerate(order)}
    for a in order:
        for b in order:
            if a & b == a:
                assert pos[a] <= pos[b]
    assert respects_inclusion(order)


def test_downward_closed_examples():
    assert is_downward_closed({0}, 3)
    assert is_downward_closed(set(range(7)), 3)
    assert not is_downward_closed({1}, 1)
    assert is_downward_closed(set(), 2)


def test_upper_face_and_codimension():
    f = upper_face(3, 0b101)
    assert f.is_upper()
    assert f.codim == 2 and f.dim == 1
    assert f.vertices() == [0b101, 0b111]
    assert [g.vertices() for g in lower_faces(2)] == [[0, 2], [0, 1]]


@pytest.mark.parametrize("dim", range(4))
def test_face_restriction_is_an_injective_pullback(dim):
    c = tuple(range(8))
    for face in faces(3, dim):
        emb = face.embedding()
        assert len(set(emb.table())) == 1 << dim
        assert apply_morphism(c, emb) == restrict(c, face)


def test_face_count():
    # a k-cube has C(k, d) 2^(k-d) faces of dimension d
    assert sum(1 for _ in faces(3, 1)) == 12
    assert sum(1 for _ in faces(4, 2)) == 24


morphism_tags = st.sampled_from([ZERO, ONE, COPY, FLIP])


@st.composite
def morphisms(draw, k_in, k_out):
    coords = []
    for _ in range(k_out):
        tag = draw(morphism_tags)
        if tag in (ZERO, ONE) or k_in == 0:
            coords.append((tag if tag in (ZERO, ONE) else ZERO, None))
        else:
            coords.append((tag, draw(st.integers(0, k_in - 1))))
    return CubeMorphism(k_in, k_out, tuple(coords))


@given(st.data(), st.integers(0, 3), st.integers(0, 3), st.integers(0, 3))
def test_pullback_composes(data, a, b, c):
    rho = data.draw(morphisms(a, b))
    sigma = data.draw(morphisms(b, c))
    config = tuple(range(1 << c))
    assert apply_morphism(apply_morphism(config, sigma), rho) == apply_morphism(config, rho.then(sigma))
    for w in range(1 << a):
        assert rho.then(sigma)(w) == sigma(rho(w)) < 1 << c


def test_morphism_count():
    assert sum(1 for _ in all_morphisms(2, 2)) == 36


def test_generators_stay_in_range():
    for rho in generating_morphisms(3):
        assert rho.k_in <= 3 and rho.k_out <= 3


def test_face_rejects_values_outside_fixed():
    with pytest.raises(DimensionError):
        Face(2, 0b01, 0b10)


def test_bad_morphism_index():
    with pytest.raises(DimensionError):
        CubeMorphism(1, 1, ((COPY, 3),))


def test_all_pairs_of_generators_generate_small_monoid():
    """Composites of generators reach every morphism table between
    dimensions <= 2."""
    gens = list(generating_morphisms(2))
    reached = {(g.k_in, g.k_out, g.table()) for g in gens}
    reached |= {(k, k, CubeMorphism.identity(k).table()) for k in range(3)}
    frontier = list(gens) + [CubeMorphism.identity(k) for k in range(3)]
    while frontier:
        new = []
        for f in frontier:
            for g in gens:
                if g.k_in == f.k_out:
                    h = f.then(g)
                    key = (h.k_in, h.k_out, h.table())
                    if key not in reached:
                        reached.add(key)
                        new.append(h)
        frontier = new
    target = {(a, b, r.table()) for a in range(3) for b in range(3) for r in all_morphisms(a, b)}
    assert target <= reached
