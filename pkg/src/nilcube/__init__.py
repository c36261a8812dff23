"""Exact computations with cubes: Host-Kra groups, nilmanifolds, finite
nilspaces, polynomial sequences and Gowers norms."""

from .cube import CubeMorphism, DimensionError, Face, canonical_subset_order
from .groups import (
    HEISENBERG,
    AbelianGroup,
    FilteredGroup,
    Heis,
    HeisenbergGroup,
    cyclic,
    finite_abelian,
    heis,
    integers,
    lookup_group,
    rationals,
    torus,
)
from .hostkra import (
    CornerError,
    complete,
    face_coordinates,
    hk_corner_complete,
    hk_membership,
    is_hk_cube,
    vertex_coordinates,
)
from .nilmanifold import (
    HEIS_NIL,
    HeisenbergNilmanifold,
    InconsistencyError,
    TorusNilmanifold,
    heisenberg_cocycle,
    nil_corner_complete,
    nil_cube_membership,
    reduce,
)
from .report import Report

__version__ = "0.1.0"
