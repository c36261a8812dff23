"""Finite cubespaces: construction, certification, quotients and structure groups."""

from .canonical import (
    Partition,
    Tower,
    canonical_quotient,
    canonical_relation,
    canonical_tower,
    fiber_surjectivity,
    partition_from_blocks,
    quotient_cubespace,
)
from .checks import (
    NotAMorphism,
    certify_cubespace,
    certify_nilspace,
    check_completion,
    check_ergodic,
    check_fibration,
    check_glueing,
    check_morphism,
    check_relative_ergodicity,
    check_uniqueness,
    enumerate_corners,
    high_cube_membership,
    lift_partial,
    relative_uniqueness_degree,
    tricube_outer,
    uniqueness_degree,
)
from .space import (
    CertificationRequired,
    CubespaceError,
    CubespaceMap,
    FiniteCubespace,
    build_ds_cubespace,
    build_hk_cubespace,
    constant_map,
    edge_cubespace,
    full_space,
    identity_map,
    induced_subspace,
    modular_map,
    one_point_space,
    product_cubespace,
)
from .structure import StructureGroupResult, invariant_factors, structure_group
from .textio import FormatError, read_cubespace, read_map, write_cubespace, write_map
