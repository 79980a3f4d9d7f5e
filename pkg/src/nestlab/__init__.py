"""Finite-dimensional numerics for nests, nest algebras and pairs of projections."""

from nestlab.errors import NestLabError
from nestlab.linalg import Tolerances, orthonormalize, polar_partial_isometry, rank_tol, spectral_norm
from nestlab.nest_algebra import (
    arveson_distance,
    contains,
    counterexample_family,
    distance_one_certificate,
    kk_distance_estimate,
    nearest_element,
    rank_one_lower_bound,
)
from nestlab.nests import (
    Nest,
    atoms,
    build_similarity,
    nest_distance,
    nest_from_flag,
    random_perturbed_nest,
    recover_order_iso,
    successor,
)
from nestlab.projections import (
    Projection,
    halmos_decompose,
    nearest_in_chain,
    polar_isometry_gap,
    proj_distance_components,
    projection_from_basis,
    rank_complement_check,
)

__version__ = "0.1.0"
