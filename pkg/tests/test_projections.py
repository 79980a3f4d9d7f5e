import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nestlab.errors import DimensionMismatch, NotAProjection, NotOrthogonal, TooFar, UniquenessViolated
from nestlab.generators import random_nest, random_orthogonal_quadruple, random_projection_pair
from nestlab.linalg import adjoint, spectral_norm
from nestlab.projections import (
    Projection,
    halmos_decompose,
    nearest_in_chain,
    polar_isometry_gap,
    proj_distance_components,
    projection_from_basis,
    rank_complement_check,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def line(*v):
    return projection_from_basis(np.array(v, dtype=complex).reshape(-1, 1))


def span(*cols):
    return projection_from_basis(np.column_stack(cols).astype(complex))


E3 = np.eye(3)


# -- projection_from_basis --------------------------------------------------------


def test_coordinate_projection():
    assert np.allclose(line(1, 0).p, np.diag([1, 0]))


def test_line_projection_matches_model_block():
    c, s = 0.6, 0.8
    expected = np.array([[c * c, c * s], [c * s, s * s]])
    assert spectral_norm(line(c, s).p - expected) < 1e-15


def test_full_basis_gives_identity(rng):
    b = rng.standard_normal((3, 3))
    p = projection_from_basis(b)
    assert spectral_norm(p.p - np.eye(3)) < 1e-12 and p.rank == 3


def test_from_matrix_validation():
    with pytest.raises(NotAProjection):
        Projection.from_matrix([[1, 1], [0, 0]])  # idempotent, not Hermitian
    with pytest.raises(NotAProjection):
        Projection.from_matrix([[0.5, 0], [0, 0]])
    assert Projection.from_matrix(np.diag([1.0, 0.0, 1.0])).rank == 2


# -- distance components ----------------------------------------------------------


def test_components_equal():
    p = line(1, 0)
    assert proj_distance_components(p, p) == pytest.approx((0, 0, 0), abs=1e-15)


def test_components_pi_over_6():
    p = line(1, 0)
    q = line(math.cos(math.pi / 6), math.sin(math.pi / 6))
    a, b, d = proj_distance_components(p, q)
    # closed form sin(pi/6); P - Q is real symmetric with eigenvalues +/- sin(theta)
    assert np.linalg.eigvalsh(p.p - q.p).max() == pytest.approx(0.5, abs=1e-15)
    assert (a, b, d) == pytest.approx((0.5, 0.5, 0.5), abs=1e-14)


def test_components_containment():
    p = span(E3[:, 0])
    q = span(E3[:, 0], E3[:, 1])
    a, b, d = proj_distance_components(p, q)
    assert (a, b, d) == pytest.approx((0, 1, 1), abs=1e-14)


def test_components_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        proj_distance_components(line(1, 0), span(E3[:, 0]))


@given(seeds)
@settings(max_examples=100, deadline=None)
def test_distance_is_max_of_corners(seed):
    rng = np.random.default_rng(seed)
    p, q = random_projection_pair(rng, int(rng.integers(2, 17)))
    a, b, d = proj_distance_components(p, q)
    assert d <= 1 + 1e-8
    assert abs(d - max(a, b)) < 1e-8
    if d < 1 - 1e-6:
        assert abs(a - b) < 1e-6
        assert p.rank == q.rank


# -- Halmos decomposition -----------------------------------------------------------


def test_halmos_equal(rng):
    b = rng.standard_normal((5, 2))
    p = projection_from_basis(b)
    h = halmos_decompose(p, p)
    assert (h.d11, h.d00, h.d10, h.d01, h.generic_dim) == (2, 3, 0, 0, 0)


def test_halmos_orthogonal_lines():
    h = halmos_decompose(line(1, 0), line(0, 1))
    assert (h.d10, h.d01, h.d00, h.d11, h.generic_dim) == (1, 1, 0, 0, 0)


@pytest.mark.parametrize("theta", [1e-3, 0.3, 1.0, 1.5])
def test_halmos_single_angle(theta):
    h = halmos_decompose(line(1, 0), line(math.cos(theta), math.sin(theta)))
    # singular value of the 1x1 inner-product matrix is cos(theta)
    assert h.generic_dim == 1
    assert h.angles[0] == pytest.approx(theta, abs=1e-12)


@given(seeds)
@settings(max_examples=100, deadline=None)
def test_halmos_roundtrip(seed):
    rng = np.random.default_rng(seed)
    p, q = random_projection_pair(rng, int(rng.integers(2, 17)))
    h = halmos_decompose(p, q)
    pr, qr = h.reconstruct()
    assert spectral_norm(pr - p.p) < 1e-8
    assert spectral_norm(qr - q.p) < 1e-8
    assert spectral_norm(adjoint(h.w) @ h.w - np.eye(p.dim)) < 1e-8
    assert h.d00 + h.d10 + h.d01 + h.d11 + 2 * h.generic_dim == p.dim
    assert np.allclose(h.c_diag**2 + h.s_diag**2, 1.0)
    assert np.all((h.angles > 0) & (h.angles < math.pi / 2))
    d = spectral_norm(p.p - q.p)
    if h.d10 == h.d01 == 0 and h.generic_dim:
        assert math.sin(h.angles.max()) == pytest.approx(d, abs=1e-8)
    if h.d10 or h.d01:
        assert d == pytest.approx(1.0, abs=1e-8)


# -- partial isometry gap -------------------------------------------------------------


def test_gap_equal():
    p = line(1, 0)
    assert polar_isometry_gap(p, p) == pytest.approx((0.0, 0.0), abs=1e-15)


def test_gap_pi_over_3():
    t = math.pi / 3
    p, q = line(1, 0), line(math.cos(t), math.sin(t))
    gap, predicted = polar_isometry_gap(p, q)
    # U = [[cos t, 0], [sin t, 0]] from the SVD of QP; ||U - P|| = 2 sin(t/2) = 1
    u = np.array([[math.cos(t), 0], [math.sin(t), 0]])
    assert spectral_norm(u - p.p) == pytest.approx(1.0, abs=1e-14)
    assert gap == pytest.approx(1.0, abs=1e-12)
    assert predicted == pytest.approx(1.0, abs=1e-12)


def test_gap_near_right_angle():
    t = math.pi / 2 - 0.01
    gap, predicted = polar_isometry_gap(line(1, 0), line(math.cos(t), math.sin(t)))
    expected = 2 * math.sin(t / 2)
    assert expected == pytest.approx(1.4072, abs=1e-4)
    assert gap == pytest.approx(expected, abs=1e-10)
    assert gap < math.sqrt(2)


def test_gap_too_far():
    with pytest.raises(TooFar):
        polar_isometry_gap(line(1, 0), line(0, 1))


@given(seeds)
@settings(max_examples=100, deadline=None)
def test_gap_closed_form(seed):
    rng = np.random.default_rng(seed)
    p, q = random_projection_pair(rng, int(rng.integers(2, 17)))
    d = spectral_norm(p.p - q.p)
    if d >= 1 - 1e-8:
        return
    gap, predicted = polar_isometry_gap(p, q)
    assert abs(gap**2 - 2 * (1 - math.sqrt(1 - d * d))) < 1e-8
    assert abs(gap - predicted) < 1e-8
    assert gap < math.sqrt(2)


# -- rank complement -------------------------------------------------------------------


def test_rank_complement_example():
    a = math.pi / 4
    p1, p2 = span(E3[:, 0]), span(E3[:, 1])
    q1 = span(math.cos(a) * E3[:, 0] + math.sin(a) * E3[:, 2])
    q2 = span(E3[:, 1])
    rep = rank_complement_check(p1, p2, q1, q2)
    # (P1+P2)^perp = span e3; (Q1+Q2)^perp = span(-sin a e1 + cos a e3)
    assert rep.rank_p_complement == rep.rank_q_complement == 1
    assert rep.index == 0
    assert rep.gap < math.sqrt(2)


def test_rank_complement_identity():
    p1, p2 = span(E3[:, 0]), span(E3[:, 1], E3[:, 2])
    rep = rank_complement_check(p1, p2, p1, p2)
    assert rep.gap == pytest.approx(0.0, abs=1e-14)
    assert rep.rank_p_complement == rep.rank_q_complement == 0


def test_rank_complement_too_far():
    with pytest.raises(TooFar):
        rank_complement_check(span(E3[:, 0]), span(E3[:, 1]), span(E3[:, 0], E3[:, 2]), span(E3[:, 1]))


def test_rank_complement_not_orthogonal():
    with pytest.raises(NotOrthogonal):
        rank_complement_check(span(E3[:, 0]), span(E3[:, 0] + E3[:, 1]), span(E3[:, 0]), span(E3[:, 1]))


@given(seeds)
@settings(max_examples=100, deadline=None)
def test_rank_complement_property(seed):
    rng = np.random.default_rng(seed)
    quad = random_orthogonal_quadruple(rng, int(rng.integers(3, 13)))
    try:
        rep = rank_complement_check(*quad)
    except TooFar:
        return
    assert rep.rank_p_complement == rep.rank_q_complement
    assert rep.index == 0
    assert rep.gap <= rep.gap_estimate + 1e-12
    assert rep.gap < math.sqrt(2) - 1e-9


# -- nearest in chain ---------------------------------------------------------------------


def chain2():
    return [Projection.zero(2), line(1, 0), Projection.identity(2)]


def test_chain_member():
    ch = chain2()
    assert nearest_in_chain(ch[1], ch) == 1


def test_chain_small_angle():
    t = 0.05
    assert nearest_in_chain(line(math.cos(t), math.sin(t)), chain2()) == 1


def test_chain_diagonal_in_c3():
    chain = [Projection.zero(3), span(E3[:, 0]), span(E3[:, 0], E3[:, 1]), Projection.identity(3)]
    p = span((E3[:, 0] + E3[:, 1]) / math.sqrt(2))
    dists = [np.linalg.svd(p.p - q.p, compute_uv=False)[0] for q in chain]
    assert dists == pytest.approx([1, math.sqrt(0.5), 1, 1], abs=1e-12)
    assert nearest_in_chain(p, chain) == 1


def test_chain_none():
    assert nearest_in_chain(line(0, 1), [Projection.zero(2), line(1, 0), Projection.identity(2)]) is None


def test_chain_uniqueness_violation_signalled():
    # Not a chain: two copies of the same line.
    p = line(1, 0)
    with pytest.raises(UniquenessViolated):
        nearest_in_chain(p, [p, p])


@given(seeds)
@settings(max_examples=100, deadline=None)
def test_chain_never_two(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 10))
    n = random_nest(rng, d)
    p, _ = random_projection_pair(rng, d)
    nearest_in_chain(p, n.elements)
