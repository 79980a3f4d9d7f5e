"""Geometry of pairs of orthogonal projections.

Covers the norm of a difference of projections and its two corner pieces,
the Halmos canonical form of a pair, the distance from ``P`` to the polar
partial isometry of ``QP``, rank accounting for two orthogonal pairs, and
the "at most one close element per chain" uniqueness statement.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import null_space

from nestlab.errors import (
    DimensionMismatch,
    NotAProjection,
    NotOrthogonal,
    TooFar,
    UniquenessViolated,
)
from nestlab.linalg import (
    DEFAULT_TOL,
    Tolerances,
    adjoint,
    as_matrix,
    orthonormalize,
    polar_partial_isometry,
    rank_tol,
    spectral_norm,
)


@dataclass(frozen=True, eq=False)
class Projection:
    """Orthogonal projection on ``C^dim``.

    Build with :meth:`from_matrix` (validates) or
    :func:`projection_from_basis` (valid by construction).
    """

    p: np.ndarray
    rank: int

    @property
    def dim(self) -> int:
        return self.p.shape[0]

    @classmethod
    def from_matrix(cls, p, tol: Tolerances = DEFAULT_TOL) -> "Projection":
        p = as_matrix(p)
        if p.shape[0] != p.shape[1]:
            raise NotAProjection(f"projection must be square, got {p.shape}")
        herm = spectral_norm(p - adjoint(p))
        if herm >= tol.eq_abs:
            raise NotAProjection(f"not Hermitian (||P - P*|| = {herm:.3g})")
        idem = spectral_norm(p @ p - p)
        if idem >= tol.eq_abs:
            raise NotAProjection(f"not idempotent (||P^2 - P|| = {idem:.3g})")
        return cls(p, rank_tol(p, tol))

    @classmethod
    def zero(cls, dim: int) -> "Projection":
        return cls(np.zeros((dim, dim), complex), 0)

    @classmethod
    def identity(cls, dim: int) -> "Projection":
        return cls(np.eye(dim, dtype=complex), dim)

    def complement(self) -> "Projection":
        return Projection(np.eye(self.dim) - self.p, self.dim - self.rank)

    def basis(self) -> np.ndarray:
        """Orthonormal basis of the range (``dim x rank``)."""
        if self.rank == 0:
            return np.zeros((self.dim, 0), complex)
        w, v = np.linalg.eigh(self.p)
        return v[:, np.argsort(w)[::-1][: self.rank]]

    def __sub__(self, other: "Projection") -> np.ndarray:
        return self.p - other.p


def projection_from_basis(vectors, tol: Tolerances = DEFAULT_TOL) -> Projection:
    """Orthogonal projection onto the column span of ``vectors``."""
    q = orthonormalize(vectors, tol)
    p = q @ adjoint(q)
    # symmetrise away rounding so P = P* holds exactly
    p = 0.5 * (p + adjoint(p))
    return Projection(p, q.shape[1])


def _check_dims(*ps: Projection) -> None:
    dims = {x.dim for x in ps}
    if len(dims) != 1:
        raise DimensionMismatch(f"projections act on different spaces: {sorted(dims)}")


def proj_distance_components(p: Projection, q: Projection):
    """``(||P Q^perp||, ||P^perp Q||, ||P - Q||)``.

    The third entry is the max of the first two; when it is below one the
    first two agree.
    """
    _check_dims(p, q)
    eye = np.eye(p.dim)
    d_pq_perp = spectral_norm(p.p @ (eye - q.p))
    d_pperp_q = spectral_norm((eye - p.p) @ q.p)
    return d_pq_perp, d_pperp_q, spectral_norm(p.p - q.p)


def proj_distance(p: Projection, q: Projection) -> float:
    _check_dims(p, q)
    return spectral_norm(p.p - q.p)


@dataclass(frozen=True, eq=False)
class HalmosDecomposition:
    """Canonical form of a pair of projections.

    Columns of ``w`` are ordered as the blocks ``H00, H10, H01, H11``
    followed by the generic part: first the ``g`` vectors ``x_i`` in the
    range of ``P``, then their partners ``f_i`` in the kernel of ``P``.
    On ``span{x_i, f_i}`` the pair is ``P = [[1, 0], [0, 0]]`` and
    ``Q = [[c^2, cs], [cs, s^2]]``.
    """

    w: np.ndarray
    d00: int
    d10: int
    d01: int
    d11: int
    angles: np.ndarray
    c_diag: np.ndarray = field(repr=False)
    s_diag: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.w.shape[0]

    @property
    def generic_dim(self) -> int:
        return len(self.angles)

    def _corner_diag(self, p_side: bool) -> np.ndarray:
        if p_side:
            flags = [0] * self.d00 + [1] * self.d10 + [0] * self.d01 + [1] * self.d11
        else:
            flags = [0] * self.d00 + [0] * self.d10 + [1] * self.d01 + [1] * self.d11
        return np.asarray(flags, dtype=float)

    def p_block(self) -> np.ndarray:
        """``P`` written in the ``w`` basis."""
        g = self.generic_dim
        diag = np.concatenate([self._corner_diag(True), np.ones(g), np.zeros(g)])
        return np.diag(diag).astype(complex)

    def q_block(self) -> np.ndarray:
        """``Q`` written in the ``w`` basis."""
        g = self.generic_dim
        k = self.dim - 2 * g
        out = np.zeros((self.dim, self.dim), complex)
        out[:k, :k] = np.diag(self._corner_diag(False))
        c, s = self.c_diag, self.s_diag
        gi = np.arange(k, k + g)
        fi = gi + g
        out[gi, gi] = c * c
        out[fi, fi] = s * s
        out[gi, fi] = c * s
        out[fi, gi] = c * s
        return out

    def reconstruct(self):
        """``(w P_block w*, w Q_block w*)``; should equal the inputs."""
        wh = adjoint(self.w)
        return self.w @ self.p_block() @ wh, self.w @ self.q_block() @ wh


def halmos_decompose(
    p: Projection, q: Projection, tol: Tolerances = DEFAULT_TOL
) -> HalmosDecomposition:
    """Split ``C^n`` into the four corner spaces and the generic part.

    Principal cosines come from the SVD of ``Bp* Bq``; the matching sines
    are measured directly as ``||P^perp y_i||`` so that small angles keep
    full relative accuracy.  A direction whose sine (or cosine) is at most
    ``rank_rel`` is assigned to a corner block.
    """
    _check_dims(p, q)
    n = p.dim
    eye = np.eye(n)
    bp, bq = p.basis(), q.basis()
    rp, rq = bp.shape[1], bq.shape[1]
    if rp and rq:
        u, cos, vh = np.linalg.svd(adjoint(bp) @ bq)
        v = adjoint(vh)
    else:
        u, cos, v = np.eye(rp, dtype=complex), np.zeros(0), np.eye(rq, dtype=complex)
    cos = np.clip(cos, 0.0, 1.0)
    m = cos.size
    x_all = bp @ u  # in range P
    y_all = bq @ v  # in range Q
    sin = np.array([np.linalg.norm((eye - p.p) @ y_all[:, i]) for i in range(m)])

    h11 = [i for i in range(m) if sin[i] <= tol.rank_rel]
    low = [i for i in range(m) if sin[i] > tol.rank_rel and cos[i] <= tol.rank_rel]
    generic = [i for i in range(m) if sin[i] > tol.rank_rel and cos[i] > tol.rank_rel]

    h10 = x_all[:, low + list(range(m, rp))]
    h01 = y_all[:, low + list(range(m, rq))]
    h11_vecs = x_all[:, h11]

    c = cos[generic]
    s = sin[generic]
    xg = x_all[:, generic]
    fg = (eye - p.p) @ y_all[:, generic] / s[None, :] if generic else np.zeros((n, 0))
    if generic:
        # Re-orthonormalise the partners against rounding (closest isometry).
        fg, _ = polar_partial_isometry(fg, tol)

    known = np.hstack([h10, h01, h11_vecs, xg, fg])
    h00 = null_space(adjoint(known)) if known.shape[1] else np.eye(n, dtype=complex)
    h00 = h00[:, : n - known.shape[1]]

    w = np.hstack([h00, h10, h01, h11_vecs, xg, fg]).astype(complex)
    angles = np.arctan2(s, c)
    return HalmosDecomposition(
        w=w,
        d00=h00.shape[1],
        d10=h10.shape[1],
        d01=h01.shape[1],
        d11=h11_vecs.shape[1],
        angles=angles,
        c_diag=np.cos(angles),
        s_diag=np.sin(angles),
    )


def polar_isometry_gap(p: Projection, q: Projection, tol: Tolerances = DEFAULT_TOL):
    """Distance from ``P`` to the partial isometry ``U`` in ``QP = U|QP|``.

    Returns ``(gap, predicted)`` where ``predicted = 2 sin(theta/2)`` with
    ``sin(theta) = ||P - Q||``.  Both stay below ``sqrt(2)``.

    Raises
    ------
    TooFar
        If ``||P - Q|| >= 1 - eq_abs``.
    """
    d = proj_distance(p, q)
    if d >= 1.0 - tol.eq_abs:
        raise TooFar(f"||P - Q|| = {d:.12g} is not below 1")
    u, _ = polar_partial_isometry(q.p @ p.p, tol)
    gap = spectral_norm(u - p.p)
    predicted = 2.0 * np.sin(np.arcsin(min(d, 1.0)) / 2.0)
    return gap, float(predicted)


@dataclass(frozen=True, eq=False)
class RankCheckReport:
    rank_p_complement: int
    rank_q_complement: int
    u: np.ndarray
    gap: float
    index: int
    component_gaps: tuple = (0.0, 0.0)

    @property
    def gap_estimate(self) -> float:
        """``sqrt(||U1 - P1||^2 + ||U2 - P2||^2)``, an upper bound for ``gap``."""
        g1, g2 = self.component_gaps
        return float(np.hypot(g1, g2))


def rank_complement_check(
    p1: Projection,
    p2: Projection,
    q1: Projection,
    q2: Projection,
    tol: Tolerances = DEFAULT_TOL,
) -> RankCheckReport:
    """Compare ``rank (P1+P2)^perp`` and ``rank (Q1+Q2)^perp``.

    With ``U = U1 + U2`` built from the polar parts of ``Q_i P_i``, the
    index is ``nullity(U on (P1+P2)H) - codim(range U in (Q1+Q2)H)``.
    """
    _check_dims(p1, p2, q1, q2)
    for a, b, label in ((p1, p2, "P1, P2"), (q1, q2, "Q1, Q2")):
        if spectral_norm(a.p @ b.p) >= tol.eq_abs:
            raise NotOrthogonal(f"{label} are not orthogonal")
    for a, b, label in ((p1, q1, "P1, Q1"), (p2, q2, "P2, Q2")):
        d = proj_distance(a, b)
        if d >= 1.0 - tol.eq_abs:
            raise TooFar(f"||{label.replace(', ', ' - ')}|| = {d:.12g} is not below 1")

    u1, _ = polar_partial_isometry(q1.p @ p1.p, tol)
    u2, _ = polar_partial_isometry(q2.p @ p2.p, tol)
    u = u1 + u2
    p_sum = p1.p + p2.p
    q_sum = q1.p + q2.p
    n = p1.dim
    rank_p = rank_tol(p_sum, tol)
    rank_q = rank_tol(q_sum, tol)
    rank_u = rank_tol(u, tol)
    nullity = rank_p - rank_tol(u @ p_sum, tol)
    codim = rank_q - rank_u
    return RankCheckReport(
        rank_p_complement=n - rank_p,
        rank_q_complement=n - rank_q,
        u=u,
        gap=spectral_norm(u - p_sum),
        index=nullity - codim,
        component_gaps=(spectral_norm(u1 - p1.p), spectral_norm(u2 - p2.p)),
    )


def nearest_in_chain(
    p: Projection, chain: Sequence[Projection], tol: Tolerances = DEFAULT_TOL
) -> Optional[int]:
    """Index of the only chain element within distance ``< 1`` of ``p``.

    Returns ``None`` if no element qualifies.

    Raises
    ------
    UniquenessViolated
        If two elements qualify, which cannot happen for a genuine chain.
    """
    hits = [i for i, q in enumerate(chain) if proj_distance(p, q) < 1.0 - tol.eq_abs]
    if len(hits) > 1:
        raise UniquenessViolated(f"chain elements {hits} are all within distance 1")
    return hits[0] if hits else None
