"""Seeded random instances for the property suites and tests."""

from __future__ import annotations

import numpy as np

from nestlab.linalg import DEFAULT_TOL, Tolerances, orthonormalize, spectral_norm
from nestlab.nests import Nest, nest_from_flag, random_nest, random_unitary
from nestlab.projections import Projection, projection_from_basis

__all__ = [
    "random_unitary",
    "random_nest",
    "random_projection",
    "random_projection_pair",
    "random_orthogonal_quadruple",
    "distance_one_pair",
]


def _gaussian(rng, rows, cols):
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))


def random_projection(rng: np.random.Generator, dim: int, rank: int | None = None) -> Projection:
    if rank is None:
        rank = int(rng.integers(0, dim + 1))
    if rank == 0:
        return Projection.zero(dim)
    return projection_from_basis(_gaussian(rng, dim, rank))


def random_projection_pair(rng: np.random.Generator, dim: int, tol: Tolerances = DEFAULT_TOL):
    """``(P, Q)`` with ``Q`` a random tilt of ``P``.

    A random share of ``P``'s range is kept in common so the corner blocks
    get exercised; the remaining directions are tilted by a random amount,
    which sometimes pushes ``||P - Q||`` to 1.  One pair in eight is two
    independent random projections.
    """
    if rng.random() < 0.125:
        return random_projection(rng, dim), random_projection(rng, dim)
    rank = int(rng.integers(0, dim + 1))
    if rank == 0:
        return Projection.zero(dim), Projection.zero(dim)
    u = random_unitary(rng, dim)
    bp = u[:, :rank]
    keep = int(rng.integers(0, rank + 1))
    strength = rng.uniform(0.0, 1.5)
    r = _gaussian(rng, dim, rank - keep)
    r /= max(spectral_norm(r), 1e-300)
    bq = np.hstack([bp[:, :keep], bp[:, keep:] + strength * r])
    p = projection_from_basis(bp, tol)
    try:
        q = projection_from_basis(bq, tol)
    except Exception:
        q = p
    return p, q


def random_orthogonal_quadruple(rng: np.random.Generator, dim: int, tol: Tolerances = DEFAULT_TOL):
    """``(P1, P2, Q1, Q2)`` with ``P1 P2 = 0``, ``Q1 Q2 = 0``, and ``Q`` a perturbation of ``P``.

    Distances ``||P_i - Q_i||`` are usually, not always, below 1; callers
    filter on the preconditions they need.
    """
    r1 = int(rng.integers(0, dim + 1))
    r2 = int(rng.integers(0, dim - r1 + 1))
    v = random_unitary(rng, dim)
    strength = rng.uniform(0.0, 0.6)
    g = np.eye(dim) + strength * (lambda z: z / spectral_norm(z))(_gaussian(rng, dim, dim))
    w = orthonormalize(g @ v[:, : r1 + r2], tol) if r1 + r2 else np.zeros((dim, 0))

    def proj(cols):
        if cols.shape[1] == 0:
            return Projection.zero(dim)
        return projection_from_basis(cols, tol)

    return (
        proj(v[:, :r1]),
        proj(v[:, r1 : r1 + r2]),
        proj(w[:, :r1]),
        proj(w[:, r1 : r1 + r2]),
    )


def distance_one_pair(rng: np.random.Generator, dim: int, kind: str | None = None,
                      tol: Tolerances = DEFAULT_TOL) -> tuple[Nest, Nest]:
    """Two nests on ``C^dim`` whose nest distance is exactly 1.

    ``kind``:
      ``"lines"``    ``{0, span x, C^d}`` against ``{0, span y, C^d}`` with ``x`` orthogonal to ``y``;
      ``"permuted"`` full flags of one random basis taken in two orders whose first vectors differ;
      ``"ranks"``    nests whose element ranks do not all match.
    """
    if kind is None:
        kind = ("lines", "permuted", "ranks")[int(rng.integers(0, 3))]
    u = random_unitary(rng, dim)
    if kind == "lines":
        dims = (0, 1, dim)
        other = u.copy()
        other[:, [0, 1]] = other[:, [1, 0]]
        return nest_from_flag(dims, u, tol), nest_from_flag(dims, other, tol)
    if kind == "permuted":
        perm = rng.permutation(dim)
        if perm[0] == 0:
            perm[[0, 1]] = perm[[1, 0]]
        dims = tuple(range(dim + 1))
        return nest_from_flag(dims, u, tol), nest_from_flag(dims, u[:, perm], tol)
    if kind == "ranks":
        m = random_nest(rng, dim, tol=tol)
        while True:
            n = random_nest(rng, dim, tol=tol)
            if set(n.dims) != set(m.dims):
                return m, n
    raise ValueError(f"unknown kind {kind!r}")
