"""Finite nests (flags of subspaces) and maps between them."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from nestlab.errors import (
    BadFlag,
    DimensionMismatch,
    NoSuccessor,
    NotInvertible,
    RankMismatch,
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
from nestlab.projections import Projection, nearest_in_chain, proj_distance


@dataclass(frozen=True, eq=False)
class Nest:
    """Strictly increasing flag ``0 = N_0 < N_1 < ... < N_m = C^dim``.

    ``basis`` is the matrix the nest was built from and ``orthobasis`` its
    QR orthonormalisation, so ``elements[k]`` projects onto the first
    ``dims[k]`` columns of either.
    """

    dims: Tuple[int, ...]
    basis: np.ndarray = field(repr=False)
    orthobasis: np.ndarray = field(repr=False)
    elements: Tuple[Projection, ...] = field(repr=False)

    @property
    def dim(self) -> int:
        return self.dims[-1]

    def __len__(self) -> int:
        return len(self.elements)

    def __getitem__(self, k: int) -> Projection:
        return self.elements[k]

    def atom_ranks(self) -> List[int]:
        return [b - a for a, b in zip(self.dims, self.dims[1:])]

    def atom_basis(self, k: int) -> np.ndarray:
        """Orthonormal basis of the ``k``-th atom (columns of ``orthobasis``)."""
        return self.orthobasis[:, self.dims[k] : self.dims[k + 1]]


def nest_from_flag(dims: Sequence[int], basis, tol: Tolerances = DEFAULT_TOL) -> Nest:
    """Nest whose ``k``-th element is spanned by the first ``dims[k]`` columns."""
    dims = tuple(int(d) for d in dims)
    basis = as_matrix(basis)
    n = basis.shape[0]
    if basis.shape[1] != n:
        raise BadFlag(f"basis must be square, got {basis.shape}")
    if len(dims) < 2 or dims[0] != 0 or dims[-1] != n:
        raise BadFlag(f"dims must run from 0 to {n}, got {dims}")
    if any(b <= a for a, b in zip(dims, dims[1:])):
        raise BadFlag(f"dims must be strictly increasing, got {dims}")
    q = orthonormalize(basis, tol)
    elements = []
    for d in dims:
        v = q[:, :d]
        p = v @ adjoint(v)
        elements.append(Projection(0.5 * (p + adjoint(p)), d))
    return Nest(dims, basis, q, tuple(elements))


def standard_nest(dims: Sequence[int]) -> Nest:
    """Nest built on the standard basis of ``C^dims[-1]``."""
    return nest_from_flag(dims, np.eye(dims[-1]))


@dataclass(frozen=True, eq=False)
class Atom:
    index: int
    projection: Projection
    rank: int


def atoms(n: Nest) -> List[Atom]:
    out = []
    for k in range(len(n) - 1):
        p = n[k + 1].p - n[k].p
        r = n.dims[k + 1] - n.dims[k]
        out.append(Atom(k, Projection(p, r), r))
    return out


def successor(n: Nest, k: int) -> Projection:
    """Next element above ``n[k]``; for a finite nest this is the meet of all strict successors."""
    if k < 0 or k >= len(n) - 1:
        raise NoSuccessor(f"element {k} of a {len(n)}-element nest has no successor")
    return n[k + 1]


def _check_same_dim(m: Nest, n: Nest) -> None:
    if m.dim != n.dim:
        raise DimensionMismatch(f"nests act on C^{m.dim} and C^{n.dim}")


def distance_table(m: Nest, n: Nest) -> np.ndarray:
    """``D[i, j] = ||P_{m_i} - P_{n_j}||``."""
    _check_same_dim(m, n)
    return np.array([[proj_distance(a, b) for b in n.elements] for a in m.elements])


def nest_distance(m: Nest, n: Nest) -> float:
    """Hausdorff distance between the two sets of projections."""
    d = distance_table(m, n)
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


@dataclass(frozen=True, eq=False)
class OrderIsomorphism:
    source: Nest
    target: Nest
    pairing: Tuple[Tuple[int, int], ...]
    gamma: float
    atom_ranks: Tuple[Tuple[int, int], ...]

    @property
    def preserves_dimension(self) -> bool:
        return all(a == b for a, b in self.atom_ranks)


def recover_order_iso(m: Nest, n: Nest, tol: Tolerances = DEFAULT_TOL) -> OrderIsomorphism:
    """Pair every element of ``m`` with the unique element of ``n`` closer than 1.

    Raises
    ------
    TooFar
        If ``nest_distance(m, n) >= 1 - eq_abs``.
    UniquenessViolated
        If the proximity pairing is not an order-preserving bijection.
    RankMismatch
        If paired atoms differ in rank.
    """
    table = distance_table(m, n)
    d = float(max(table.min(axis=1).max(), table.min(axis=0).max()))
    if d >= 1.0 - tol.eq_abs:
        raise TooFar(f"nest distance {d:.12g} is not below 1")
    pairing = []
    for i, p in enumerate(m.elements):
        j = nearest_in_chain(p, n.elements, tol)
        if j is None:
            raise TooFar(f"element {i} has no partner within distance 1")
        pairing.append((i, j))
    targets = [j for _, j in pairing]
    if targets != list(range(len(n))):
        raise UniquenessViolated(f"proximity pairing {pairing} is not an order isomorphism")
    gamma = float(max(table[i, j] for i, j in pairing))
    ranks = tuple(zip(m.atom_ranks(), n.atom_ranks()))
    if any(a != b for a, b in ranks):
        raise RankMismatch(f"paired atom ranks differ: {ranks}")
    return OrderIsomorphism(m, n, tuple(pairing), gamma, ranks)


@dataclass(frozen=True, eq=False)
class Similarity:
    """Invertible ``s`` carrying each source element onto its partner."""

    s: np.ndarray
    s_minus_i_norm: float
    condition: float
    method: str
    fallback: bool = False
    defects: Tuple[float, ...] = ()

    @property
    def max_defect(self) -> float:
        return max(self.defects, default=0.0)


def _atom_sum(iso: OrderIsomorphism) -> np.ndarray:
    # sum over paired atoms of dQ_k dP_k
    src, tgt = iso.source, iso.target
    out = np.zeros((src.dim, src.dim), complex)
    for k in range(len(src) - 1):
        dp = src[k + 1].p - src[k].p
        dq = tgt[k + 1].p - tgt[k].p
        out += dq @ dp
    return out


def _atom_unitary(iso: OrderIsomorphism, tol: Tolerances) -> np.ndarray:
    # Maps an orthonormal basis of each source atom onto one of the paired
    # target atom, rotated within the atom to stay as close to I as possible.
    src, tgt = iso.source, iso.target
    cols_src, cols_tgt = [], []
    for k in range(len(src) - 1):
        a = src.atom_basis(k)
        b = tgt.atom_basis(k)
        w, _ = polar_partial_isometry(adjoint(b) @ a, tol)
        if rank_tol(w, tol) < w.shape[1]:
            w = np.eye(w.shape[0], dtype=complex)
        cols_src.append(a)
        cols_tgt.append(b @ w)
    vs = np.hstack(cols_src)
    vt = np.hstack(cols_tgt)
    return vt @ adjoint(vs)


def subspace_defects(s: np.ndarray, iso: OrderIsomorphism, tol: Tolerances = DEFAULT_TOL):
    """``||P_{theta(M_k)} - proj(S M_k)||`` for each paired element."""
    out = []
    src, tgt = iso.source, iso.target
    for i, j in iso.pairing:
        d = src.dims[i]
        if d == 0:
            out.append(0.0)
            continue
        img = orthonormalize(s @ src.orthobasis[:, :d], tol)
        out.append(spectral_norm(img @ adjoint(img) - tgt[j].p))
    return tuple(out)


def build_similarity(iso: OrderIsomorphism, tol: Tolerances = DEFAULT_TOL) -> Similarity:
    """Invertible operator implementing ``iso``.

    For ``gamma < 1/2`` this is ``sum_k dQ_k dP_k`` over paired atoms, which
    keeps ``||S - I|| <= 2 gamma``.  Otherwise, or if that sum is
    numerically singular, a unitary atom-to-atom map is used and
    ``||S - I|| <= 2``.
    """
    if not iso.preserves_dimension:
        raise RankMismatch("order isomorphism does not preserve dimension")
    n = iso.source.dim
    method, fallback = "unitary", False
    s = None
    if iso.gamma < 0.5:
        cand = _atom_sum(iso)
        sv = np.linalg.svd(cand, compute_uv=False)
        if sv[-1] > tol.rank_rel * sv[0]:
            s, method = cand, "atom_sum"
        else:
            fallback = True
    if s is None:
        s = _atom_unitary(iso, tol)
    sv = np.linalg.svd(s, compute_uv=False)
    if sv[-1] <= 0.0:
        raise NotInvertible("similarity construction produced a singular matrix")
    return Similarity(
        s=s,
        s_minus_i_norm=spectral_norm(s - np.eye(n)),
        condition=float(sv[0] / sv[-1]),
        method=method,
        fallback=fallback,
        defects=subspace_defects(s, iso, tol),
    )


def random_perturbed_nest(n: Nest, strength: float, seed: int, tol: Tolerances = DEFAULT_TOL) -> Nest:
    """Image of ``n`` under ``G = I + strength * R`` with ``||R|| = 1``.

    Deterministic in ``seed``; ``strength < 1`` keeps ``G`` invertible so
    the atom ranks are unchanged.
    """
    if not (0.0 <= strength < 1.0):
        raise ValueError(f"strength must lie in [0, 1), got {strength!r}")
    if strength == 0.0:
        return n
    rng = np.random.default_rng(seed)
    dim = n.dim
    r = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    r /= spectral_norm(r)
    g = np.eye(dim) + strength * r
    return nest_from_flag(n.dims, g @ n.orthobasis, tol)


def random_nest(rng: np.random.Generator, dim: int, n_atoms: Optional[int] = None,
                tol: Tolerances = DEFAULT_TOL) -> Nest:
    """Nest with random Haar-distributed adapted basis and random atom sizes."""
    if n_atoms is None:
        n_atoms = int(rng.integers(1, dim + 1))
    cuts = sorted(rng.choice(np.arange(1, dim), size=n_atoms - 1, replace=False)) if n_atoms > 1 else []
    dims = [0, *[int(c) for c in cuts], dim]
    return nest_from_flag(dims, random_unitary(rng, dim), tol)


def random_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))[None, :]
