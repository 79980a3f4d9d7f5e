"""Nest algebras: membership, distance to the algebra, and distances between algebras.

``T(N)`` is the algebra of operators leaving every element of the nest
``N`` invariant, i.e. block upper-triangular matrices in an adapted basis.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from nestlab.errors import DimensionMismatch, InvariantViolated, NotDistanceOne, OutOfRange
from nestlab.linalg import (
    DEFAULT_TOL,
    Tolerances,
    adjoint,
    as_matrix,
    outer,
    spectral_norm,
    top_right_singular_vector,
)
from nestlab.nests import Nest, distance_table, nest_from_flag, standard_nest


def _check(t: np.ndarray, n: Nest) -> np.ndarray:
    t = as_matrix(t)
    if t.shape != (n.dim, n.dim):
        raise DimensionMismatch(f"operator of shape {t.shape} vs nest on C^{n.dim}")
    return t


def corner_norms(t, n: Nest) -> np.ndarray:
    """``||P_k^perp T P_k||`` for every element of ``n``."""
    t = _check(t, n)
    v = n.orthobasis
    x = adjoint(v) @ t @ v
    # in the adapted basis P_k^perp T P_k is the lower-left corner block
    out = np.zeros(len(n))
    for k, d in enumerate(n.dims):
        if 0 < d < n.dim:
            out[k] = np.linalg.norm(x[d:, :d], 2)
    return out


def contains(t, n: Nest, tol: Tolerances = DEFAULT_TOL) -> Tuple[bool, float]:
    """``(t in T(n), residual)`` with ``residual = max_k ||P_k^perp T P_k||``."""
    residual = float(corner_norms(t, n).max())
    return residual < tol.eq_abs, residual


def arveson_distance(t, n: Nest) -> Tuple[float, int]:
    """Distance from ``t`` to ``T(n)`` and the nest index attaining it."""
    norms = corner_norms(t, n)
    k = int(np.argmax(norms))
    return float(norms[k]), k


def block_upper_mask(dims) -> np.ndarray:
    """Boolean mask of the block upper-triangular pattern for ``dims``."""
    n = dims[-1]
    block = np.empty(n, dtype=int)
    for k, (a, b) in enumerate(zip(dims, dims[1:])):
        block[a:b] = k
    return block[:, None] <= block[None, :]


def _inv_sqrt_apply(gram: np.ndarray, mu2: float, x: np.ndarray, left: bool) -> np.ndarray:
    # (mu2 I - gram)^{-1/2} applied to x from the left or right
    w, v = np.linalg.eigh(gram)
    scale = 1.0 / np.sqrt(np.maximum(mu2 - w, np.finfo(float).tiny))
    op = (v * scale[None, :]) @ adjoint(v)
    return op @ x if left else x @ op


def parrott_completion(b: np.ndarray, a: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Central norm-minimising ``X`` for ``[[B, X], [A, C]]``.

    The optimal norm is ``max(||[B; A]||, ||[A, C]||)``; ``X`` is the
    Davis-Kahan-Weinberger central solution ``-K A* L`` with
    ``B = K (mu^2 - A*A)^{1/2}`` and ``C = (mu^2 - AA*)^{1/2} L``.
    ``mu`` is inflated by a relative 1e-12 so both square roots are
    invertible; the completed norm exceeds the optimum by at most that.
    """
    rows, cols = b.shape[0], c.shape[1]
    left = np.vstack([b, a])
    bottom = np.hstack([a, c])
    mu = max(spectral_norm(left), spectral_norm(bottom))
    if mu == 0.0 or a.size == 0:
        return np.zeros((rows, cols), complex)
    mu2 = (mu * (1.0 + 1e-12)) ** 2
    k = _inv_sqrt_apply(adjoint(a) @ a, mu2, b, left=False)
    ell = _inv_sqrt_apply(a @ adjoint(a), mu2, c, left=True)
    return -k @ adjoint(a) @ ell


def nearest_element(t, n: Nest) -> np.ndarray:
    """An element ``A`` of ``T(n)`` with ``||t - A||`` equal to the Arveson distance.

    Works in the adapted basis.  The error ``X = T - A`` must equal ``T``
    on the strictly lower blocks; its upper blocks are filled one at a
    time, diagonal first and then outward, each block being the free
    corner of a 2x2 Parrott problem whose other three parts are known.
    """
    t = _check(t, n)
    v = n.orthobasis
    x = adjoint(v) @ t @ v
    dims = n.dims
    m = len(dims) - 1
    sl = [slice(dims[k], dims[k + 1]) for k in range(m)]
    x = x.copy()
    upper = block_upper_mask(dims)
    x[upper] = 0.0
    for offset in range(m):
        for i in range(m - offset):
            j = i + offset
            r0, r1 = dims[i], dims[i + 1]
            c0, c1 = dims[j], dims[j + 1]
            b = x[r0:r1, :c0]
            a = x[r1:, :c0]
            c = x[r1:, c0:c1]
            x[sl[i], sl[j]] = parrott_completion(b, a, c)
    return v @ (adjoint(v) @ t @ v - x) @ adjoint(v)


def algebra_projector(n: Nest):
    """Orthogonal (Frobenius) projection of matrices onto ``T(n)``."""
    v = n.orthobasis
    mask = block_upper_mask(n.dims)

    def project(g: np.ndarray) -> np.ndarray:
        inner = adjoint(v) @ g @ v
        return v @ np.where(mask, inner, 0.0) @ adjoint(v)

    return project


def random_algebra_element(rng: np.random.Generator, n: Nest, unit: bool = True) -> np.ndarray:
    """Random member of ``T(n)``, scaled to norm 1 if ``unit``."""
    d = n.dim
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    t = algebra_projector(n)(z)
    if unit:
        t = t / spectral_norm(t)
    return t


# -- lower bounds for d(T(M), T(N)) ---------------------------------------------


@dataclass(frozen=True, eq=False)
class RankOneBound:
    """``bound = ||P_M^perp P_{N+}|| ||P_M P_N^perp||`` at the best pair.

    ``side`` names the nest whose algebra holds the witness ``zeta eta*``:
    ``"n"`` means ``M`` ranges over ``m`` and ``N`` over ``n``; ``"m"`` is
    the mirrored case.
    """

    bound: float
    zeta: np.ndarray
    eta: np.ndarray
    m_index: int
    n_index: int
    side: str

    @property
    def witness(self) -> np.ndarray:
        return outer(self.zeta, self.eta)


def _unit_in_range(p: np.ndarray, op: np.ndarray) -> Tuple[float, np.ndarray]:
    # Unit vector in range(p) maximising ||op v||, and that maximum.
    sigma, v = top_right_singular_vector(op @ p)
    v = p @ v
    nv = np.linalg.norm(v)
    if sigma == 0.0 or nv == 0.0:
        w, vecs = np.linalg.eigh(p)
        v = vecs[:, -1]
        return 0.0, v
    return sigma, v / nv


def _rank_one_witness(pm: np.ndarray, pn: np.ndarray, pn_plus: np.ndarray):
    # zeta in N+ maximising ||P_M^perp zeta||, eta in N^perp maximising ||P_M eta||
    eye = np.eye(pm.shape[0])
    a, zeta = _unit_in_range(pn_plus, eye - pm)
    b, eta = _unit_in_range(eye - pn, pm)
    return a * b, zeta, eta


def rank_one_lower_bound(m: Nest, n: Nest) -> RankOneBound:
    """Best rank-one lower bound over all pairs, in both directions."""
    if m.dim != n.dim:
        raise DimensionMismatch(f"nests act on C^{m.dim} and C^{n.dim}")
    best: Optional[RankOneBound] = None
    for side, outer_nest, inner_nest in (("n", m, n), ("m", n, m)):
        for i, pm in enumerate(outer_nest.elements):
            for k in range(len(inner_nest) - 1):
                val, zeta, eta = _rank_one_witness(pm.p, inner_nest[k].p, inner_nest[k + 1].p)
                if best is None or val > best.bound:
                    mi, ni = (i, k) if side == "n" else (k, i)
                    best = RankOneBound(float(val), zeta, eta, mi, ni, side)
    return best


@dataclass(frozen=True, eq=False)
class KKEstimate:
    """Certified lower bound for the Kadison-Kastler distance of two nest algebras.

    ``witness`` is a member of the unit ball of ``T(side)`` whose distance
    to the other algebra equals ``lower_bound``.
    """

    lower_bound: float
    witness: np.ndarray
    side: str
    trials: int
    seed: int
    stage: str = "rank_one"


def _line_pair_witness(holder: Nest, other: Nest, tol: Tolerances) -> Optional[np.ndarray]:
    # Closed-form rank-two witness for two nests {0, line, C^2}.
    if holder.dim != 2 or holder.dims != (0, 1, 2) or other.dims != (0, 1, 2):
        return None
    x = holder.orthobasis[:, 0]
    y = other.orthobasis[:, 0]
    alpha = np.vdot(x, y)
    c = abs(alpha)
    rest = y - alpha * x
    s = np.linalg.norm(rest)
    if s <= tol.eq_abs:
        return None
    e1 = x * (alpha / c) if c > 0 else x
    e2 = rest / s
    a = min(1.0, c / s)
    core = np.array([[a, 1.0 - a * a], [0.0, -a]], dtype=complex)
    w = np.column_stack([e1, e2])
    return w @ core @ adjoint(w)


def _unit_ball(t: np.ndarray) -> np.ndarray:
    return t / max(1.0, spectral_norm(t))


def _ascent(t0: np.ndarray, holder: Nest, other: Nest, max_iter: int = 300) -> Tuple[float, np.ndarray]:
    """Projected subgradient ascent of ``d(T, T(other))`` over the unit ball of ``T(holder)``."""
    project = algebra_projector(holder)
    eye = np.eye(holder.dim)
    t = _unit_ball(t0)
    val, k = arveson_distance(t, other)
    step = 0.5
    for _ in range(max_iter):
        p = other[k].p
        corner = (eye - p) @ t @ p
        u, sigma, vh = np.linalg.svd(corner)
        grad = project((eye - p) @ np.outer(u[:, 0], vh[0]) @ p)
        gnorm = spectral_norm(grad)
        if gnorm == 0.0:
            break
        improved = False
        while step > 1e-12:
            cand = _unit_ball(t + step * grad / gnorm)
            cval, ck = arveson_distance(cand, other)
            if cval > val:
                improved = True
                break
            step *= 0.5
        if not improved:
            break
        gain = cval - val
        t, val, k = cand, cval, ck
        if gain <= 1e-10 * max(val, 1e-300):
            break
    return val, t


def kk_distance_estimate(
    m: Nest, n: Nest, trials: int = 8, seed: int = 0, tol: Tolerances = DEFAULT_TOL
) -> KKEstimate:
    """Lower bound for ``d(T(m), T(n))`` from feasible witnesses.

    Candidates, in order: the best rank-one witness, the closed-form
    rank-two witness for pairs of line nests in ``C^2``, and ``trials``
    random starts of projected ascent on each side.  The first strictly
    best candidate wins, so ties go to the earlier stage / lower trial.
    """
    if m.dim != n.dim:
        raise DimensionMismatch(f"nests act on C^{m.dim} and C^{n.dim}")
    nests = {"m": m, "n": n}
    other_of = {"m": n, "n": m}

    r1 = rank_one_lower_bound(m, n)
    w = r1.witness
    val, _ = arveson_distance(w, other_of[r1.side])
    best = KKEstimate(val, w, r1.side, trials, seed, "rank_one")

    def offer(val, w, side, stage):
        nonlocal best
        if val > best.lower_bound:
            best = KKEstimate(float(val), w, side, trials, seed, stage)

    for side in ("m", "n"):
        w = _line_pair_witness(nests[side], other_of[side], tol)
        if w is not None:
            offer(arveson_distance(w, other_of[side])[0], w, side, "closed_form")

    rng = np.random.default_rng(seed)
    for trial in range(trials):
        for side in ("m", "n"):
            start = random_algebra_element(rng, nests[side])
            val, w = _ascent(start, nests[side], other_of[side])
            offer(val, w, side, f"ascent[{trial}]")
    return best


# -- nest distance one forces algebra distance one ---------------------------


@dataclass(frozen=True, eq=False)
class DistanceCertificate:
    """Rank-one witnesses proving ``d(T(m), T(n))`` is (at least) ``achieved``.

    ``side`` names the nest whose algebra contains the witnesses; the
    distance is measured to the algebra of the other nest.  ``m_index`` is
    the element of the other nest used in the bound.
    """

    delta: Optional[float]
    n0_index: Optional[int]
    witnesses: List[Tuple[np.ndarray, np.ndarray]]
    achieved: float
    case: int
    side: str
    m_index: int

    def witness_operators(self) -> List[np.ndarray]:
        return [outer(z, e) for z, e in self.witnesses]


def _case_two(holder: Nest, other: Nest, table_other_vs_holder: np.ndarray, tol: Tolerances):
    # Elements of ``other`` (playing M) at distance 1 from every element of ``holder`` (N).
    eye = np.eye(holder.dim)
    certs = []
    far = np.where(table_other_vs_holder.min(axis=1) >= 1.0 - tol.eq_abs)[0]
    for i in far:
        pm = other[int(i)].p
        perp_n = [spectral_norm((eye - pm) @ e.p) for e in holder.elements]
        m_perp = [spectral_norm(pm @ (eye - e.p)) for e in holder.elements]
        mins = [min(a, b) for a, b in zip(perp_n, m_perp)]
        delta = float(max(mins))
        if delta >= 1.0 - tol.eq_abs:
            k = int(np.argmax(mins))
            # zeta in N, eta orthogonal to N: the corollary's witness
            val, zeta, eta = _rank_one_witness(pm, holder[k].p, holder[k].p)
            n0 = k
        else:
            n0 = max(k for k, a in enumerate(perp_n) if a <= delta + tol.eq_abs)
            if n0 >= len(holder) - 1:
                continue
            val, zeta, eta = _rank_one_witness(pm, holder[n0].p, holder[n0 + 1].p)
        achieved = arveson_distance(outer(zeta, eta), other)[0]
        certs.append(DistanceCertificate(delta, n0, [(zeta, eta)], float(achieved), 2, "", int(i)))
    return certs


def _case_one(holder: Nest, other: Nest, table_other_vs_holder: np.ndarray, tol: Tolerances):
    certs = []
    for i, k in zip(*np.where(table_other_vs_holder < 1.0 - tol.eq_abs)):
        pm = other[int(i)].p
        val, zeta, eta = _rank_one_witness(pm, holder[int(k)].p, holder[int(k)].p)
        achieved = arveson_distance(outer(zeta, eta), other)[0]
        certs.append(DistanceCertificate(None, None, [(zeta, eta)], float(achieved), 1, "", int(i)))
    return certs


def distance_one_certificate(m: Nest, n: Nest, tol: Tolerances = DEFAULT_TOL) -> DistanceCertificate:
    """Rank-one certificate that ``d(T(m), T(n)) = 1`` when ``d(m, n) = 1``.

    For each orientation, an element ``M`` of one nest that is at distance
    1 from the whole other nest yields ``delta`` (the best ``min`` of the
    two corner norms), the top element ``N0`` with ``||P_M^perp P_N0|| <=
    delta``, and the witness ``zeta eta*`` with ``zeta`` in ``N0+`` and
    ``eta`` orthogonal to ``N0``.  Close pairs contribute the weaker
    ``t^2`` witnesses.  The best certificate over both orientations is
    returned.

    Raises
    ------
    NotDistanceOne
        If ``nest_distance(m, n) < 1 - eq_abs``.
    """
    table = distance_table(m, n)
    d = float(max(table.min(axis=1).max(), table.min(axis=0).max()))
    if d < 1.0 - tol.eq_abs:
        raise NotDistanceOne(f"nest distance {d:.12g} is below 1")
    best = None
    for side, holder, other, tab in (("n", n, m, table), ("m", m, n, table.T)):
        for cert in _case_two(holder, other, tab, tol) + _case_one(holder, other, tab, tol):
            if best is None or cert.achieved > best.achieved:
                best = DistanceCertificate(
                    cert.delta, cert.n0_index, cert.witnesses, cert.achieved,
                    cert.case, side, cert.m_index,
                )
    return best


# -- the explicit example -------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CounterexampleInstance:
    """Two line nests in ``C^2`` at distance ``s < 1`` whose algebras are at distance 1."""

    s: float
    c: float
    a: float
    m_nest: Nest = field(repr=False)
    n_nest: Nest = field(repr=False)
    t: np.ndarray = field(repr=False)
    t_norm: float
    nest_dist: float
    alg_dist_lb: float

    def row(self) -> dict:
        return {"s": self.s, "c": self.c, "a": self.a,
                "nest_dist": self.nest_dist, "alg_dist_lb": self.alg_dist_lb}


def counterexample_family(s: float, tol: Tolerances = DEFAULT_TOL) -> CounterexampleInstance:
    """Nests ``{0, Ce1, C^2}`` and ``{0, C(c, s), C^2}`` with ``T = [[a, 1-a^2], [0, -a]]``, ``a = c/s``.

    ``T`` lies in the first algebra, has norm 1 (the Hermitian
    ``[[0, a], [a, 1-a^2]]`` has eigenvalues ``1`` and ``-a^2``) and its
    distance to the second algebra is ``2acs + (1-a^2)s^2 = 1``.

    Raises
    ------
    OutOfRange
        If ``s`` is outside ``[1/sqrt(2), 1)`` (up to ``eq_abs`` at the left end).
    """
    s = float(s)
    if not (1.0 / np.sqrt(2.0) - tol.eq_abs <= s < 1.0):
        raise OutOfRange(f"s = {s!r} outside [1/sqrt(2), 1)")
    c = float(np.sqrt(1.0 - s * s))
    a = min(1.0, c / s)
    m_nest = standard_nest((0, 1, 2))
    n_nest = nest_from_flag((0, 1, 2), np.array([[c, -s], [s, c]]), tol)
    t = np.array([[a, 1.0 - a * a], [0.0, -a]], dtype=complex)
    t_norm = spectral_norm(t)
    table = distance_table(m_nest, n_nest)
    nest_dist = float(max(table.min(axis=1).max(), table.min(axis=0).max()))
    alg_lb, _ = arveson_distance(t, n_nest)
    inst = CounterexampleInstance(s, c, a, m_nest, n_nest, t, t_norm, nest_dist, alg_lb)
    problems = []
    if abs(t_norm - 1.0) >= tol.eq_abs:
        problems.append(f"||T|| = {t_norm!r}")
    if not contains(t, m_nest, tol)[0]:
        problems.append("T not in T(M)")
    if abs(nest_dist - s) >= tol.eq_abs:
        problems.append(f"d(M, N) = {nest_dist!r}")
    if abs(alg_lb - 1.0) >= tol.eq_abs:
        problems.append(f"d(T, T(N)) = {alg_lb!r}")
    if problems:
        raise InvariantViolated("; ".join(problems))
    return inst
