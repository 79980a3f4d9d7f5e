"""Dense complex linear-algebra kernel.

Every operator in nestlab is a ``numpy.ndarray`` of dtype ``complex128``.
The helpers here are thin, validated wrappers around LAPACK (via numpy)
that fix the rank and comparison conventions used everywhere else.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from nestlab.errors import NonFinite, RankDeficient

TOL_ENV_VAR = "NESTLAB_TOL"


@dataclass(frozen=True)
class Tolerances:
    """Numerical slack.

    Attributes
    ----------
    rank_rel : float
        Singular values at or below ``rank_rel * sigma_max`` count as zero.
    eq_abs : float
        Absolute slack for equalities and strict inequalities.
    """

    rank_rel: float = 1e-8
    eq_abs: float = 1e-8

    def __post_init__(self):
        for name in ("rank_rel", "eq_abs"):
            value = getattr(self, name)
            if not (0.0 < value < 1e-2):
                raise ValueError(f"{name} must lie in (0, 1e-2), got {value!r}")

    @classmethod
    def from_env(cls) -> "Tolerances":
        """Defaults, with ``eq_abs`` overridden by ``$NESTLAB_TOL`` if set."""
        raw = os.environ.get(TOL_ENV_VAR)
        if raw is None or raw.strip() == "":
            return cls()
        return cls(eq_abs=float(raw))


DEFAULT_TOL = Tolerances()


def as_matrix(a) -> np.ndarray:
    """Return ``a`` as a finite 2-D complex128 array (a copy only if needed)."""
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFinite("matrix has NaN or infinite entries")
    return arr


def adjoint(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def spectral_norm(a) -> float:
    """Largest singular value of ``a`` (0 for empty matrices)."""
    a = as_matrix(a)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def singular_values(a) -> np.ndarray:
    a = as_matrix(a)
    if a.size == 0:
        return np.zeros(0)
    return np.linalg.svd(a, compute_uv=False)


def _cutoff(sigma: np.ndarray, tol: Tolerances) -> float:
    if sigma.size == 0:
        return 0.0
    return tol.rank_rel * float(sigma[0])


def rank_tol(a, tol: Tolerances = DEFAULT_TOL) -> int:
    """Number of singular values strictly above ``rank_rel * sigma_max``."""
    sigma = singular_values(a)
    if sigma.size == 0 or sigma[0] == 0.0:
        return 0
    return int(np.count_nonzero(sigma > _cutoff(sigma, tol)))


def polar_partial_isometry(a, tol: Tolerances = DEFAULT_TOL):
    """Polar decomposition ``a = u @ h`` with ``u`` a partial isometry.

    ``u`` is assembled from the singular triples above the rank cutoff, so
    its initial space is the range of ``a*`` and its final space the range
    of ``a``; ``h = (a* a)^{1/2}`` uses every singular value.

    Returns
    -------
    u, h : ndarray
    """
    a = as_matrix(a)
    rows, cols = a.shape
    if a.size == 0:
        return np.zeros((rows, cols), complex), np.zeros((cols, cols), complex)
    w, sigma, vh = np.linalg.svd(a, full_matrices=False)
    if sigma[0] == 0.0:
        r = 0
    else:
        r = int(np.count_nonzero(sigma > _cutoff(sigma, tol)))
    u = w[:, :r] @ vh[:r, :]
    h = adjoint(vh) @ (sigma[:, None] * vh)
    return u, h


def orthonormalize(cols, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis with the same flag of spans as ``cols``.

    Uses Householder QR, so for every ``k`` the first ``k`` output columns
    span the same space as the first ``k`` input columns.

    Raises
    ------
    RankDeficient
        If the columns are dependent at the ``rank_rel`` cutoff.
    """
    cols = as_matrix(cols)
    n, k = cols.shape
    if k == 0:
        return np.zeros((n, 0), complex)
    if k > n or rank_tol(cols, tol) < k:
        raise RankDeficient(f"{k} columns in C^{n} are linearly dependent")
    q, r = np.linalg.qr(cols)
    # fix phases so diag(r) > 0; makes the output unique
    d = np.diag(r)
    phase = np.where(np.abs(d) > 0, d / np.abs(d), 1.0)
    return q * phase[None, :]


def outer(zeta, eta) -> np.ndarray:
    """The rank-one operator ``x -> <x, eta> zeta``."""
    zeta = np.asarray(zeta, complex).reshape(-1)
    eta = np.asarray(eta, complex).reshape(-1)
    return np.outer(zeta, eta.conj())


def top_right_singular_vector(a) -> tuple[float, np.ndarray]:
    """``(sigma_max, v)`` with ``||a v|| = sigma_max`` and ``||v|| = 1``."""
    a = as_matrix(a)
    _, sigma, vh = np.linalg.svd(a)
    return float(sigma[0]), vh[0].conj()
