"""Rank tolerance policy and small dense linear-algebra helpers.

Every rank decision in the package goes through :func:`rank_tolerance`, so a
single knob (the ``CMBBT_TOL`` environment variable or an explicit factor)
controls how aggressively near-zero singular values are treated as zero.
"""

import os
from typing import Optional

import numpy as np
import scipy.linalg

DEFAULT_RANK_FACTOR = 1e3
EPS = np.finfo(float).eps


def rank_factor(factor: Optional[float] = None) -> float:
    """Return the multiplier used in the rank tolerance.

    An explicit ``factor`` wins, then the ``CMBBT_TOL`` environment variable,
    then the default of 1e3.
    """
    if factor is not None:
        return float(factor)
    env = os.environ.get("CMBBT_TOL")
    if env:
        try:
            value = float(env)
        except ValueError as exc:
            raise ValueError(f"CMBBT_TOL must be a number, got {env!r}") from exc
        if not np.isfinite(value) or value <= 0:
            raise ValueError(f"CMBBT_TOL must be positive, got {env!r}")
        return value
    return DEFAULT_RANK_FACTOR


def rank_tolerance(singular_values, shape, factor: Optional[float] = None) -> float:
    """Threshold below which a singular value counts as zero.

    ``max(m, n) * eps * sigma_max * factor``.
    """
    s = np.asarray(singular_values)
    smax = float(s[0]) if s.size else 0.0
    return max(shape) * EPS * smax * rank_factor(factor)


def svd_full(M):
    """SVD returning all right singular vectors, robust to LAPACK failures."""
    M = np.asarray(M, dtype=complex)
    try:
        return scipy.linalg.svd(M, full_matrices=True, lapack_driver="gesdd")
    except (np.linalg.LinAlgError, ValueError):
        return scipy.linalg.svd(M, full_matrices=True, lapack_driver="gesvd")


def nullspace(M, factor: Optional[float] = None, atol: Optional[float] = None,
              dim: Optional[int] = None):
    """Orthonormal basis of the numerical nullspace of ``M``.

    Parameters
    ----------
    M : array_like, shape (m, n)
    factor : float, optional
        Rank-tolerance factor (see :func:`rank_factor`).
    atol : float, optional
        Absolute singular-value threshold; overrides the relative policy.
    dim : int, optional
        Force the nullspace dimension (take the ``dim`` smallest directions).

    Returns
    -------
    basis : ndarray, shape (n, k)
    singular_values : ndarray
        All ``n`` singular values, padded with zeros when ``m < n``.
    """
    M = np.asarray(M, dtype=complex)
    m, n = M.shape
    if n == 0:
        return np.zeros((0, 0), dtype=complex), np.zeros(0)
    if m == 0:
        return np.eye(n, dtype=complex), np.zeros(n)
    _, s, vh = svd_full(M)
    padded = np.zeros(n)
    padded[: s.size] = s
    if dim is None:
        tol = atol if atol is not None else rank_tolerance(s, M.shape, factor)
        rank = int(np.sum(s > tol))
        dim = n - rank
    dim = max(0, min(int(dim), n))
    basis = vh[n - dim:].conj().T if dim else np.zeros((n, 0), dtype=complex)
    return basis, padded


def principal_angle(U, V) -> float:
    """Largest principal angle (radians) between the column spans of U and V.

    Both spans must have the same dimension; empty spans give 0.
    """
    U = np.asarray(U, dtype=complex)
    V = np.asarray(V, dtype=complex)
    if U.shape[1] != V.shape[1]:
        return np.pi / 2
    if U.shape[1] == 0:
        return 0.0
    qu, _ = np.linalg.qr(U)
    qv, _ = np.linalg.qr(V)
    # sin of the largest angle is the norm of the component of V outside span U
    resid = qv - qu @ (qu.conj().T @ qv)
    s = np.linalg.norm(resid, 2)
    return float(np.arcsin(min(1.0, s)))


def canonical_basis(K):
    """Re-express the columns of ``K`` in a pivoted, reduced form.

    The nullspace returned by an SVD is only defined up to a unitary mixing.
    This picks pivot rows with column-pivoted QR on ``K^H`` and rescales so
    that ``K[pivots]`` is the identity, giving a deterministic basis whose
    vectors are as localized in coefficient space as possible.
    """
    K = np.asarray(K, dtype=complex)
    k = K.shape[1]
    if k == 0:
        return K
    _, _, piv = scipy.linalg.qr(K.conj().T, pivoting=True, mode="economic")
    rows = np.sort(piv[:k])
    return K @ np.linalg.inv(K[rows, :])


def fix_phase(v, rel=1e-8):
    """Normalize ``v`` to unit norm with its first dominant entry real positive."""
    v = np.asarray(v, dtype=complex)
    nrm = np.linalg.norm(v)
    if nrm == 0:
        return v
    v = v / nrm
    mags = np.abs(v)
    k = int(np.argmax(mags >= mags.max() * (1 - rel)))
    return v * (abs(v[k]) / v[k])
