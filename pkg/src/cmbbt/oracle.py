"""Dense brute-force reference for verification at desk scale.

Nothing in the structured solver depends on this module except explicit
fallbacks for tiny stages; every entry point checks the size cap so a large
dense matrix is never built by accident.
"""

from typing import Optional

import numpy as np
import scipy.linalg

from .exceptions import OracleCapExceeded
from .numerics import nullspace, rank_tolerance
from .problem import ProblemSpec

#: Largest ``N d`` for which dense matrices are built.
ORACLE_CAP = 4096


def _check_cap(n: int, cap: Optional[int]):
    cap = ORACLE_CAP if cap is None else cap
    if n > cap:
        raise OracleCapExceeded(f"dense size {n} exceeds the oracle cap {cap}")


def assemble_dense(spec: ProblemSpec, cap: Optional[int] = None) -> np.ndarray:
    """Full ``N d x N d`` matrix: Toeplitz fill ``[A_N]_{ij} = a_{j-i}`` plus corner."""
    N, d = spec.N, spec.d
    _check_cap(N * d, cap)
    M = np.zeros((N * d, N * d), dtype=complex)
    for r, a in spec.symbol.items():
        for i in range(max(1, 1 - r), min(N, N - r) + 1):
            j = i + r
            M[(i - 1) * d:i * d, (j - 1) * d:j * d] += a
    for (b, j), block in spec.corner.items():
        M[(b - 1) * d:b * d, (j - 1) * d:j * d] += block
    return M


def bulk_rows_dense(spec: ProblemSpec, epsilon=0.0, cap: Optional[int] = None) -> np.ndarray:
    """Dense ``P_B (A_N - epsilon)`` restricted to its bulk rows."""
    d = spec.d
    M = assemble_dense(spec, cap) - complex(epsilon) * np.eye(spec.N * d)
    lo, hi = -spec.p_prime + 1, spec.N - spec.q_prime
    if hi < lo:
        return np.zeros((0, spec.N * d), dtype=complex)
    return M[(lo - 1) * d:hi * d]


def dense_nullspace(M, tol: Optional[float] = None, factor: Optional[float] = None) -> np.ndarray:
    """Orthonormal nullspace basis; ``tol`` is an absolute singular-value threshold."""
    M = np.asarray(M, dtype=complex)
    _check_cap(max(M.shape), None)
    basis, _ = nullspace(M, factor=factor, atol=tol)
    return basis


def dense_rank(M, tol: Optional[float] = None, factor: Optional[float] = None) -> int:
    """Numerical rank at the shared tolerance (or an absolute ``tol``)."""
    M = np.asarray(M, dtype=complex)
    _check_cap(max(M.shape), None)
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if tol is None:
        tol = rank_tolerance(s, M.shape, factor)
    return int(np.sum(s > tol))


def dense_eigen(M, hermitian: Optional[bool] = None):
    """Eigenvalues and eigenvectors via LAPACK (``eigh`` for Hermitian input).

    Returns
    -------
    values : ndarray
        Sorted by real part then imaginary part.
    vectors : ndarray
        Columns matching ``values``.
    """
    M = np.asarray(M, dtype=complex)
    _check_cap(M.shape[0], None)
    if hermitian is None:
        hermitian = np.allclose(M, M.conj().T, rtol=0, atol=1e-13 * max(1.0, np.abs(M).max()))
    if hermitian:
        vals, vecs = scipy.linalg.eigh(M)
        return vals.astype(complex), vecs
    vals, vecs = scipy.linalg.eig(M)
    order = np.lexsort((vals.imag, vals.real))
    return vals[order], vecs[:, order]


def dense_det(M) -> complex:
    M = np.asarray(M, dtype=complex)
    _check_cap(M.shape[0], None)
    return complex(np.linalg.det(M))
