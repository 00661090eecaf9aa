"""Input checks and dense cross-checks shared by the estimator and the tests."""

from typing import Optional, Sequence, Union

import numpy as np

from .document import parse_problem
from .exceptions import OracleCapExceeded
from .numerics import principal_angle
from .oracle import ORACLE_CAP, assemble_dense, dense_nullspace
from .problem import ProblemSpec
from .semiinfinite import SemiInfiniteSpec

__all__ = ["check_problem", "check_epsilon", "kernel_angle", "residual_norm", "multiset_distance"]


def check_problem(problem, allow_semi: bool = False) -> Union[ProblemSpec, SemiInfiniteSpec]:
    """Accept a spec, a decoded problem document or JSON text.

    Raises
    ------
    TypeError
        For anything else, or a half-line spec when ``allow_semi`` is false.
    """
    if isinstance(problem, (dict, str, bytes)):
        problem = parse_problem(problem)
    if isinstance(problem, SemiInfiniteSpec):
        if not allow_semi:
            raise TypeError("a finite problem is required here")
        return problem
    if not isinstance(problem, ProblemSpec):
        raise TypeError(f"expected a ProblemSpec or a problem document, got {type(problem).__name__}")
    return problem


def check_epsilon(epsilon) -> complex:
    """Finite complex scalar (``[re, im]`` pairs are accepted)."""
    if isinstance(epsilon, (list, tuple)) and len(epsilon) == 2:
        epsilon = complex(epsilon[0], epsilon[1])
    try:
        z = complex(epsilon)
    except (TypeError, ValueError):
        raise TypeError(f"epsilon must be a complex scalar, got {epsilon!r}") from None
    if not np.isfinite(z):
        raise ValueError(f"epsilon must be finite, got {z!r}")
    return z


def residual_norm(spec: ProblemSpec, vector, epsilon) -> float:
    """``||(C - epsilon) v|| / (||C|| ||v||)`` through the dense matrix (oracle scale)."""
    M = assemble_dense(spec)
    v = np.asarray(vector, dtype=complex)
    scale = max(np.linalg.norm(M, 2), abs(epsilon), 1e-300) * max(np.linalg.norm(v), 1e-300)
    return float(np.linalg.norm(M @ v - complex(epsilon) * v) / scale)


def kernel_angle(spec: ProblemSpec, vectors: Sequence, epsilon, tol: Optional[float] = None) -> float:
    """Largest principal angle between ``vectors`` and the dense nullspace of ``C - epsilon``.

    Returns ``pi/2`` when the dimensions differ.
    """
    if spec.size > ORACLE_CAP:
        raise OracleCapExceeded(f"dense size {spec.size} exceeds the oracle cap {ORACLE_CAP}")
    M = assemble_dense(spec) - complex(epsilon) * np.eye(spec.size)
    ref = dense_nullspace(M, tol=tol)
    mine = np.column_stack([np.asarray(v, dtype=complex) for v in vectors]) if len(vectors) else \
        np.zeros((spec.size, 0), dtype=complex)
    if mine.shape[1] == 0 and ref.shape[1] == 0:
        return 0.0
    return principal_angle(mine, ref)


def multiset_distance(a, b) -> float:
    """Largest elementwise gap after sorting two multisets of (complex) numbers."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.size != b.size:
        return np.inf
    if a.size == 0:
        return 0.0
    ka = a[np.lexsort((a.imag, a.real))]
    kb = b[np.lexsort((b.imag, b.real))]
    return float(np.max(np.abs(ka - kb)))
