"""Matrix Laurent polynomials (block symbols) and their analysis.

A symbol is ``A(w) = sum_r w**r a_r`` with ``d x d`` complex blocks ``a_r`` for
``p <= r <= q``. It generates the banded block-Toeplitz matrix whose
``(i, j)`` block is ``a_{j-i}``.
"""

from math import comb
from numbers import Number
from typing import Dict, Mapping, Optional, Tuple

import numpy as np
from numpy.polynomial import Polynomial

from .numerics import rank_tolerance

#: Relative norm below which a coefficient block is dropped.
TRIM_RTOL = 1e-14
#: Relative size (vs. a Hadamard-type bound) below which a determinant
#: coefficient is treated as floating-point noise.
DET_RTOL = 1e-12


def falling_factorial(x, k: int):
    """``x (x-1) ... (x-k+1)``; equals 1 for ``k == 0``. Works on arrays."""
    out = np.ones_like(np.asarray(x, dtype=float))
    for i in range(k):
        out = out * (np.asarray(x, dtype=float) - i)
    return out


class LaurentSymbol:
    """Immutable ``d x d`` matrix Laurent polynomial.

    Parameters
    ----------
    coeffs : mapping
        Power ``r`` to a ``d x d`` array (scalars are accepted for ``d = 1``).
    d : int, optional
        Block size; inferred from the coefficients when omitted.

    Notes
    -----
    Blocks whose norm is below ``1e-14`` times the largest block norm are
    trimmed, so ``p`` and ``q`` always index nonzero blocks. The zero symbol
    is stored as ``p = q = 0`` with a zero block and ``is_zero = True``.
    """

    __slots__ = ("_coeffs", "d", "p", "q", "is_zero")

    def __init__(self, coeffs: Mapping[int, object], d: Optional[int] = None):
        blocks: Dict[int, np.ndarray] = {}
        for r, a in coeffs.items():
            if int(r) != r:
                raise ValueError(f"power must be an integer, got {r!r}")
            a = np.atleast_2d(np.asarray(a, dtype=complex))
            if a.shape[0] != a.shape[1]:
                raise ValueError(f"coefficient a_{r} is not square: {a.shape}")
            if not np.all(np.isfinite(a)):
                raise ValueError(f"coefficient a_{r} has non-finite entries")
            if d is None:
                d = a.shape[0]
            if a.shape != (d, d):
                raise ValueError(f"coefficient a_{r} has shape {a.shape}, expected {(d, d)}")
            r = int(r)
            blocks[r] = blocks[r] + a if r in blocks else a.copy()
        if d is None:
            raise ValueError("cannot infer block size of an empty symbol")
        norms = {r: np.linalg.norm(a) for r, a in blocks.items()}
        top = max(norms.values(), default=0.0)
        kept = {r: a for r, a in blocks.items() if top > 0 and norms[r] > TRIM_RTOL * top}
        for a in kept.values():
            a.setflags(write=False)
        self.d = int(d)
        if kept:
            self._coeffs = dict(sorted(kept.items()))
            self.p = min(kept)
            self.q = max(kept)
            self.is_zero = False
        else:
            zero = np.zeros((d, d), dtype=complex)
            zero.setflags(write=False)
            self._coeffs = {0: zero}
            self.p = self.q = 0
            self.is_zero = True

    # construction helpers
    @classmethod
    def identity(cls, d: int) -> "LaurentSymbol":
        return cls({0: np.eye(d)})

    @classmethod
    def monomial(cls, r: int, block) -> "LaurentSymbol":
        return cls({r: block})

    @classmethod
    def zero(cls, d: int) -> "LaurentSymbol":
        return cls({0: np.zeros((d, d))})

    # derived bandwidth data
    @property
    def p_prime(self) -> int:
        return min(self.p, 0)

    @property
    def q_prime(self) -> int:
        return max(self.q, 0)

    @property
    def tau(self) -> int:
        return self.q_prime - self.p_prime

    def coeff(self, r: int) -> np.ndarray:
        """Block ``a_r``; a zero block outside the support."""
        a = self._coeffs.get(int(r))
        if a is None:
            return np.zeros((self.d, self.d), dtype=complex)
        return a

    def items(self):
        return self._coeffs.items()

    @property
    def powers(self) -> Tuple[int, ...]:
        return tuple(self._coeffs)

    def principal(self) -> Tuple[np.ndarray, np.ndarray]:
        """Principal coefficients ``(a_{p'}, a_{q'})``."""
        return self.coeff(self.p_prime), self.coeff(self.q_prime)

    def leading(self) -> Tuple[np.ndarray, np.ndarray]:
        """Leading coefficients ``(a_p, a_q)``."""
        return self.coeff(self.p), self.coeff(self.q)

    def norm_sum(self) -> float:
        """Sum of spectral norms of the blocks, a bound on ``|A(z)|`` for ``|z| = 1``."""
        return float(sum(np.linalg.norm(a, 2) for _, a in self.items()))

    def adjoint(self) -> "LaurentSymbol":
        """Symbol of the conjugate-transposed matrix: ``sum_r w**(-r) a_r^H``."""
        return LaurentSymbol({-r: a.conj().T for r, a in self.items()}, d=self.d)

    def is_hermitian(self, rtol: float = 1e-13) -> bool:
        scale = max(self.norm_sum(), 1.0)
        powers = set(self.powers) | {-r for r in self.powers}
        return all(
            np.max(np.abs(self.coeff(-r) - self.coeff(r).conj().T), initial=0.0) <= rtol * scale
            for r in powers
        )

    def allclose(self, other: "LaurentSymbol", rtol=1e-12, atol=0.0) -> bool:
        if self.d != other.d:
            return False
        scale = max(self.norm_sum(), other.norm_sum())
        powers = set(self.powers) | set(other.powers)
        return all(
            np.max(np.abs(self.coeff(r) - other.coeff(r))) <= atol + rtol * scale for r in powers
        )

    # arithmetic
    def _coerce(self, other) -> "LaurentSymbol":
        if isinstance(other, LaurentSymbol):
            if other.d != self.d:
                raise ValueError(f"block size mismatch: {self.d} vs {other.d}")
            return other
        if isinstance(other, Number):
            return LaurentSymbol({0: complex(other) * np.eye(self.d)}, d=self.d)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return add(self, other)

    __radd__ = __add__

    def __neg__(self):
        return LaurentSymbol({r: -a for r, a in self.items()}, d=self.d)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return add(self, -other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return add(other, -self)

    def __mul__(self, other):
        if isinstance(other, Number):
            return LaurentSymbol({r: complex(other) * a for r, a in self.items()}, d=self.d)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return mul(self, other)

    def __rmul__(self, other):
        if isinstance(other, Number):
            return self * other
        return NotImplemented

    def __call__(self, z):
        return evaluate(self, z)

    def __repr__(self):
        tag = ", zero" if self.is_zero else ""
        return f"LaurentSymbol(d={self.d}, p={self.p}, q={self.q}{tag})"


ScalarPoly = Polynomial


def add(A: LaurentSymbol, B: LaurentSymbol) -> LaurentSymbol:
    """Coefficientwise sum, re-trimmed."""
    if A.d != B.d:
        raise ValueError(f"block size mismatch: {A.d} vs {B.d}")
    out: Dict[int, np.ndarray] = {r: a.copy() for r, a in A.items()}
    for r, b in B.items():
        out[r] = out[r] + b if r in out else b.copy()
    return LaurentSymbol(out, d=A.d)


def mul(A: LaurentSymbol, B: LaurentSymbol) -> LaurentSymbol:
    """Cauchy product ``A(w) B(w)`` (block order matters)."""
    if A.d != B.d:
        raise ValueError(f"block size mismatch: {A.d} vs {B.d}")
    out: Dict[int, np.ndarray] = {}
    for r, a in A.items():
        for s, b in B.items():
            prod = a @ b
            out[r + s] = out[r + s] + prod if (r + s) in out else prod
    return LaurentSymbol(out, d=A.d)


def derivative(A: LaurentSymbol, order: int) -> LaurentSymbol:
    """Formal ``order``-th derivative in ``z`` of ``z -> A(z)``.

    Returns the coefficient data as another symbol: ``sum_r r^(k) z**(r-k) a_r``
    with the falling factorial ``r^(k)``.
    """
    if order < 0:
        raise ValueError("derivative order must be nonnegative")
    if order == 0:
        return A
    out = {}
    for r, a in A.items():
        c = float(falling_factorial(r, order))
        if c != 0.0:
            out[r - order] = c * a
    return LaurentSymbol(out, d=A.d)


def _check_z(z) -> complex:
    z = complex(z)
    if z == 0:
        raise ValueError("symbols cannot be evaluated at z = 0")
    if not (np.isfinite(z.real) and np.isfinite(z.imag)):
        raise ValueError(f"non-finite evaluation point {z!r}")
    return z


def evaluate(A: LaurentSymbol, z) -> np.ndarray:
    """``A(z) = sum_r z**r a_r`` for ``z != 0``."""
    z = _check_z(z)
    out = np.zeros((A.d, A.d), dtype=complex)
    for r, a in A.items():
        out += z ** r * a
    return out


def _derivative_values(A: LaurentSymbol, z: complex, count: int) -> np.ndarray:
    """Stack of ``A^{(k)}(z)`` for ``k = 0..count-1``."""
    out = np.zeros((count, A.d, A.d), dtype=complex)
    for r, a in A.items():
        for k in range(count):
            c = float(falling_factorial(r, k))
            if c != 0.0:
                out[k] += c * z ** (r - k) * a
    return out


def eval_map(A: LaurentSymbol, z, s: int) -> np.ndarray:
    """Generalized evaluation map ``A_s(z)``, a ``ds x ds`` upper block-triangular matrix.

    Block ``(x, v)`` (1-based, ``x <= v``) is ``C(v-1, x-1) A^{(v-x)}(z)``.
    This is an algebra homomorphism: ``eval_map(A B) = eval_map(A) eval_map(B)``.
    """
    z = _check_z(z)
    if s < 1:
        raise ValueError("s must be a positive integer")
    d = A.d
    ders = _derivative_values(A, z, s)
    out = np.zeros((d * s, d * s), dtype=complex)
    for x in range(s):
        for v in range(x, s):
            out[x * d:(x + 1) * d, v * d:(v + 1) * d] = comb(v, x) * ders[v - x]
    return out


def balancing_radius(A: LaurentSymbol) -> float:
    """Circle radius that balances the outermost coefficient magnitudes.

    ``(|a_p| / |a_q|) ** (1 / (q - p))``, i.e. the radius where the two
    extreme terms of ``A`` have equal size. Falls back to 1.
    """
    if A.is_zero or A.q == A.p:
        return 1.0
    lo, hi = A.leading()
    nlo, nhi = np.linalg.norm(lo, 2), np.linalg.norm(hi, 2)
    if nlo == 0 or nhi == 0:
        return 1.0
    rho = (nlo / nhi) ** (1.0 / (A.q - A.p))
    return float(rho) if np.isfinite(rho) and rho > 0 else 1.0


def determinant(A: LaurentSymbol, rtol: float = DET_RTOL) -> Tuple[Polynomial, int]:
    """Scalar determinant ``det A(w) = w**shift * P(w)`` with ``P(0) != 0``.

    Computed by evaluating ``det(w**(-p) A(w))`` at ``d(q-p)+1`` points on a
    circle and interpolating (an FFT, since the nodes are scaled roots of
    unity). Coefficients below ``rtol`` times a Hadamard-type bound are noise
    and are set to zero. A zero polynomial (with shift 0) signals that the
    symbol is singular.
    """
    d = A.d
    if A.is_zero:
        return Polynomial([0.0]), 0
    span = A.q - A.p
    m = d * span
    if m == 0:
        c0 = complex(np.linalg.det(A.coeff(A.p)))
        bound = np.linalg.norm(A.coeff(A.p), 2) ** d
        if abs(c0) <= rtol * bound:
            return Polynomial([0.0]), 0
        return Polynomial([c0]), d * A.p
    rho = balancing_radius(A)
    M = m + 1
    nodes = rho * np.exp(2j * np.pi * np.arange(M) / M)
    G = np.zeros((M, d, d), dtype=complex)
    for r, a in A.items():
        G += (nodes ** (r - A.p))[:, None, None] * a
    vals = np.linalg.det(G)
    scaled = np.fft.fft(vals) / M  # c_n * rho**n
    bound = sum(np.linalg.norm(a, 2) * rho ** (r - A.p) for r, a in A.items()) ** d
    scaled[np.abs(scaled) <= rtol * bound] = 0.0
    nz = np.nonzero(scaled)[0]
    if nz.size == 0:
        return Polynomial([0.0]), 0
    lo, hi = int(nz[0]), int(nz[-1])
    coef = scaled[lo:hi + 1] / rho ** np.arange(lo, hi + 1)
    return Polynomial(coef), d * A.p + lo


def is_regular(A: LaurentSymbol) -> bool:
    """True when ``det A(w)`` is not the zero polynomial.

    Short-circuits when a leading coefficient is numerically invertible.
    """
    if A.is_zero:
        return False
    for a in A.leading():
        s = np.linalg.svd(a, compute_uv=False)
        if s[-1] > rank_tolerance(s, a.shape) and s[-1] > 0:
            return True
    P, _ = determinant(A)
    return bool(np.any(P.coef != 0))
