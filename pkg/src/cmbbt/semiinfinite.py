"""Square-summable kernel vectors of corner-modified half-line BBT operators.

On the half line ``j = 1, 2, ...`` only the left edge exists. A bulk solution
is square-summable exactly when it is built from roots strictly inside the
unit circle (with their power-law companions) and from the left
finite-support solutions. Boundary conditions come from the left boundary
rows ``1..-p'`` alone, so the boundary matrix may be rectangular.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .boundary import kernel as _kernel_of
from .boundary import BoundaryMatrix
from .bulk import BulkBasis, extended_solutions, finite_support_solutions, symbol_roots
from .exceptions import SingularSymbol
from .laurent import LaurentSymbol
from .rootfind import CLUSTER_RADIUS, RootCluster

__all__ = ["MARGINAL_TOL", "SemiInfiniteSpec", "DecayingBasis", "DecayingAnsatzVector",
           "decaying_bulk_basis", "semi_boundary_matrix", "semi_kernel"]

#: Roots with ``| |z| - 1 | < MARGINAL_TOL`` are neither kept nor discarded silently.
MARGINAL_TOL = 1e-8


class SemiInfiniteSpec:
    """Half-line operator ``A + W`` with ``W`` on the left boundary rows.

    Parameters
    ----------
    symbol : LaurentSymbol
    corner : mapping ``{(b, j): block}``, optional
        ``1 <= b <= -p'`` and ``j >= 1``.
    bandwidth : (int, int), optional
        Declared bandwidth (defaults to the symbol's).
    """

    def __init__(self, symbol: LaurentSymbol, corner=None, bandwidth=None):
        if symbol.is_zero:
            raise ValueError("the zero symbol cannot define a problem")
        self.symbol = symbol
        p, q = (symbol.p, symbol.q) if bandwidth is None else map(int, bandwidth)
        if symbol.p < p or symbol.q > q or p > q:
            raise ValueError(f"declared bandwidth ({p}, {q}) does not contain the symbol support")
        self.p, self.q = p, q
        self.corner: Dict[Tuple[int, int], np.ndarray] = {}
        items = corner.items() if hasattr(corner, "items") else (
            (((e[0], e[1]), e[2]) for e in corner) if corner is not None else ())
        for (b, j), block in items:
            b, j = int(b), int(j)
            if not 1 <= b <= -self.p_prime:
                raise ValueError(f"corner row {b} is not a left boundary row 1..{-self.p_prime}")
            if j < 1:
                raise ValueError(f"corner column {j} must be >= 1")
            block = np.atleast_2d(np.asarray(block, dtype=complex))
            if block.shape != (self.d, self.d) or not np.all(np.isfinite(block)):
                raise ValueError(f"corner block at ({b}, {j}) must be a finite {self.d}x{self.d} array")
            self.corner[(b, j)] = self.corner.get((b, j), 0) + block

    @property
    def d(self) -> int:
        return self.symbol.d

    @property
    def p_prime(self) -> int:
        return min(self.p, 0)

    @property
    def q_prime(self) -> int:
        return max(self.q, 0)

    @property
    def tau(self) -> int:
        return self.q_prime - self.p_prime

    @property
    def boundary_rows(self) -> List[int]:
        return list(range(1, -self.p_prime + 1))

    @property
    def symmetric(self) -> bool:
        """Corner confined to the left boundary columns ``1..q'``."""
        return all(j <= self.q_prime for (_, j) in self.corner)

    def corner_norm(self) -> float:
        sums: Dict[int, float] = {}
        for (b, _), block in self.corner.items():
            sums[b] = sums.get(b, 0.0) + float(np.linalg.norm(block, 2))
        return max(sums.values(), default=0.0)

    def __repr__(self):
        return f"SemiInfiniteSpec(d={self.d}, p={self.p}, q={self.q}, corner_entries={len(self.corner)})"


@dataclass
class DecayingBasis:
    """Square-summable bulk solutions plus the roots that were set aside."""

    basis: BulkBasis
    marginal: List[RootCluster] = field(default_factory=list)
    outside: List[RootCluster] = field(default_factory=list)

    def __len__(self):
        return len(self.basis)


def decaying_bulk_basis(symbol: LaurentSymbol, epsilon=0.0, bandwidth: Optional[Tuple[int, int]] = None,
                        marginal_tol: float = MARGINAL_TOL,
                        cluster_radius: float = CLUSTER_RADIUS) -> DecayingBasis:
    """Bulk solutions on the half line that are square-summable.

    Keeps roots with ``|z| < 1 - marginal_tol`` and the kernel of ``K-``
    (whose size ``sigma`` is fixed by the full root count). Roots on the unit
    circle within ``marginal_tol`` are reported in ``marginal``.

    Raises
    ------
    SingularSymbol
        ``A - epsilon`` is singular.
    """
    epsilon = complex(epsilon)
    sym = symbol - epsilon if epsilon != 0 else symbol
    if sym.is_zero:
        raise SingularSymbol(epsilon)
    p, q = bandwidth if bandwidth is not None else (symbol.p, symbol.q)
    pp, qp = min(p, 0), max(q, 0)
    clusters = symbol_roots(sym, epsilon, cluster_radius)
    n_ext = sum(cl.s for cl in clusters)
    inside = [cl for cl in clusters if abs(cl.z) < 1 - marginal_tol]
    marginal = [cl for cl in clusters if abs(abs(cl.z) - 1) <= marginal_tol]
    outside = [cl for cl in clusters if abs(cl.z) > 1 + marginal_tol]
    left, _ = finite_support_solutions(sym, None, n_ext, pp, qp)
    sigma = sym.d * (qp - pp) - n_ext
    basis = BulkBasis(sym, None, pp, qp, extended_solutions(sym, inside), left, [], sigma,
                      inside, epsilon)
    return DecayingBasis(basis, marginal, outside)


@dataclass
class DecayingAnsatzVector:
    """Bound state ``sum_s alpha_s psi_s`` on the half line.

    Attributes
    ----------
    epsilon : complex
    alpha : ndarray
    basis : BulkBasis
        Half-line basis (``N is None``).
    z_dom : float
        Largest ``|z|`` among contributing roots (0 for pure finite support).
    residual : float
        Boundary residual ``|B alpha|`` relative to the column scales.
    """

    epsilon: complex
    alpha: np.ndarray
    basis: BulkBasis
    z_dom: float
    residual: float = 0.0

    def sites(self, stop: int, start: int = 1) -> np.ndarray:
        """Blocks at sites ``start..stop`` as an array of shape ``(n, d)``."""
        return self.basis.site_values(np.arange(start, stop + 1)) @ self.alpha

    def site(self, j: int) -> np.ndarray:
        return self.sites(j, j)[0]

    def _terms(self):
        """``(|coefficient|, power v-1, |z|)`` for every extended contribution."""
        out = []
        n_ext = len(self.basis.extended)
        for k, ext in enumerate(self.basis.extended[:n_ext]):
            c = abs(self.alpha[k])
            if c == 0:
                continue
            for v in range(1, ext.s + 1):
                # anchor 1: psi_j = ff(j, v-1) z^(j-v) u_v
                out.append((c * np.linalg.norm(ext.u[v - 1]) * abs(ext.z) ** (-v), v - 1,
                            abs(ext.z)))
        return out

    def tail_bound(self, J: int) -> float:
        """Upper bound on ``sum_{j > J} ||psi_j||**2``.

        Valid for ``J >= sigma`` (finite-support parts have ended). Uses
        ``||psi_j||**2 <= m sum_k c_k**2 j**(2 a_k) r_k**(2 j)`` and a
        geometric majorant of each series.
        """
        J = max(int(J), self.basis.sigma)
        terms = self._terms()
        m = len(terms)
        total = 0.0
        for c, a, r in terms:
            if r == 0:
                continue
            first = (J + 1) ** (2 * a) * r ** (2 * (J + 1))
            ratio = ((J + 2) / (J + 1)) ** (2 * a) * r * r
            if ratio >= 1:
                return np.inf
            total += c * c * first / (1 - ratio)
        return m * total

    def norm(self, J: Optional[int] = None) -> float:
        """Norm from an explicit partial sum plus the tail bound (an upper estimate)."""
        if J is None:
            J = self.basis.sigma + 64
            if self.z_dom > 0:
                J = max(J, int(np.ceil(40 / max(-np.log(self.z_dom), 1e-3))))
        head = float(np.sum(np.abs(self.sites(J)) ** 2))
        return float(np.sqrt(head + self.tail_bound(J)))


def semi_boundary_matrix(spec: SemiInfiniteSpec, dbasis: DecayingBasis) -> BoundaryMatrix:
    """Rows ``b = 1..-p'`` of ``(A - epsilon + W) psi`` over the decaying basis."""
    basis = dbasis.basis
    rows = spec.boundary_rows
    d, n = spec.d, len(basis)
    sym = basis.symbol
    sites = sorted({b + r for b in rows for r in sym.powers if b + r >= 1} |
                   {j for (_, j) in spec.corner})
    vals = basis.site_values(sites) if sites else np.zeros((0, d, n), dtype=complex)
    where = {j: k for k, j in enumerate(sites)}
    raw = np.zeros((len(rows), d, n), dtype=complex)
    for k, b in enumerate(rows):
        for r, a in sym.items():
            if b + r >= 1:
                raw[k] += a @ vals[where[b + r]]
    for (b, j), block in spec.corner.items():
        raw[b - 1] += block @ vals[where[j]]
    raw = raw.reshape(len(rows) * d, n)
    touched = np.max(np.linalg.norm(vals, axis=1), axis=0) if sites else np.zeros(n)
    size = np.maximum(basis.intrinsic_norms(), touched) if n else np.zeros(0)
    scales = (sym.norm_sum() + spec.corner_norm()) * size
    scales = np.where(scales > 0, scales, 1.0)
    return BoundaryMatrix(raw, scales, [(b, m) for b in rows for m in range(d)], basis,
                          basis.epsilon)


def semi_kernel(spec: SemiInfiniteSpec, epsilon=0.0, marginal_tol: float = MARGINAL_TOL,
                factor: Optional[float] = None, atol: Optional[float] = None
                ) -> List[DecayingAnsatzVector]:
    """Square-summable kernel vectors of ``A - epsilon + W`` on the half line.

    Raises
    ------
    SingularSymbol
    """
    db = decaying_bulk_basis(spec.symbol, epsilon, (spec.p, spec.q), marginal_tol)
    basis = db.basis
    if len(basis) == 0:
        return []
    B = semi_boundary_matrix(spec, db)
    if B.shape[0] == 0:
        alphas = [np.eye(len(basis))[:, k] for k in range(len(basis))]
    else:
        alphas = _kernel_of(B, factor=factor, atol=atol, canonical=True)
    out = []
    n_ext = len(basis.extended)
    for a in alphas:
        big = np.abs(a[:n_ext]) > 1e-14 * max(np.abs(a).max(), 1e-300)
        z_dom = max((abs(basis.extended[k].z) for k in range(n_ext) if big[k]), default=0.0)
        res = float(np.linalg.norm(B.entries @ (a * B.scales))) if B.shape[0] else 0.0
        out.append(DecayingAnsatzVector(complex(epsilon), a, basis, z_dom, res))
    return out
