"""Basis of the bulk solution space ``Ker P_B A_N``.

The bulk equation only involves the rows where the full band fits, so its
solutions are sequences annihilated by the symbol away from the edges. They
come in three species:

* extended solutions, one per kernel vector of ``A_s(z)`` at each nonzero
  root ``z`` of ``det A`` (power-law corrections appear when ``s > 1``);
* left finite-support solutions, kernel vectors of ``K-`` living on sites
  ``1..sigma``;
* right finite-support solutions, kernel vectors of ``K+`` on the last
  ``sigma`` sites.

For a regular symbol they add up to exactly ``d * tau`` vectors.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .exceptions import NTooSmall, SingularSymbol
from .laurent import LaurentSymbol, determinant, eval_map, falling_factorial
from .numerics import nullspace, rank_tolerance, svd_full
from .problem import ProblemSpec
from .rootfind import CLUSTER_RADIUS, RootCluster, roots

__all__ = [
    "ProblemSpec", "ExtendedSolution", "FiniteSupportSolution", "BulkBasis",
    "extended_solutions", "build_K", "finite_support_solutions", "bulk_basis",
    "symbol_roots",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExtendedSolution:
    """One kernel vector of ``A_s(z)`` for a root cluster ``(z, s)``.

    ``u[v-1]`` is the block component ``u_v``; on expansion the sequence is
    ``psi_j = sum_v j^(v-1) z**(j-v+1) u_v``.
    """

    z: complex
    s: int
    u: np.ndarray
    residual: float = 0.0

    @property
    def stacked(self) -> np.ndarray:
        return self.u.reshape(-1)


@dataclass(frozen=True)
class FiniteSupportSolution:
    """A kernel vector of ``K-`` (side ``"left"``) or ``K+`` (side ``"right"``).

    ``u[k]`` is the block at site ``k+1`` (left) or ``N-sigma+k+1`` (right).
    """

    side: str
    u: np.ndarray
    residual: float = 0.0


def symbol_roots(symbol: LaurentSymbol, epsilon=None,
                 cluster_radius: float = CLUSTER_RADIUS) -> List[RootCluster]:
    """Clustered nonzero roots of ``det(symbol - epsilon)``.

    Raises
    ------
    SingularSymbol
        If the determinant vanishes identically.
    """
    P, _ = determinant(symbol)
    if not np.any(P.coef != 0):
        raise SingularSymbol(epsilon)
    clusters, _ = roots(P, cluster_radius=cluster_radius)
    return clusters


def extended_solutions(symbol: LaurentSymbol, clusters: Optional[Sequence[RootCluster]] = None,
                       cluster_radius: float = CLUSTER_RADIUS) -> List[ExtendedSolution]:
    """Extended solutions from ``Ker A_s(z)`` at every nonzero root cluster.

    Exactly ``s`` vectors are taken per cluster (the ``s`` smallest right
    singular vectors of ``A_s(z)``), since for a regular symbol the kernel
    dimension equals the root multiplicity.

    Parameters
    ----------
    symbol : LaurentSymbol
    clusters : sequence of RootCluster, optional
        Precomputed roots; when omitted they are computed from the determinant.
    """
    if clusters is None:
        clusters = symbol_roots(symbol, cluster_radius=cluster_radius)
    out = []
    d = symbol.d
    for cl in clusters:
        M = eval_map(symbol, cl.z, cl.s)
        basis, _ = nullspace(M, dim=cl.s)
        scale = max(np.linalg.norm(M, 2), np.finfo(float).tiny)
        for k in range(basis.shape[1]):
            vec = basis[:, k]
            res = float(np.linalg.norm(M @ vec) / scale)
            out.append(ExtendedSolution(complex(cl.z), cl.s, vec.reshape(cl.s, d).copy(), res))
    return out


def build_K(symbol: LaurentSymbol, side: str, sigma: int,
            p_prime: Optional[int] = None, q_prime: Optional[int] = None) -> np.ndarray:
    """Edge matrix whose kernel holds the finite-support solutions.

    ``K-`` is the restriction of the bulk rows ``1-p'..sigma-p'`` to the
    first ``sigma`` sites: block ``(j, j')`` is ``a_{j'-j+p'}``, block
    upper-banded with ``a_{p'}`` on the diagonal. ``K+`` is the mirror image
    at the right edge: block ``(j, j')`` is ``a_{j'-j+q'}``, block
    lower-banded with ``a_{q'}`` on the diagonal.
    """
    d = symbol.d
    pp = symbol.p_prime if p_prime is None else p_prime
    qp = symbol.q_prime if q_prime is None else q_prime
    if sigma <= 0:
        return np.zeros((0, 0), dtype=complex)
    offset = {"left": pp, "right": qp}.get(side)
    if offset is None:
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    K = np.zeros((d * sigma, d * sigma), dtype=complex)
    for j in range(sigma):
        for jp in range(sigma):
            r = jp - j + offset
            if symbol.p <= r <= symbol.q:
                K[j * d:(j + 1) * d, jp * d:(jp + 1) * d] = symbol.coeff(r)
    return K


def finite_support_solutions(symbol: LaurentSymbol, N: Optional[int] = None,
                             n_extended: Optional[int] = None,
                             p_prime: Optional[int] = None, q_prime: Optional[int] = None,
                             factor: Optional[float] = None
                             ) -> Tuple[List[FiniteSupportSolution], List[FiniteSupportSolution]]:
    """Kernels of ``K-`` and ``K+``.

    Parameters
    ----------
    symbol : LaurentSymbol
    N : int, optional
        Problem size; when given, ``N >= 2 sigma + tau`` is enforced.
    n_extended : int, optional
        Number of nonzero roots with multiplicity (``dim Ker A``). Computed
        from the determinant when omitted.
    p_prime, q_prime : int, optional
        Declared principal powers (default: the symbol's own).
    factor : float, optional
        Rank tolerance factor.

    Notes
    -----
    For a regular symbol the two kernel dimensions add up to ``sigma``. If the
    rank decisions disagree with that, the ``sigma`` directions with the
    smallest relative singular values across both matrices are kept.
    """
    pp = symbol.p_prime if p_prime is None else p_prime
    qp = symbol.q_prime if q_prime is None else q_prime
    tau = qp - pp
    d = symbol.d
    if n_extended is None:
        n_extended = sum(cl.s for cl in symbol_roots(symbol))
    sigma = d * tau - n_extended
    if sigma < 0:
        raise SingularSymbol(message=f"more roots ({n_extended}) than d*tau = {d * tau}")
    if sigma == 0:
        return [], []
    if N is not None and N < 2 * sigma + tau:
        raise NTooSmall(f"N={N} < 2*sigma+tau = {2 * sigma + tau}")
    mats = {side: build_K(symbol, side, sigma, pp, qp) for side in ("left", "right")}
    spectra = {}
    for side, K in mats.items():
        _, s, vh = svd_full(K)
        spectra[side] = (s, vh)
    counts = {}
    for side, (s, _) in spectra.items():
        tol = rank_tolerance(s, mats[side].shape, factor)
        counts[side] = int(np.sum(s <= tol))
    if counts["left"] + counts["right"] != sigma:
        # rank policy disagrees with the dimension count; keep the sigma most
        # nearly singular directions across both edges
        cand = []
        for side, (s, _) in spectra.items():
            smax = s[0] if s[0] > 0 else 1.0
            cand += [(s[i] / smax, side) for i in range(s.size)]
        cand.sort(key=lambda t: t[0])
        counts = {"left": 0, "right": 0}
        for _, side in cand[:sigma]:
            counts[side] += 1
        log.warning("finite-support rank decision adjusted to %s (sigma=%d)", counts, sigma)
    out = {}
    for side, (s, vh) in spectra.items():
        k = counts[side]
        n = vh.shape[0]
        vecs = vh[n - k:].conj() if k else np.zeros((0, n), dtype=complex)
        K = mats[side]
        scale = max(np.linalg.norm(K, 2), np.finfo(float).tiny)
        out[side] = [
            FiniteSupportSolution(side, v.reshape(sigma, d).copy(), float(np.linalg.norm(K @ v) / scale))
            for v in vecs
        ]
    return out["left"], out["right"]


@dataclass
class BulkBasis:
    """Complete basis of the bulk solution space for one shifted symbol.

    Columns are ordered: extended solutions (by root), then left, then right
    finite-support solutions. Extended solutions are stored *anchored*: the
    column for a root with ``|z| <= 1`` is ``z**(-1)`` times the raw sequence
    (so it equals ``u_1`` at site 1 when ``s = 1``), and for ``|z| > 1`` it is
    ``z**(-N)`` times the raw sequence, so nothing overflows at large ``N``.
    ``N = None`` describes a half-line basis (no right edge, anchor 1).
    """

    symbol: LaurentSymbol
    N: Optional[int]
    p_prime: int
    q_prime: int
    extended: List[ExtendedSolution]
    left: List[FiniteSupportSolution]
    right: List[FiniteSupportSolution]
    sigma: int
    clusters: List[RootCluster] = field(default_factory=list)
    epsilon: complex = 0.0
    regular: bool = True
    anchors: Tuple[int, ...] = ()

    def __post_init__(self):
        if not self.anchors:
            self.anchors = tuple(1 if abs(e.z) <= 1 or self.N is None else self.N
                                 for e in self.extended)

    @property
    def d(self) -> int:
        return self.symbol.d

    @property
    def tau(self) -> int:
        return self.q_prime - self.p_prime

    def __len__(self) -> int:
        return len(self.extended) + len(self.left) + len(self.right)

    @property
    def counts(self) -> dict:
        return {"extended": len(self.extended), "left": len(self.left), "right": len(self.right)}

    @property
    def complete(self) -> bool:
        return len(self) == self.d * self.tau

    def intrinsic_norms(self) -> np.ndarray:
        """Norm of the stored vector data ``u`` per column."""
        out = [np.linalg.norm(e.u) for e in self.extended]
        out += [np.linalg.norm(sol.u) for sol in self.left + self.right]
        return np.asarray(out, dtype=float)

    def site_values(self, sites) -> np.ndarray:
        """Values of every basis column at the given 1-based sites.

        Returns
        -------
        ndarray, shape (len(sites), d, len(self))
        """
        J = np.asarray(sites, dtype=np.int64).reshape(-1)
        d = self.d
        out = np.zeros((J.size, d, len(self)), dtype=complex)
        col = 0
        Jf = J.astype(float)
        for ext, a in zip(self.extended, self.anchors):
            logz = np.log(complex(ext.z))
            for v in range(1, ext.s + 1):
                ff = falling_factorial(Jf, v - 1)
                mask = ff != 0
                coef = np.zeros(J.size, dtype=complex)
                coef[mask] = ff[mask] * np.exp((J[mask] - v + 1 - a) * logz)
                out[:, :, col] += coef[:, None] * ext.u[v - 1][None, :]
            col += 1
        for sol in self.left:
            mask = (J >= 1) & (J <= self.sigma)
            out[mask, :, col] = sol.u[J[mask] - 1]
            col += 1
        start = (self.N or 0) - self.sigma
        for sol in self.right:
            mask = (J > start) & (J <= self.N)
            out[mask, :, col] = sol.u[J[mask] - start - 1]
            col += 1
        return out

    def iter_blocks(self, alpha, chunk: int = 4096):
        """Yield ``(site, block)`` of ``sum_s alpha_s psi_s`` in site order."""
        alpha = np.asarray(alpha, dtype=complex)
        for lo in range(1, self.N + 1, chunk):
            sites = np.arange(lo, min(lo + chunk, self.N + 1))
            vals = self.site_values(sites) @ alpha
            for j, block in zip(sites, vals):
                yield int(j), block

    def expand(self, alpha, chunk: int = 65536) -> np.ndarray:
        """Dense length-``N d`` vector ``sum_s alpha_s psi_s``."""
        alpha = np.asarray(alpha, dtype=complex)
        if alpha.shape != (len(self),):
            raise ValueError(f"alpha has shape {alpha.shape}, expected ({len(self)},)")
        out = np.empty((self.N, self.d), dtype=complex)
        for lo in range(0, self.N, chunk):
            sites = np.arange(lo + 1, min(lo + chunk, self.N) + 1)
            out[lo:lo + sites.size] = self.site_values(sites) @ alpha
        return out.reshape(-1)

    def dense_columns(self) -> np.ndarray:
        """All basis columns expanded, shape ``(N d, len(self))``."""
        vals = self.site_values(np.arange(1, self.N + 1))
        return vals.reshape(self.N * self.d, len(self))


def bulk_basis(spec: ProblemSpec, epsilon=0.0, clusters: Optional[Sequence[RootCluster]] = None,
               cluster_radius: float = CLUSTER_RADIUS, factor: Optional[float] = None) -> BulkBasis:
    """Basis of ``Ker P_B (A_N - epsilon)`` for the problem's declared bandwidth.

    Parameters
    ----------
    spec : ProblemSpec
    epsilon : complex
        Spectral shift.
    clusters : sequence of RootCluster, optional
        Known roots of ``det(A - epsilon)`` (used for matrix powers, whose
        roots are those of the base symbol with scaled multiplicities).
    cluster_radius : float
        Root merge radius.
    factor : float, optional
        Rank tolerance factor for the ``K`` kernels.

    Raises
    ------
    SingularSymbol
        ``A - epsilon`` is singular.
    NTooSmall
        The bulk is empty or ``N < 2 sigma + tau``.
    """
    epsilon = complex(epsilon)
    sym = spec.symbol - epsilon if epsilon != 0 else spec.symbol
    if sym.is_zero:
        raise SingularSymbol(epsilon)
    pp, qp = spec.p_prime, spec.q_prime
    tau = qp - pp
    if spec.N <= tau:
        raise NTooSmall(f"N={spec.N} <= tau={tau}: the bulk is empty")
    if clusters is None:
        clusters = symbol_roots(sym, epsilon, cluster_radius)
    ext = extended_solutions(sym, clusters)
    n_ext = sum(cl.s for cl in clusters)
    left, right = finite_support_solutions(sym, spec.N, n_ext, pp, qp, factor)
    sigma = spec.d * tau - n_ext
    return BulkBasis(sym, spec.N, pp, qp, ext, left, right, sigma, list(clusters), epsilon)
