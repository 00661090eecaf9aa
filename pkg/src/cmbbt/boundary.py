"""Boundary matrix assembly, its kernel, and eigenvector reconstruction.

Once the bulk equation is solved, a vector ``sum_s alpha_s psi_s`` is in the
kernel of ``C - epsilon`` exactly when it also satisfies the boundary rows.
The boundary matrix ``B`` collects those ``d tau`` equations, one column per
bulk basis vector, so the kernel of ``C - epsilon`` is the image of
``Ker B``.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .bulk import BulkBasis
from .numerics import canonical_basis, nullspace, svd_full
from .problem import ProblemSpec

__all__ = ["BoundaryMatrix", "AnsatzVector", "assemble", "kernel", "reconstruct",
           "iter_reconstruct"]

#: Corner columns are streamed through the basis in chunks of this many sites.
CORNER_CHUNK = 4096


@dataclass
class BoundaryMatrix:
    """Boundary matrix with column normalization.

    Attributes
    ----------
    raw : ndarray, shape (n_rows, n_B)
        Entries w.r.t. the anchored bulk basis.
    scales : ndarray, shape (n_B,)
        Column scale factors ``||C - epsilon|| * |psi_s|`` where ``|psi_s|`` is
        the largest block of the bulk vector on the sites ``B`` reads;
        ``entries = raw / scales``.
    row_index : list of (int, int)
        ``(site b, internal component m)`` per row, 1-based sites, 0-based m.
    basis : BulkBasis
    epsilon : complex
    """

    raw: np.ndarray
    scales: np.ndarray
    row_index: List[Tuple[int, int]]
    basis: BulkBasis
    epsilon: complex = 0.0
    _svals: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def entries(self) -> np.ndarray:
        """Column-normalized entries (every entry has modulus at most about 1)."""
        return self.raw / self.scales[None, :]

    @property
    def shape(self):
        return self.raw.shape

    @property
    def is_square(self) -> bool:
        return self.raw.shape[0] == self.raw.shape[1]

    def singular_values(self) -> np.ndarray:
        """Singular values of the normalized matrix, padded with zeros to ``n_B``."""
        if self._svals is None:
            m, n = self.raw.shape
            s = np.zeros(n)
            if m and n:
                sv = np.linalg.svd(self.entries, compute_uv=False)
                s[: sv.size] = sv
            self._svals = s
        return self._svals

    def smallest_singular_value(self) -> float:
        s = self.singular_values()
        return float(s[-1]) if s.size else np.inf

    def det(self) -> complex:
        """Determinant of the normalized matrix (square case only)."""
        if not self.is_square:
            raise ValueError("determinant of a rectangular boundary matrix")
        if self.raw.shape[0] == 0:
            return 1.0 + 0j
        return complex(np.linalg.det(self.entries))


@dataclass
class AnsatzVector:
    """Compact (generalized) eigenvector ``sum_s alpha_s psi_s``.

    Attributes
    ----------
    epsilon : complex
    rank : int
        Jordan rank: the smallest ``k`` with ``(C - epsilon)^k v = 0``.
    alpha : ndarray or None
        Coefficients over ``basis`` (anchored columns).
    basis : BulkBasis or None
    dense : ndarray or None
        Explicit vector when no compact form exists (dense fallback).
    """

    epsilon: complex
    rank: int
    alpha: Optional[np.ndarray] = None
    basis: Optional[BulkBasis] = None
    dense: Optional[np.ndarray] = None
    d: Optional[int] = None

    def to_dense(self) -> np.ndarray:
        if self.dense is None:
            if self.basis is None:
                raise ValueError("ansatz vector has neither a basis nor a dense form")
            self.dense = reconstruct(self.basis, self.alpha)
        return self.dense

    def iter_blocks(self, chunk: int = 4096):
        if self.basis is None:
            d = self.d or 1
            for j, block in enumerate(self.dense.reshape(-1, d)):
                yield j + 1, block
            return
        yield from self.basis.iter_blocks(self.alpha, chunk)

    def site(self, j: int) -> np.ndarray:
        """Block of the vector at 1-based site ``j`` in O(1)."""
        if self.basis is None:
            raise ValueError("site access needs the compact form")
        return (self.basis.site_values([j]) @ self.alpha)[0]


def assemble(spec: ProblemSpec, basis: BulkBasis, counter: Optional[Dict[str, int]] = None
             ) -> BoundaryMatrix:
    """Boundary matrix of ``C - epsilon`` over ``basis``.

    Row ``(b, m)`` for each boundary site ``b`` and component ``m``;
    ``[B]_{b s} = sum_r a_r psi_{s, b+r} + sum_j W_{b j} psi_{s, j}`` where the
    first sum runs over ``1 <= b + r <= N`` and the symbol is the shifted one
    stored in ``basis``. For a symmetrical corner every site touched lies
    within ``tau`` of an edge, so the work does not depend on ``N``. Otherwise
    corner columns are streamed in chunks, O(N) overall.

    Parameters
    ----------
    counter : dict, optional
        Instrumentation: incremented with ``"site_values"`` (basis site
        evaluations) and ``"block_products"`` (d x d times d x n_B products).
    """
    N, d = spec.N, spec.d
    sym = basis.symbol
    rows = spec.boundary_rows
    n = len(basis)
    row_pos = {b: k for k, b in enumerate(rows)}
    raw = np.zeros((len(rows), d, n), dtype=complex)

    toeplitz_sites = sorted({b + r for b in rows for r in sym.powers if 1 <= b + r <= N})
    corner_cols = sorted({j for (_, j) in spec.corner})
    small_corner = spec.symmetric or len(corner_cols) <= CORNER_CHUNK
    sites = sorted(set(toeplitz_sites) | (set(corner_cols) if small_corner else set()))
    vals = basis.site_values(sites) if sites else np.zeros((0, d, n), dtype=complex)
    where = {j: k for k, j in enumerate(sites)}
    products = 0
    for b in rows:
        acc = raw[row_pos[b]]
        for r, a in sym.items():
            j = b + r
            if 1 <= j <= N:
                acc += a @ vals[where[j]]
                products += 1
    touched_max = np.max(np.linalg.norm(vals, axis=1), axis=0) if len(sites) else np.zeros(n)
    entries = sorted(spec.corner.items())
    if small_corner:
        for (b, j), block in entries:
            raw[row_pos[b]] += block @ vals[where[j]]
            products += 1
        evaluated = len(sites)
    else:
        evaluated = len(sites)
        by_col: Dict[int, List[Tuple[int, np.ndarray]]] = {}
        for (b, j), block in entries:
            by_col.setdefault(j, []).append((row_pos[b], block))
        for lo in range(0, len(corner_cols), CORNER_CHUNK):
            cols = corner_cols[lo:lo + CORNER_CHUNK]
            cvals = basis.site_values(cols)
            evaluated += len(cols)
            touched_max = np.maximum(touched_max, np.max(np.linalg.norm(cvals, axis=1), axis=0))
            idx, blocks, src = [], [], []
            for k, j in enumerate(cols):
                for pos, block in by_col[j]:
                    idx.append(pos)
                    blocks.append(block)
                    src.append(k)
            contrib = np.einsum("eij,ejn->ein", np.asarray(blocks), cvals[np.asarray(src)])
            np.add.at(raw, np.asarray(idx), contrib)
            products += len(idx)
    if counter is not None:
        counter["site_values"] = counter.get("site_values", 0) + evaluated
        counter["block_products"] = counter.get("block_products", 0) + products
    raw = raw.reshape(len(rows) * d, n)
    scales = _column_scales(spec, basis, vals, touched_max)
    row_index = [(b, m) for b in rows for m in range(d)]
    return BoundaryMatrix(raw, scales, row_index, basis, basis.epsilon)


def _column_scales(spec, basis, vals, touched_max) -> np.ndarray:
    """Per-column scale: operator norm bound times the size of the bulk vector.

    Scaling by the vector rather than by the column of ``B`` keeps a column
    that shrinks to zero with ``epsilon`` (a vector that is almost a kernel
    vector on its own) visible as a small singular value.
    """
    op = basis.symbol.norm_sum() + spec.corner_norm()
    size = np.maximum(basis.intrinsic_norms(), touched_max) if len(basis) else np.zeros(0)
    scales = op * size
    return np.where(scales > 0, scales, 1.0)


def kernel(B: BoundaryMatrix, factor: Optional[float] = None, atol: Optional[float] = None,
           canonical: bool = False) -> List[np.ndarray]:
    """Kernel of the boundary matrix as coefficient vectors over the bulk basis.

    The nullspace is computed on the column-normalized matrix and the column
    scales are undone, so the returned ``alpha`` satisfy ``raw @ alpha = 0``.

    Parameters
    ----------
    factor : float, optional
        Rank tolerance factor (relative policy).
    atol : float, optional
        Absolute threshold on normalized singular values (e.g. the 1e-8
        acceptance threshold of the eigenvalue search).
    canonical : bool
        Return a pivoted reduced basis instead of an orthonormal one, which
        makes the output independent of SVD mixing within degenerate kernels.
    """
    basis, _ = nullspace(B.entries, factor=factor, atol=atol)
    if canonical:
        basis = canonical_basis(basis)
    return [basis[:, k] / B.scales for k in range(basis.shape[1])]


def reconstruct(basis: BulkBasis, alpha) -> np.ndarray:
    """Dense length-``N d`` vector ``sum_s alpha_s psi_s`` (O(N) time and memory)."""
    return basis.expand(alpha)


def iter_reconstruct(basis: BulkBasis, alpha, chunk: int = 4096):
    """Streaming variant of :func:`reconstruct` yielding ``(site, block)``."""
    return basis.iter_blocks(alpha, chunk)
