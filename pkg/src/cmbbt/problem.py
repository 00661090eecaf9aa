"""Problem specification: a symbol, a size ``N`` and a corner modification.

Sites are numbered ``1..N`` so that the ``(i, j)`` block of the banded part is
``a_{j-i}``. The corner modification ``W`` is a sparse map from block
positions ``(b, j)`` to ``d x d`` blocks and may only touch boundary rows
(rows that the band truncation cuts short).
"""

from typing import Dict, Iterable, List, Mapping, Optional, Tuple, Union

import numpy as np

from .laurent import LaurentSymbol

CornerInput = Union[Mapping[Tuple[int, int], object], Iterable[Tuple[int, int, object]], None]


def _bandwidth_sets(N: int, p_prime: int, q_prime: int):
    left_rows = list(range(1, min(-p_prime, N) + 1))
    right_rows = list(range(max(N - q_prime + 1, 1), N + 1))
    rows = sorted(set(left_rows) | set(right_rows))
    left_cols = list(range(1, min(q_prime, N) + 1))
    right_cols = list(range(max(N + p_prime + 1, 1), N + 1))
    cols = sorted(set(left_cols) | set(right_cols))
    return rows, cols


class ProblemSpec:
    """Corner-modified banded block-Toeplitz matrix ``C = A_N + W``.

    Parameters
    ----------
    symbol : LaurentSymbol
        Generating symbol; must not be the zero symbol.
    N : int
        Number of block sites.
    corner : mapping or iterable, optional
        ``{(b, j): block}`` or ``[(b, j, block), ...]`` with 1-based sites.
        Repeated positions are summed; zero blocks are dropped.
    bandwidth : (int, int), optional
        Declared bandwidth ``(p, q)``. Defaults to the symbol's own. A wider
        declaration is needed when a product of matrices has cancelling
        outer coefficients but still differs from the Toeplitz part on the
        rows of the wider boundary.
    allow_empty_bulk : bool
        Permit ``N <= tau`` (every row is a boundary row). Only the dense
        fallback can handle such specs.

    Attributes
    ----------
    hermitian_hint : bool or None
        Caller's claim about Hermiticity (from a problem document); the
        eigenvalue search uses it to pick the real-line scan.

    Notes
    -----
    Boundary rows are ``{1..-p'} U {N-q'+1..N}``. Boundary columns, the
    support allowed for a *symmetrical* corner, are ``{1..q'} U {N+p'+1..N}``.
    """

    hermitian_hint: Optional[bool] = None

    def __init__(self, symbol: LaurentSymbol, N: int, corner: CornerInput = None,
                 bandwidth: Optional[Tuple[int, int]] = None, allow_empty_bulk: bool = False):
        if not isinstance(symbol, LaurentSymbol):
            raise TypeError("symbol must be a LaurentSymbol")
        if symbol.is_zero:
            raise ValueError("the zero symbol has no bandwidth and cannot define a problem")
        if int(N) != N or N < 1:
            raise ValueError(f"N must be a positive integer, got {N!r}")
        self.symbol = symbol
        self.N = int(N)
        p, q = (symbol.p, symbol.q) if bandwidth is None else (int(bandwidth[0]), int(bandwidth[1]))
        if p > q:
            raise ValueError(f"bandwidth ({p}, {q}) has p > q")
        if symbol.p < p or symbol.q > q:
            raise ValueError(
                f"declared bandwidth ({p}, {q}) does not contain the symbol support "
                f"({symbol.p}, {symbol.q})")
        self.p, self.q = p, q
        if self.N <= self.tau and not allow_empty_bulk:
            raise ValueError(f"N={self.N} must exceed tau={self.tau} (the bulk would be empty)")
        self.boundary_rows, self.boundary_cols = _bandwidth_sets(self.N, self.p_prime, self.q_prime)
        self._row_set = set(self.boundary_rows)
        self.corner: Dict[Tuple[int, int], np.ndarray] = {}
        for (b, j), block in _iter_corner(corner):
            self._add_corner(b, j, block)

    def _add_corner(self, b, j, block):
        d = self.d
        if int(b) != b or int(j) != j:
            raise ValueError(f"corner position ({b}, {j}) is not integral")
        b, j = int(b), int(j)
        if not (1 <= j <= self.N):
            raise ValueError(f"corner column {j} outside 1..{self.N}")
        if b not in self._row_set:
            raise ValueError(
                f"corner row {b} is not a boundary row {self.boundary_rows} "
                "(a corner modification must vanish on bulk rows)")
        block = np.atleast_2d(np.asarray(block, dtype=complex))
        if block.shape != (d, d):
            raise ValueError(f"corner block at ({b}, {j}) has shape {block.shape}, expected {(d, d)}")
        if not np.all(np.isfinite(block)):
            raise ValueError(f"corner block at ({b}, {j}) has non-finite entries")
        total = self.corner.get((b, j), 0) + block
        if np.any(total != 0):
            self.corner[(b, j)] = total
        else:
            self.corner.pop((b, j), None)

    # bandwidth data
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
    def size(self) -> int:
        return self.N * self.d

    @property
    def symmetric(self) -> bool:
        """True when every corner column is a boundary column."""
        cols = set(self.boundary_cols)
        return all(j in cols for (_, j) in self.corner)

    def corner_rows(self) -> Dict[int, List[Tuple[int, np.ndarray]]]:
        """Corner entries grouped by row, columns sorted."""
        rows: Dict[int, List[Tuple[int, np.ndarray]]] = {}
        for (b, j) in sorted(self.corner):
            rows.setdefault(b, []).append((j, self.corner[(b, j)]))
        return rows

    def corner_norm(self) -> float:
        """Largest block-row sum of corner block norms."""
        sums: Dict[int, float] = {}
        for (b, _), block in self.corner.items():
            sums[b] = sums.get(b, 0.0) + float(np.linalg.norm(block, 2))
        return max(sums.values(), default=0.0)

    def norm_bound(self) -> float:
        """Upper bound on the spectral radius of ``C``."""
        return self.symbol.norm_sum() + self.corner_norm()

    def row(self, i: int) -> Dict[int, np.ndarray]:
        """Nonzero blocks of block-row ``i`` of ``C`` as ``{column: block}``."""
        out: Dict[int, np.ndarray] = {}
        for r, a in self.symbol.items():
            j = i + r
            if 1 <= j <= self.N:
                out[j] = a
        for (b, j), block in self.corner.items():
            if b == i:
                out[j] = out[j] + block if j in out else block
        return out

    def shifted(self, epsilon) -> "ProblemSpec":
        """Spec of ``C - epsilon * I`` (bandwidth widened to contain 0)."""
        sym = self.symbol - complex(epsilon)
        if sym.is_zero:
            raise ValueError("C - epsilon has a zero symbol")
        return ProblemSpec(sym, self.N, self.corner, bandwidth=(self.p_prime, self.q_prime),
                           allow_empty_bulk=True)

    def is_hermitian(self, rtol: float = 1e-13) -> bool:
        """Hermiticity of ``C``, checked on the symbol and corner data only."""
        if not self.symbol.is_hermitian(rtol):
            return False
        scale = max(self.norm_bound(), 1.0)
        for (b, j), block in self.corner.items():
            other = self.corner.get((j, b))
            mirror = np.zeros_like(block) if other is None else other.conj().T
            # toeplitz part is already hermitian, so W itself must be
            if np.max(np.abs(block - mirror)) > rtol * scale:
                return False
        return True

    def with_corner(self, corner: CornerInput) -> "ProblemSpec":
        return ProblemSpec(self.symbol, self.N, corner, bandwidth=(self.p, self.q),
                           allow_empty_bulk=self.N <= self.tau)

    def __repr__(self):
        return (f"ProblemSpec(d={self.d}, p={self.p}, q={self.q}, N={self.N}, "
                f"corner_entries={len(self.corner)}, symmetric={self.symmetric})")


def _iter_corner(corner: CornerInput):
    if corner is None:
        return
    if isinstance(corner, Mapping):
        for key, block in corner.items():
            yield key, block
        return
    for entry in corner:
        if isinstance(entry, Mapping):
            yield (entry["row"], entry["col"]), entry["block"]
        else:
            b, j, block = entry
            yield (b, j), block
