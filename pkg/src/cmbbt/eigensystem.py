"""Products, eigenvalues and generalized eigenspaces of corner-modified BBT matrices.

Eigenvalues are the ``epsilon`` where the boundary matrix ``B(epsilon)``
drops rank. The search evaluates the smallest singular value of the
column-normalized ``B`` (an O(1)-in-``N`` computation for symmetrical
corners), brackets its dips on a grid and polishes them. Generalized
eigenvectors come from the kernels of ``(C - epsilon)**kappa``, which is again
a corner-modified BBT matrix and is built with :func:`multiply`.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.optimize
from numpy.polynomial import Polynomial

from .boundary import AnsatzVector, BoundaryMatrix, assemble, kernel
from .bulk import BulkBasis, bulk_basis, symbol_roots
from .exceptions import NTooSmall, OracleCapExceeded, SingularSymbol
from .laurent import LaurentSymbol, balancing_radius, determinant, mul
from .numerics import nullspace
from .oracle import ORACLE_CAP, assemble_dense, dense_eigen, dense_nullspace
from .problem import ProblemSpec
from .rootfind import CLUSTER_RADIUS, RootCluster, roots

__all__ = [
    "multiply", "power", "singular_epsilons", "exceptional_epsilons", "SearchConfig",
    "EigenvalueRecord", "SpectrumResult", "eigenvalues", "evaluate_boundary",
    "GeneralizedEigenspace", "generalized_eigenspace",
]

log = logging.getLogger(__name__)


# --------------------------------------------------------------------------
# multiplication


def _identity_like(spec: ProblemSpec) -> ProblemSpec:
    return ProblemSpec(LaurentSymbol.identity(spec.d), spec.N)


def multiply(spec_a: ProblemSpec, spec_b: ProblemSpec, drop_rtol: float = 1e-15) -> ProblemSpec:
    """Product ``C_a C_b`` as a corner-modified BBT spec.

    The product symbol is ``A_a(w) A_b(w)``. Its declared bandwidth is
    ``(p_a' + p_b', q_a' + q_b')`` so that every row where the product can
    deviate from the Toeplitz part is a boundary row. On those rows the
    corner is ``W = C_a C_b - A_N``, computed from the sparse rows of the
    factors: the banded-banded, banded-corner, corner-banded and
    corner-corner contributions, minus the Toeplitz part of the product.
    Work is proportional to the number of corner entries, so it is
    independent of ``N`` for symmetrical corners.

    Raises
    ------
    NTooSmall
        Unless ``2 (N - 1) > tau_a + tau_b``.
    """
    if spec_a.d != spec_b.d:
        raise ValueError(f"block size mismatch: {spec_a.d} vs {spec_b.d}")
    if spec_a.N != spec_b.N:
        raise ValueError(f"size mismatch: N={spec_a.N} vs N={spec_b.N}")
    N = spec_a.N
    if not 2 * (N - 1) > spec_a.tau + spec_b.tau:
        raise NTooSmall(
            f"product needs 2(N-1) > tau_a + tau_b, got N={N}, taus {spec_a.tau}, {spec_b.tau}")
    sym = mul(spec_a.symbol, spec_b.symbol)
    p = spec_a.p_prime + spec_b.p_prime
    q = spec_a.q_prime + spec_b.q_prime
    if sym.is_zero:
        raise ValueError("product symbol vanishes identically")
    # rows of the product spec are fixed by its bandwidth
    probe = ProblemSpec(sym, N, bandwidth=(p, q), allow_empty_bulk=True)
    corner = {}
    for b in probe.boundary_rows:
        row_a = spec_a.row(b)
        acc: Dict[int, np.ndarray] = {}
        weight = 0.0
        for jp, blk_a in row_a.items():
            na = np.linalg.norm(blk_a, 2)
            for j, blk_b in spec_b.row(jp).items():
                prod = blk_a @ blk_b
                acc[j] = acc[j] + prod if j in acc else prod
                weight = max(weight, na * np.linalg.norm(blk_b, 2))
        for r, a in sym.items():
            j = b + r
            if 1 <= j <= N:
                acc[j] = acc[j] - a if j in acc else -a
        for j, blk in acc.items():
            if np.max(np.abs(blk)) > drop_rtol * weight * max(1, len(row_a)):
                corner[(b, j)] = blk
    return ProblemSpec(sym, N, corner, bandwidth=(p, q), allow_empty_bulk=N <= q - p)


def power(spec: ProblemSpec, epsilon, kappa: int) -> ProblemSpec:
    """``(C - epsilon)**kappa`` by repeated multiplication.

    Raises
    ------
    NTooSmall
        Unless ``2 (N - 1) > kappa * tau``.
    """
    if kappa < 1:
        raise ValueError("kappa must be a positive integer")
    base = spec.shifted(epsilon) if complex(epsilon) != 0 else spec
    if not 2 * (spec.N - 1) > kappa * base.tau:
        raise NTooSmall(f"power needs 2(N-1) > kappa*tau, got N={spec.N}, kappa={kappa}, "
                        f"tau={base.tau}")
    out = base
    for _ in range(kappa - 1):
        out = multiply(out, base)
    return out


# --------------------------------------------------------------------------
# determinant as a polynomial in (w, epsilon)


def _bivariate_det(symbol: LaurentSymbol, eps_radius: float):
    """Coefficients ``c[n, m]`` of ``det(w**(-p') (A(w) - eps))`` in ``w**n eps**m``.

    Returns ``(c, rho, eps_radius, bound)`` where ``c`` is given in scaled
    units (``c[n, m] rho**n eps_radius**m``) and ``bound`` bounds the
    determinant on the sampling torus.
    """
    d = symbol.d
    pp, qp = symbol.p_prime, symbol.q_prime
    tau = qp - pp
    Mw, Me = d * tau + 1, d + 1
    rho = balancing_radius(symbol)
    wn = rho * np.exp(2j * np.pi * np.arange(Mw) / Mw)
    en = eps_radius * np.exp(2j * np.pi * np.arange(Me) / Me)
    G = np.zeros((Mw, d, d), dtype=complex)
    for r, a in symbol.items():
        G += (wn ** (r - pp))[:, None, None] * a
    shift = (wn ** (-pp))[:, None, None] * np.eye(d)
    vals = np.linalg.det(G[:, None] - en[None, :, None, None] * shift[:, None])
    scaled = np.fft.fft2(vals) / (Mw * Me)
    bound = (sum(np.linalg.norm(a, 2) * rho ** (r - pp) for r, a in symbol.items())
             + eps_radius * rho ** (-pp)) ** d
    scaled[np.abs(scaled) <= 1e-11 * bound] = 0.0
    return scaled, rho, eps_radius, bound


def _eps_polys(symbol: LaurentSymbol, eps_radius: float):
    scaled, rho, er, bound = _bivariate_det(symbol, eps_radius)
    polys = []
    for n in range(scaled.shape[0]):
        row = scaled[n] / er ** np.arange(scaled.shape[1])
        polys.append(Polynomial(row))
    return polys, scaled, rho, er


def _nonzero(P: Polynomial) -> bool:
    return bool(np.any(P.coef != 0))


def _degree(P: Polynomial) -> int:
    nz = np.nonzero(P.coef)[0]
    return int(nz[-1]) if nz.size else -1


def _poly_roots(P: Polynomial) -> List[complex]:
    if _degree(P) < 1:
        return []
    clusters, zero_mult = roots(P)
    out = [cl.z for cl in clusters]
    if zero_mult:
        out.append(0j)
    return out


def singular_epsilons(symbol: LaurentSymbol) -> List[complex]:
    """All ``epsilon`` with ``det(A(w) - epsilon)`` identically zero in ``w``.

    Each ``w``-coefficient of the determinant is a polynomial in ``epsilon``;
    the singular values are their common roots. Candidates are the roots of
    the lowest-degree nonzero coefficient, confirmed by recomputing the
    determinant of the shifted symbol.
    """
    radius = max(1.0, symbol.norm_sum())
    polys, _, _, _ = _eps_polys(symbol, radius)
    nonzero = [P for P in polys if _nonzero(P)]
    if not nonzero:
        return []
    lowest = min(nonzero, key=_degree)
    out = []
    for eps in _poly_roots(lowest):
        P, _ = determinant(symbol - eps)
        if not _nonzero(P):
            out.append(_clean(eps, radius))
    return sorted(out, key=lambda e: (e.real, e.imag))


def _clean(z: complex, scale: float) -> complex:
    z = complex(z)
    re = 0.0 if abs(z.real) <= 1e-14 * scale else z.real
    im = 0.0 if abs(z.imag) <= 1e-14 * scale else z.imag
    return complex(re, im)


def exceptional_epsilons(symbol: LaurentSymbol, max_degree: int = 16) -> List[complex]:
    """``epsilon`` where the root structure of ``det(A - epsilon)`` changes.

    These are the zeros of the leading and trailing ``w``-coefficients (a
    root escapes to infinity or zero) and of the discriminant (two roots
    coalesce). At such points the basis of the bulk equation is rebuilt
    with a different multiplicity pattern, so they are probed explicitly
    by the eigenvalue search. Skipped (empty) when the ``w``-degree exceeds
    ``max_degree``.
    """
    radius = max(1.0, symbol.norm_sum())
    polys, scaled, rho, er = _eps_polys(symbol, radius)
    idx = [n for n, P in enumerate(polys) if _nonzero(P)]
    if not idx:
        return []
    lo, hi = idx[0], idx[-1]
    D = hi - lo
    out = []
    for n in {lo, hi}:
        out += _poly_roots(polys[n])
    if 2 <= D <= max_degree:
        d = symbol.d
        deg = d * (2 * D - 1)
        M = deg + 1
        en = er * np.exp(2j * np.pi * (np.arange(M) + 0.5) / M)
        vals = np.empty(M, dtype=complex)
        for k, e in enumerate(en):
            c = np.array([polys[n](e) * rho ** (n - lo) for n in range(lo, hi + 1)])
            vals[k] = _resultant(c)
        # nodes are rotated by half a step; undo the rotation after the FFT
        rot = np.exp(2j * np.pi * 0.5 * np.arange(M) / M)
        coef = np.fft.fft(vals) / M / rot / er ** np.arange(M)
        big = np.max(np.abs(coef * er ** np.arange(M)))
        coef[np.abs(coef * er ** np.arange(M)) <= 1e-10 * big] = 0.0
        out += _poly_roots(Polynomial(coef))
    uniq: List[complex] = []
    for e in out:
        e = _clean(e, radius)
        if all(abs(e - u) > 1e-9 * radius for u in uniq):
            uniq.append(e)
    return sorted(uniq, key=lambda e: (e.real, e.imag))


def _resultant(c: np.ndarray) -> complex:
    """Resultant of ``P`` (ascending coefficients ``c``) and ``P'`` via Sylvester."""
    P = c[::-1]
    dP = np.polyder(P)
    n, m = P.size - 1, dP.size - 1
    S = np.zeros((n + m, n + m), dtype=complex)
    for i in range(m):
        S[i, i:i + n + 1] = P
    for i in range(n):
        S[m + i, i:i + m + 1] = dP
    return complex(np.linalg.det(S))


# --------------------------------------------------------------------------
# eigenvalue search


@dataclass
class SearchConfig:
    """Eigenvalue search policy.

    Attributes
    ----------
    hermitian : bool or None
        Use the real-line scan. ``None`` uses the problem's ``hermitian_hint`` if set,
        else detects Hermiticity from the data.
    center, radius : complex, float or None
        Search disk; default is the norm bound ``|epsilon| <= sum |a_r| + |W|``.
    interval : (float, float) or None
        Real interval for the Hermitian scan (default from the disk).
    grid : int or None
        Number of initial grid points (per axis for the complex search).
    accept_tol : float
        Accept a root when the smallest normalized singular value of ``B``
        is at most this.
    dedup_rtol : float
        Roots closer than ``dedup_rtol * scale`` are merged.
    max_roots : int or None
        Stop after this many eigenvalues.
    max_refinements : int
        Grid refinement rounds when the Hermitian count is short.
    oracle_check : bool
        Compare against the dense eigensolver when ``N d`` is within the cap.
    threads : int
        Worker threads for grid evaluation.
    cluster_radius : float
        Root merge radius for the bulk basis.
    jordan : bool
        Run the generalized-eigenspace escalation at every non-singular
        eigenvalue to fill in algebraic multiplicities (non-Hermitian input;
        Hermitian input has trivial Jordan structure and is filled directly).
    """

    hermitian: Optional[bool] = None
    center: complex = 0.0
    radius: Optional[float] = None
    interval: Optional[Tuple[float, float]] = None
    grid: Optional[int] = None
    accept_tol: float = 1e-8
    dedup_rtol: float = 1e-7
    max_roots: Optional[int] = None
    max_refinements: int = 3
    oracle_check: bool = False
    threads: int = 1
    cluster_radius: float = CLUSTER_RADIUS
    jordan: bool = False


@dataclass
class EigenvalueRecord:
    """One eigenvalue: geometric multiplicity from ``dim Ker B``.

    ``algebraic`` and ``kappa_max`` are filled by the Jordan analysis
    (``None`` until then). ``singular`` marks values where ``A - epsilon`` is
    singular (flat bands); their multiplicity may be unknown.
    """

    epsilon: complex
    geometric: Optional[int]
    algebraic: Optional[int] = None
    kappa_max: Optional[int] = None
    residual: float = 0.0
    singular: bool = False


@dataclass
class SpectrumResult:
    eigenvalues: List[EigenvalueRecord]
    eigenvectors: List[AnsatzVector]
    diagnostics: dict = field(default_factory=dict)

    @property
    def values(self) -> np.ndarray:
        """Eigenvalues repeated by (geometric) multiplicity, sorted."""
        out = []
        for rec in self.eigenvalues:
            out += [rec.epsilon] * (rec.geometric or 0)
        out = np.array(out, dtype=complex)
        return out[np.lexsort((out.imag, out.real))] if out.size else out

    @property
    def complete(self) -> Optional[bool]:
        return self.diagnostics.get("complete")


@dataclass
class _Probe:
    epsilon: complex
    smin: float
    B: Optional[BoundaryMatrix] = None
    error: Optional[str] = None


def evaluate_boundary(spec: ProblemSpec, epsilon, cluster_radius: float = CLUSTER_RADIUS
                      ) -> BoundaryMatrix:
    """Bulk basis plus boundary matrix at one ``epsilon``."""
    basis = bulk_basis(spec, epsilon, cluster_radius=cluster_radius)
    return assemble(spec, basis)


def _probe(spec: ProblemSpec, eps: complex, cfg: SearchConfig) -> _Probe:
    try:
        B = evaluate_boundary(spec, eps, cfg.cluster_radius)
    except SingularSymbol:
        return _Probe(eps, np.inf, error="singular")
    except NTooSmall:
        # extra finite-support solutions at this epsilon need a longer chain
        return _Probe(eps, np.inf, error="n_too_small")
    if B.shape[1] == 0:
        return _Probe(eps, np.inf, B)
    return _Probe(eps, B.smallest_singular_value(), B)


class _Evaluator:
    """Caches ``sigma_min(B(epsilon))`` and records a trace."""

    def __init__(self, spec, cfg):
        self.spec, self.cfg = spec, cfg
        self.count = 0

    def __call__(self, eps) -> _Probe:
        self.count += 1
        return _probe(self.spec, complex(eps), self.cfg)

    def many(self, points) -> List[_Probe]:
        if self.cfg.threads > 1:
            with ThreadPoolExecutor(self.cfg.threads) as pool:
                res = list(pool.map(self.__call__, points))
        else:
            res = [self(e) for e in points]
        return res


def _nullity(B: BoundaryMatrix, tol: float) -> int:
    return int(np.sum(B.singular_values() <= tol))


def eigenvalues(spec: ProblemSpec, search: Optional[SearchConfig] = None) -> SpectrumResult:
    """Eigenvalues of ``C`` with eigenvectors as ansatz vectors.

    Singular ``epsilon`` (where ``A - epsilon`` has zero determinant) are
    reported separately: accepted outright for symmetrical corners, decided
    by a dense determinant at oracle scale otherwise. All other eigenvalues
    are roots of ``det B(epsilon)``, located as dips of the smallest
    singular value of the column-normalized ``B``.

    For Hermitian ``C`` the search runs on the real interval and the total
    multiplicity must reach ``N d``; shortfalls trigger a deflated search
    next to every accepted root (for near-degenerate pairs) and then grid
    refinement. ``diagnostics["complete"]`` records the outcome; it is
    ``None`` when completeness cannot be certified (non-Hermitian input
    without oracle check, or a real interval that does not cover the whole
    spectral disk; such scans stop once a refinement level adds no root).
    """
    cfg = search or SearchConfig()
    hermitian = cfg.hermitian
    if hermitian is None:
        hermitian = spec.hermitian_hint if spec.hermitian_hint is not None else spec.is_hermitian()
    hermitian = bool(hermitian)
    radius = cfg.radius if cfg.radius is not None else spec.norm_bound() * (1 + 1e-9) + 1e-12
    scale = max(radius, 1e-300)
    ev = _Evaluator(spec, cfg)
    diag: dict = {"hermitian": hermitian, "radius": radius, "trace": []}
    # a chain too short at a generic point is too short everywhere: fail early
    generic = cfg.center + radius * (0.3183098861837907 + (0 if hermitian else 0.2718281828j))
    try:
        evaluate_boundary(spec, generic, cfg.cluster_radius)
    except SingularSymbol:
        pass

    sing = [e for e in singular_epsilons(spec.symbol) if abs(e - cfg.center) <= radius]
    if hermitian:
        sing = [complex(e.real, 0.0) for e in sing if abs(e.imag) <= 1e-9 * scale]
    special = exceptional_epsilons(spec.symbol)
    diag["singular_epsilons"] = sing
    diag["exceptional_epsilons"] = special

    accepted: Dict[complex, _Probe] = {}
    exact: set = set()

    def consider(pr: _Probe, how: str):
        if pr.B is None or not np.isfinite(pr.smin) or pr.smin > cfg.accept_tol:
            return False
        if any(abs(pr.epsilon - e) <= cfg.dedup_rtol * scale for e in sing):
            return False
        for e in list(accepted):
            if abs(pr.epsilon - e) <= cfg.dedup_rtol * scale:
                # an exact exceptional point beats a nearby polished root
                if e in exact and how != "exceptional":
                    return False
                if how == "exceptional" or pr.smin < accepted[e].smin:
                    del accepted[e]
                    break
                return False
        accepted[pr.epsilon] = pr
        if how == "exceptional":
            exact.add(pr.epsilon)
        diag["trace"].append((how, pr.epsilon, pr.smin))
        return True

    for e in special:
        if hermitian and abs(e.imag) > 1e-9 * scale:
            continue
        e = complex(e.real, 0.0) if hermitian else e
        if abs(e - cfg.center) <= radius:
            consider(ev(e), "exceptional")

    sing_mult = _singular_multiplicities(spec, sing)
    target = spec.size

    def total():
        return sum(_nullity(pr.B, cfg.accept_tol) for pr in accepted.values()) + \
            sum(m for m in sing_mult.values() if m is not None)

    if hermitian:
        lo, hi = cfg.interval or (cfg.center.real - radius, cfg.center.real + radius)
        n_grid = cfg.grid or max(200, 8 * spec.size)
        known_sing = all(m is not None for m in sing_mult.values())
        # a partial interval has no known target count; refine until a level adds nothing
        partial = lo > cfg.center.real - radius or hi < cfg.center.real + radius
        if partial:
            target = None
        deflated: set = set()
        for level in range(cfg.max_refinements + 1):
            before = len(accepted)
            _real_scan(ev, lo, hi, n_grid * 4 ** level, consider, cfg, scale)
            if cfg.max_roots and len(accepted) >= cfg.max_roots:
                break
            if partial:
                _deflated_neighbours(ev, accepted, consider, (hi - lo) / (n_grid * 4 ** level),
                                     cfg, scale, lo, hi, deflated, lambda: False,
                                     anchors=[e for e in special if abs(e.imag) <= 1e-9 * scale])
                if level and len(accepted) == before:
                    break
                continue
            if known_sing and total() >= target:
                break
            _deflated_neighbours(ev, accepted, consider, (hi - lo) / (n_grid * 4 ** level), cfg,
                                 scale, lo, hi, deflated,
                                 lambda: known_sing and total() >= target,
                                 anchors=[e for e in special if abs(e.imag) <= 1e-9 * scale])
            if known_sing and total() >= target:
                break
        complete = (total() == target) if known_sing and target is not None else None
        if target is not None and not known_sing and total() <= target and sing:
            # remaining multiplicity can only sit on the singular values
            diag["singular_multiplicity_total"] = target - total()
    else:
        n_grid = cfg.grid or max(40, int(np.ceil(3 * np.sqrt(spec.size))) * 4)
        _complex_scan(ev, cfg.center, radius, n_grid, consider, cfg, scale)
        complete = None
    diag["evaluations"] = ev.count

    records, vectors = [], []
    for eps in sorted(accepted, key=lambda e: (e.real, e.imag)):
        pr = accepted[eps]
        alphas = kernel(pr.B, atol=cfg.accept_tol, canonical=True)
        records.append(EigenvalueRecord(eps, len(alphas), residual=pr.smin))
        vectors += [AnsatzVector(eps, 1, a, pr.B.basis) for a in alphas]
    for e in sing:
        records.append(EigenvalueRecord(e, sing_mult.get(e), singular=True))
    records.sort(key=lambda r: (r.epsilon.real, r.epsilon.imag))
    if cfg.max_roots:
        records = records[: cfg.max_roots]
    for rec in records:
        if hermitian:
            rec.algebraic, rec.kappa_max = rec.geometric, 1
        elif cfg.jordan and not rec.singular:
            try:
                ge = generalized_eigenspace(spec, rec.epsilon, accept_tol=cfg.accept_tol,
                                            cluster_radius=cfg.cluster_radius)
                rec.algebraic = ge.dims[ge.kappa_max - 1] if ge.kappa_max else 0
                rec.kappa_max = ge.kappa_max
            except (NTooSmall, OracleCapExceeded) as exc:
                diag.setdefault("jordan_skipped", []).append((rec.epsilon, str(exc)))

    if cfg.oracle_check:
        diag["oracle"] = _oracle_diff(spec, records, hermitian)
        if complete is None and "matched" in diag["oracle"]:
            complete = diag["oracle"]["matched"]
    diag["complete"] = complete
    diag["multiplicity_total"] = total()
    return SpectrumResult(records, vectors, diag)


def _singular_multiplicities(spec: ProblemSpec, sing: Sequence[complex]) -> Dict[complex, Optional[int]]:
    """Dense nullity at singular epsilon when the oracle is affordable, else None."""
    out: Dict[complex, Optional[int]] = {}
    for e in sing:
        try:
            M = assemble_dense(spec) - e * np.eye(spec.size)
            out[e] = dense_nullspace(M, factor=None).shape[1]
        except OracleCapExceeded:
            out[e] = None
    return out


def _real_scan(ev, lo, hi, n, consider, cfg, scale):
    xs = np.linspace(lo, hi, int(n))
    probes = ev.many(xs)
    f = np.array([pr.smin for pr in probes])
    for i, pr in enumerate(probes):
        consider(pr, "grid")
    for i in range(len(xs)):
        if not np.isfinite(f[i]):
            continue
        left = f[i - 1] if i > 0 else np.inf
        right = f[i + 1] if i + 1 < len(xs) else np.inf
        if f[i] <= left and f[i] <= right:
            a, b = xs[max(i - 1, 0)], xs[min(i + 1, len(xs) - 1)]
            consider(_minimize_1d(ev, a, b, scale), "refine")


def _minimize_1d(ev, a, b, scale, weight: Callable[[float], float] = None,
                 rounds: int = 5) -> _Probe:
    """Brent minimization of ``sigma_min**2`` (optionally deflated) on ``[a, b]``.

    Brent's stopping rule is relative to ``|x|``; minimizing over the offset
    from the bracket centre makes it relative to the bracket width instead,
    and shrinking the bracket around the best point repeats that until the
    width reaches rounding level.
    """
    best: List[_Probe] = []

    def value(pr, x):
        val = pr.smin if np.isfinite(pr.smin) else 1e100
        if weight is not None:
            val = val / max(weight(x), 1e-100)
        return min(val, 1e100)

    if b <= a:
        return ev(a)
    floor = 4 * np.finfo(float).eps * max(scale, abs(a), abs(b))
    lo, hi = a, b
    for _ in range(rounds):
        c = 0.5 * (lo + hi)
        h = 0.5 * (hi - lo)

        def obj(y, c=c):
            pr = ev(c + y)
            best.append(pr)
            return value(pr, c + y) ** 2

        scipy.optimize.minimize_scalar(obj, bounds=(-h, h), method="bounded",
                                       options={"xatol": floor, "maxiter": 200})
        top = min(best, key=lambda pr: value(pr, pr.epsilon.real))
        x = top.epsilon.real
        h_new = max(8 * np.sqrt(np.finfo(float).eps) * h, floor)
        if h_new >= h or h <= floor:
            break
        lo, hi = max(a, x - h_new), min(b, x + h_new)
    return min(best, key=lambda pr: pr.smin)


def _deflated_neighbours(ev, accepted, consider, h, cfg, scale, lo, hi, done, finished,
                         anchors=()):
    """Look for a second root hiding next to each accepted one.

    Near a root ``e0`` the smallest singular value behaves like
    ``|f(eps)|`` with ``f`` analytic; dividing by ``|eps - e0|`` removes that
    zero so a partner closer than the grid spacing shows up as a minimum.
    Exceptional points are used as extra ``anchors``: the band-edge cusp of
    ``sigma_min`` there can hide a root within one grid step. Each root is
    visited once (``done`` persists across calls) and the
    search stops as soon as ``finished()`` reports a complete count.
    """
    gap = max(1e3 * cfg.dedup_rtol * scale, 1e-12 * scale)
    anchors = [complex(a.real, 0.0) for a in anchors if lo <= a.real <= hi]
    queue = [e for e in sorted(list(accepted) + anchors, key=lambda e: e.real) if e not in done]
    while queue:
        e0 = queue.pop(0)
        done.add(e0)
        near = [e for e in list(accepted) + anchors if abs(e - e0) <= 4 * h]
        weight = lambda x, near=near: float(np.prod([abs(x - e.real) for e in near]))
        for a, b in ((e0.real - 2 * h, e0.real - gap), (e0.real + gap, e0.real + 2 * h)):
            a, b = max(a, lo), min(b, hi)
            if b <= a:
                continue
            before = set(accepted)
            if consider(_minimize_1d(ev, a, b, scale, weight), "deflated"):
                queue += [e for e in accepted if e not in before and e not in done]
                if finished():
                    return


def _complex_scan(ev, center, radius, n, consider, cfg, scale):
    xs = np.linspace(-radius, radius, n)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    pts = center + X + 1j * Y
    inside = np.abs(pts - center) <= radius * 1.0001
    flat = [complex(z) for z in pts[inside]]
    probes = ev.many(flat)
    F = np.full(pts.shape, np.inf)
    F[inside] = [pr.smin for pr in probes]
    for pr in probes:
        consider(pr, "grid")
    step = xs[1] - xs[0]
    for i in range(n):
        for j in range(n):
            if not np.isfinite(F[i, j]):
                continue
            nb = F[max(i - 1, 0):i + 2, max(j - 1, 0):j + 2]
            if F[i, j] <= nb.min():
                consider(_minimize_2d(ev, pts[i, j], step, scale), "refine")


def _minimize_2d(ev, z0, step, scale) -> _Probe:
    best: List[_Probe] = []

    def obj(x):
        pr = ev(complex(x[0], x[1]))
        best.append(pr)
        v = pr.smin if np.isfinite(pr.smin) else 1e100
        return v * v

    simplex = np.array([[z0.real, z0.imag], [z0.real + step, z0.imag], [z0.real, z0.imag + step]])
    scipy.optimize.minimize(obj, [z0.real, z0.imag], method="Nelder-Mead",
                            options={"initial_simplex": simplex, "xatol": 1e-14 * scale,
                                     "fatol": 1e-32, "maxiter": 600})
    return min(best, key=lambda pr: pr.smin)


def _oracle_diff(spec: ProblemSpec, records: List[EigenvalueRecord], hermitian: bool) -> dict:
    try:
        M = assemble_dense(spec)
    except OracleCapExceeded as exc:
        return {"skipped": str(exc)}
    dense, _ = dense_eigen(M, hermitian=hermitian)
    found = []
    for rec in records:
        found += [rec.epsilon] * (rec.geometric or 0)
    found = np.array(found, dtype=complex)
    out = {"dense_count": int(dense.size), "found_count": int(found.size)}
    if found.size == dense.size and found.size:
        if hermitian:
            diff = np.abs(np.sort(found.real) - np.sort(dense.real))
        else:
            cost = np.abs(found[:, None] - dense[None, :])
            r, c = scipy.optimize.linear_sum_assignment(cost)
            diff = cost[r, c]
        out["max_diff"] = float(diff.max())
        out["matched"] = bool(diff.max() <= 1e-6 * max(1.0, np.abs(dense).max()))
    else:
        out["matched"] = False
    return out


# --------------------------------------------------------------------------
# generalized eigenspaces


@dataclass
class GeneralizedEigenspace:
    """Jordan data at one eigenvalue.

    Attributes
    ----------
    epsilon : complex
    kappa_max : int
        Smallest ``k`` with ``Ker (C-eps)^k = Ker (C-eps)^(k+1)``.
    dims : list of int
        ``dim Ker (C - eps)^k`` for ``k = 1..kappa_max+1``.
    vectors : list of AnsatzVector
        Basis of ``Ker (C-eps)^kappa_max`` adapted to the filtration; the
        ``rank`` of each vector is its Jordan rank.
    routes : list of str
        ``"structured"`` or ``"dense"`` per stage.
    """

    epsilon: complex
    kappa_max: int
    dims: List[int]
    vectors: List[AnsatzVector]
    routes: List[str]


def generalized_eigenspace(spec: ProblemSpec, epsilon, max_kappa: Optional[int] = None,
                           accept_tol: float = 1e-8, cluster_radius: float = CLUSTER_RADIUS,
                           dense_fallback: bool = True) -> GeneralizedEigenspace:
    """Escalate ``kappa`` until ``dim Ker (C - epsilon)^kappa`` stops growing.

    Each stage builds ``(C - epsilon)^kappa`` with :func:`power` and solves its
    kernel with the bulk/boundary pipeline, reusing the roots of
    ``det(A - epsilon)`` with multiplicities scaled by ``kappa``. A stage whose
    structured solution is unavailable (singular shifted symbol, empty bulk,
    or ``N < 2 sigma + tau``, all of which bound ``N d`` by a constant times
    ``d tau``) falls back to a dense kernel when ``dense_fallback`` is set.

    Raises
    ------
    NTooSmall
        When ``2 (N - 1) > kappa * tau`` fails before the dimension stabilizes.
    """
    epsilon = complex(epsilon)
    base_sym = spec.symbol - epsilon if epsilon != 0 else spec.symbol
    try:
        base_clusters = symbol_roots(base_sym, epsilon, cluster_radius)
    except SingularSymbol:
        base_clusters = None
    dims = [0]
    stages: List[Tuple[str, np.ndarray, Optional[np.ndarray], Optional[BulkBasis]]] = []
    routes: List[str] = []
    kappa = 0
    limit = max_kappa or spec.size + 1
    while kappa < limit:
        kappa += 1
        stage_spec = power(spec, epsilon, kappa)
        route, dense_k, alphas, basis = _stage_kernel(stage_spec, base_clusters, kappa, accept_tol,
                                                     dense_fallback)
        routes.append(route)
        stages.append((route, dense_k, alphas, basis))
        dims.append(dense_k.shape[1])
        if dims[-1] <= dims[-2]:
            break
    kappa_max = kappa - 1 if dims[-1] <= dims[-2] else kappa
    vectors = _filtration_basis(epsilon, stages[:kappa_max], dims, spec.d)
    return GeneralizedEigenspace(epsilon, kappa_max, dims[1:], vectors, routes)


def _stage_kernel(stage_spec, base_clusters, kappa, accept_tol, dense_fallback):
    try:
        if base_clusters is None:
            raise SingularSymbol()
        clusters = [cl.scaled(kappa) for cl in base_clusters]
        basis = bulk_basis(stage_spec, 0.0, clusters=clusters)
        B = assemble(stage_spec, basis)
        alphas = kernel(B, atol=accept_tol)
        A = np.array(alphas).T if alphas else np.zeros((len(basis), 0), dtype=complex)
        dense_k = np.column_stack([basis.expand(a) for a in alphas]) if alphas else \
            np.zeros((stage_spec.size, 0), dtype=complex)
        return "structured", dense_k, A, basis
    except (SingularSymbol, NTooSmall):
        if not dense_fallback:
            raise
        M = assemble_dense(stage_spec)
        return "dense", dense_nullspace(M), None, None


def _filtration_basis(epsilon, stages, dims, d) -> List[AnsatzVector]:
    """Pick ``dims[k] - dims[k-1]`` new directions at each stage ``k``."""
    vectors: List[AnsatzVector] = []
    Q = None
    for k, (route, dense_k, alphas, basis) in enumerate(stages, start=1):
        new = dims[k] - dims[k - 1]
        if new <= 0 or dense_k.shape[1] == 0:
            continue
        R = dense_k if Q is None else dense_k - Q @ (Q.conj().T @ dense_k)
        _, _, vh = np.linalg.svd(R, full_matrices=False)
        C = vh[:new].conj().T
        for c in C.T:
            if route == "structured":
                vectors.append(AnsatzVector(epsilon, k, alphas @ c, basis))
            else:
                vectors.append(AnsatzVector(epsilon, k, dense=dense_k @ c, d=d))
        Q, _ = np.linalg.qr(dense_k)
    return vectors
