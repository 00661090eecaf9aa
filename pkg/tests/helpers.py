"""Random problem generators and exact reference computations for the tests."""

import numpy as np

from cmbbt.laurent import LaurentSymbol
from cmbbt.oracle import assemble_dense, bulk_rows_dense, dense_nullspace
from cmbbt.problem import ProblemSpec


def random_block(rng, d, real=False):
    a = rng.normal(size=(d, d))
    return a if real else a + 1j * rng.normal(size=(d, d))


def random_symbol(rng, d, p, q, deficient=0.3):
    """Random symbol on ``p..q``; outer coefficients are rank-deficient with some probability."""
    coeffs = {}
    for r in range(p, q + 1):
        a = random_block(rng, d)
        if r in (p, q) and d > 1 and rng.random() < deficient:
            u = rng.normal(size=(d, 1)) + 1j * rng.normal(size=(d, 1))
            v = rng.normal(size=(1, d)) + 1j * rng.normal(size=(1, d))
            a = u @ v
        coeffs[r] = a
    return LaurentSymbol(coeffs, d=d)


def hermitian_symbol(rng, d, q):
    coeffs = {0: None}
    a0 = random_block(rng, d)
    coeffs[0] = a0 + a0.conj().T
    for r in range(1, q + 1):
        a = random_block(rng, d)
        coeffs[r] = a
        coeffs[-r] = a.conj().T
    return LaurentSymbol(coeffs, d=d)


def random_corner(rng, spec, symmetric=True, entries=3, hermitian=False):
    """Corner on the boundary rows; with ``hermitian`` the mirrored blocks are added."""
    cols = spec.boundary_cols if symmetric else list(range(1, spec.N + 1))
    corner = {}
    for b in spec.boundary_rows:
        for j in rng.choice(cols, size=min(entries, len(cols)), replace=False):
            j = int(j)
            if hermitian and j not in spec.boundary_rows:
                continue
            corner[(b, j)] = corner.get((b, j), 0) + random_block(rng, spec.d)
    if hermitian:
        sym = {}
        for (b, j), blk in corner.items():
            sym[(b, j)] = sym.get((b, j), 0) + blk
            sym[(j, b)] = sym.get((j, b), 0) + blk.conj().T
        corner = sym
    return spec.with_corner(corner)


def property_instances(count=200, seed=20240607, n_max=40):
    """``count`` random regular problems, alternating Hermitian and general.

    Hermitian ones have ``p = -q``, Hermitian coefficients and a Hermitian
    corner on the boundary rows and columns. General ones have independent
    ``p in [-2, 0]``, ``q in [0, 2]`` and a symmetrical corner.
    """
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        d = int(rng.integers(1, 4))
        hermitian = len(out) % 2 == 0
        if hermitian:
            q = int(rng.integers(1, 3))
            p = -q
            sym = hermitian_symbol(rng, d, q)
        else:
            p, q = -int(rng.integers(0, 3)), int(rng.integers(0, 3))
            if p == q == 0:
                q = 1
            sym = random_symbol(rng, d, p, q)
        tau = q - p
        n_min = 2 * d * tau + tau + 1
        N = int(rng.integers(n_min, n_max + 1))
        spec = ProblemSpec(sym, N, bandwidth=(p, q))
        spec = random_corner(rng, spec, symmetric=True, hermitian=hermitian)
        out.append((spec, hermitian, rng))
    return out


def planted_corner(rng, spec, epsilons):
    """Least-norm corner (all columns allowed) making every ``epsilon`` an eigenvalue.

    For each ``epsilon`` a random bulk solution ``psi`` is drawn from the dense
    bulk nullspace; the corner ``W`` restricted to the boundary rows solves
    ``W psi_k = -(A_N - epsilon_k) psi_k`` there.
    """
    d, N = spec.d, spec.N
    base = spec.with_corner(None)
    A = assemble_dense(base)
    rows = np.concatenate([np.arange((b - 1) * d, b * d) for b in base.boundary_rows])
    Psi, R = [], []
    for eps in epsilons:
        K = dense_nullspace(bulk_rows_dense(base, eps))
        psi = K @ (rng.normal(size=K.shape[1]) + 1j * rng.normal(size=K.shape[1]))
        psi /= np.linalg.norm(psi)
        Psi.append(psi)
        R.append(-((A - eps * np.eye(N * d)) @ psi)[rows])
    Psi, R = np.array(Psi).T, np.array(R).T
    W = R @ np.linalg.pinv(Psi)
    corner = {}
    for bi, b in enumerate(base.boundary_rows):
        for j in range(1, N + 1):
            blk = W[bi * d:(bi + 1) * d, (j - 1) * d:j * d]
            if np.any(blk != 0):
                corner[(b, j)] = blk
    return base.with_corner(corner), Psi


def modular_rank(M, prime):
    """Rank of an integer matrix over GF(prime)."""
    A = np.array(M, dtype=object) % prime
    rows, cols = A.shape
    rank = 0
    for c in range(cols):
        piv = next((r for r in range(rank, rows) if A[r, c] % prime), None)
        if piv is None:
            continue
        A[[rank, piv]] = A[[piv, rank]]
        inv = pow(int(A[rank, c]), prime - 2, prime)
        A[rank] = (A[rank] * inv) % prime
        for r in range(rows):
            if r != rank and A[r, c]:
                A[r] = (A[r] - A[r, c] * A[rank]) % prime
        rank += 1
        if rank == rows:
            break
    return rank


def exact_rank(M):
    """Rank of an integer matrix over the rationals (max over two large primes)."""
    M = np.array(M, dtype=object)
    return max(modular_rank(M, 2_147_483_647), modular_rank(M, 1_000_000_007))


def integer_dense(spec):
    """Dense matrix of an integer-valued spec as Python ints."""
    M = assemble_dense(spec)
    assert np.allclose(M.imag, 0) and np.allclose(M.real, np.round(M.real))
    return np.array(np.round(M.real).astype(np.int64), dtype=object)
