import numpy as np
import pytest

from helpers import random_corner, random_symbol

from cmbbt.eigensystem import (SearchConfig, eigenvalues, exceptional_epsilons,
                               generalized_eigenspace, multiply, power, singular_epsilons)
from cmbbt.exceptions import NTooSmall
from cmbbt.laurent import LaurentSymbol
from cmbbt.models import KitaevParams, kitaev_spec, kitaev_symbol
from cmbbt.oracle import assemble_dense
from cmbbt.problem import ProblemSpec
from cmbbt.validation import multiset_distance


def test_multiply_matches_dense_product_with_full_corners():
    rng = np.random.default_rng(20)
    a = random_corner(rng, ProblemSpec(random_symbol(rng, 2, -1, 1), 12), symmetric=False)
    b = random_corner(rng, ProblemSpec(random_symbol(rng, 2, -2, 0), 12), symmetric=False)
    prod = multiply(a, b)
    assert (prod.p, prod.q) == (-3, 1)
    ref = assemble_dense(a) @ assemble_dense(b)
    np.testing.assert_allclose(assemble_dense(prod), ref, atol=1e-12 * np.abs(ref).max())


def test_multiply_needs_room_for_both_boundaries():
    spec = kitaev_spec(KitaevParams(1, 1, 1, 3))
    with pytest.raises(NTooSmall):
        multiply(spec, spec)


def test_power_is_the_shifted_matrix_power():
    spec = kitaev_spec(KitaevParams(0.5, 1, 0.3, 9)).with_corner({(1, 9): np.eye(2)})
    M = assemble_dense(spec) - 0.2 * np.eye(18)
    np.testing.assert_allclose(assemble_dense(power(spec, 0.2, 3)),
                               np.linalg.matrix_power(M, 3), atol=1e-12)


def test_singular_epsilons_of_a_flat_band():
    # a_0 = diag(2, x), coupling only in the first component: the second is a flat band at 0
    sym = LaurentSymbol({-1: np.diag([1.0, 0.0]), 0: np.diag([2.0, 0.0]), 1: np.diag([1.0, 0.0])})
    assert np.allclose(singular_epsilons(sym), [0.0])
    assert singular_epsilons(kitaev_symbol(1, 1, 1)) == []


def test_exceptional_epsilons_include_band_edges():
    exc = np.array(exceptional_epsilons(kitaev_symbol(1, 1, 1)))
    for target in (3, -3, 1, -1):
        assert np.min(np.abs(exc - target)) < 1e-8


def test_hermitian_spectrum_is_complete_and_exact():
    spec = kitaev_spec(KitaevParams(0.6, 1.0, 0.8, 7))
    res = eigenvalues(spec)
    assert res.complete and res.diagnostics["hermitian"]
    ref = np.linalg.eigvalsh(assemble_dense(spec))
    assert multiset_distance(res.values, ref) < 1e-9
    for v in res.eigenvectors:
        x = v.to_dense()
        M = assemble_dense(spec)
        assert np.linalg.norm(M @ x - v.epsilon * x) < 1e-8 * np.linalg.norm(x) * np.linalg.norm(M, 2)


def test_sweet_spot_zero_mode_is_doubly_degenerate():
    res = eigenvalues(kitaev_spec(KitaevParams(0.0, 1.0, 1.0, 10)))
    zero = [r for r in res.eigenvalues if abs(r.epsilon) < 1e-9]
    assert len(zero) == 1 and zero[0].geometric == 2
    assert res.complete


def test_non_hermitian_spectrum_in_a_disk():
    sym = LaurentSymbol({-1: 0.5, 0: 0.0, 1: 2.0})  # non-normal tridiagonal
    spec = ProblemSpec(sym, 6, corner={(1, 6): 0.3, (6, 1): -0.2j})
    res = eigenvalues(spec, SearchConfig(oracle_check=True))
    ref = np.linalg.eigvals(assemble_dense(spec))
    assert multiset_distance(res.values, ref) < 1e-7
    assert res.diagnostics["oracle"]["matched"]


def test_interval_restricts_the_real_scan():
    spec = kitaev_spec(KitaevParams(1.0, 1.0, 1.0, 8))
    res = eigenvalues(spec, SearchConfig(interval=(0.0, 10.0)))
    ref = np.linalg.eigvalsh(assemble_dense(spec))
    assert multiset_distance(res.values, ref[ref > 0]) < 1e-9
    assert res.complete is None  # no certified count on part of the line


def test_jordan_chain_of_a_shift():
    spec = ProblemSpec(LaurentSymbol({1: 1.0}), 6, bandwidth=(0, 1))
    ge = generalized_eigenspace(spec, 0.0)
    assert ge.kappa_max == 6
    assert list(ge.dims) == [1, 2, 3, 4, 5, 6, 6]
    assert sorted(v.rank for v in ge.vectors) == [1, 2, 3, 4, 5, 6]
    M = assemble_dense(spec)
    for v in ge.vectors:
        x = v.to_dense()
        assert np.allclose(np.linalg.matrix_power(M, v.rank) @ x, 0, atol=1e-10)
        assert not np.allclose(np.linalg.matrix_power(M, v.rank - 1) @ x, 0, atol=1e-6)


def test_hermitian_eigenvalues_are_semisimple():
    spec = kitaev_spec(KitaevParams(1.0, 1.0, 1.0, 8))
    eps = np.linalg.eigvalsh(assemble_dense(spec))[2]
    ge = generalized_eigenspace(spec, eps)
    assert ge.kappa_max == 1 and ge.dims[0] == ge.dims[-1] == 1


def test_jordan_search_fills_algebraic_multiplicities():
    spec = ProblemSpec(LaurentSymbol({0: 0.5, 1: 1.0}), 5, corner={(5, 1): 1e-3},
                       bandwidth=(0, 1))
    res = eigenvalues(spec, SearchConfig(jordan=True, max_roots=5))
    assert sum(r.algebraic for r in res.eigenvalues) == 5
