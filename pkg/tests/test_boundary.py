import numpy as np
import pytest

from helpers import random_corner, random_symbol

from cmbbt.boundary import AnsatzVector, assemble, kernel, reconstruct
from cmbbt.bulk import bulk_basis
from cmbbt.models import KitaevParams, kitaev_spec
from cmbbt.oracle import assemble_dense
from cmbbt.problem import ProblemSpec


def sweet_spot(N=10):
    return kitaev_spec(KitaevParams(0.0, 1.0, 1.0, N))


def test_boundary_matrix_is_square_with_one_row_per_boundary_component():
    spec = kitaev_spec(KitaevParams(1, 1, 1, 12))
    B = assemble(spec, bulk_basis(spec, 0.3))
    assert B.is_square and B.shape == (4, 4)
    assert B.row_index == [(1, 0), (1, 1), (12, 0), (12, 1)]


def test_normalized_entries_are_bounded():
    rng = np.random.default_rng(10)
    spec = ProblemSpec(random_symbol(rng, 2, -2, 2), 25)
    spec = random_corner(rng, spec, entries=4)
    B = assemble(spec, bulk_basis(spec, 0.5 + 0.5j))
    assert np.max(np.abs(B.entries)) <= 1.0 + 1e-12


def test_boundary_matrix_equals_dense_residual_on_boundary_rows():
    rng = np.random.default_rng(11)
    spec = random_corner(rng, ProblemSpec(random_symbol(rng, 2, -1, 2), 18), symmetric=False)
    eps = 0.2 - 0.7j
    basis = bulk_basis(spec, eps)
    B = assemble(spec, basis)
    M = assemble_dense(spec) - eps * np.eye(spec.size)
    R = M @ basis.dense_columns()
    rows = [(b - 1) * spec.d + m for b, m in B.row_index]
    np.testing.assert_allclose(B.raw, R[rows], atol=1e-10 * np.abs(R).max())


def test_sweet_spot_has_two_dimensional_kernel_and_clean_vectors():
    spec = sweet_spot()
    B = assemble(spec, bulk_basis(spec, 0.0))
    alphas = kernel(B, atol=1e-8, canonical=True)
    assert len(alphas) == 2
    s = B.singular_values()
    assert s[-1] < 1e-14 and s[-2] < 1e-14 and s[-3] > 1e-3


def test_away_from_eigenvalues_the_kernel_is_trivial():
    spec = kitaev_spec(KitaevParams(1, 1, 1, 12))
    B = assemble(spec, bulk_basis(spec, 0.123))
    assert kernel(B, atol=1e-8) == []
    assert abs(B.det()) > 1e-6


def test_kernel_vectors_are_dense_eigenvectors():
    spec = kitaev_spec(KitaevParams(1, 1, 1, 12))
    eps = np.linalg.eigvalsh(assemble_dense(spec))[3]
    basis = bulk_basis(spec, eps)
    (alpha,) = kernel(assemble(spec, basis), atol=1e-8)
    v = AnsatzVector(eps, 1, alpha, basis).to_dense()
    M = assemble_dense(spec)
    assert np.linalg.norm(M @ v - eps * v) <= 1e-10 * np.linalg.norm(v) * np.linalg.norm(M, 2)
    np.testing.assert_allclose(reconstruct(basis, alpha), v)
    vec = AnsatzVector(eps, 1, alpha, basis)
    np.testing.assert_allclose(vec.site(5), v[8:10])


def test_large_corner_is_assembled_in_chunks():
    N = 20000
    spec = kitaev_spec(KitaevParams(1, 1, 1, N))
    corner = {(1, j): 1e-3 * np.eye(2) for j in range(1, N + 1)}
    spec = spec.with_corner(corner)
    B = assemble(spec, bulk_basis(spec, 0.4))
    assert np.all(np.isfinite(B.raw))


def test_rectangular_determinant_is_an_error():
    spec = sweet_spot()
    B = assemble(spec, bulk_basis(spec, 0.0))
    B.raw = B.raw[:3]
    B.scales = B.scales
    with pytest.raises(ValueError):
        B.det()
