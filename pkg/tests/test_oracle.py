import numpy as np
import pytest

from cmbbt.exceptions import OracleCapExceeded
from cmbbt.laurent import LaurentSymbol
from cmbbt.oracle import (assemble_dense, bulk_rows_dense, dense_det, dense_eigen,
                          dense_nullspace, dense_rank)
from cmbbt.problem import ProblemSpec


def tridiag(N=5):
    return ProblemSpec(LaurentSymbol({-1: 1.0, 0: 2.0, 1: 3.0}), N)


def test_toeplitz_fill_convention():
    M = assemble_dense(tridiag())
    # [A_N]_{ij} = a_{j-i}: a_1 sits above the diagonal
    assert M[0, 1] == 3 and M[1, 0] == 1 and M[2, 2] == 2


def test_bulk_rows_drop_boundary_rows():
    spec = tridiag(6)
    R = bulk_rows_dense(spec, 1.0)
    assert R.shape == (4, 6)
    np.testing.assert_allclose(R[0, :3], [1, 1, 3])


def test_nullspace_rank_and_det():
    M = np.diag([1.0, 2.0, 0.0])
    assert dense_nullspace(M).shape == (3, 1)
    assert dense_rank(M) == 2
    assert dense_det(np.diag([2.0, 3.0])) == pytest.approx(6.0)


def test_eigen_detects_hermitian_input():
    spec = ProblemSpec(LaurentSymbol({-1: 1.0, 0: 0.0, 1: 1.0}), 8)
    vals, vecs = dense_eigen(assemble_dense(spec))
    np.testing.assert_allclose(vals.real, 2 * np.cos(np.pi * np.arange(8, 0, -1) / 9), atol=1e-13)
    assert vecs.shape == (8, 8)


def test_cap_is_enforced():
    spec = ProblemSpec(LaurentSymbol({0: 1.0, 1: 1.0}), 5000)
    with pytest.raises(OracleCapExceeded):
        assemble_dense(spec)
    assert assemble_dense(spec, cap=5000).shape == (5000, 5000)
