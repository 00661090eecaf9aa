"""Estimator-style facade over the structured solver.

``CornerBBTSolver`` follows the scikit-learn conventions: constructor
arguments are plain hyperparameters (``get_params`` / ``set_params`` work),
``fit`` takes the problem and stores results in attributes with a trailing
underscore. "Fitting" here means solving the bulk equation and assembling
the boundary matrix at ``epsilon``; there is no training data.
"""

from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .boundary import AnsatzVector, assemble, kernel
from .bulk import bulk_basis
from .eigensystem import SearchConfig, SpectrumResult, eigenvalues, generalized_eigenspace
from .rootfind import CLUSTER_RADIUS
from .validation import check_epsilon, check_problem

__all__ = ["CornerBBTSolver"]


class CornerBBTSolver(BaseEstimator):
    """Kernel and eigen-solver for one corner-modified BBT problem.

    Parameters
    ----------
    epsilon : complex
        Spectral shift used by :meth:`fit`.
    kernel_tol : float
        Threshold on normalized singular values of the boundary matrix.
    cluster_radius : float
        Root merge radius.
    hermitian : bool or None
        Passed to the eigenvalue search (``None`` detects it).
    oracle_check : bool
        Cross-check spectra against a dense eigensolver when small.
    threads : int

    Attributes
    ----------
    spec_ : ProblemSpec
    basis_ : BulkBasis
    boundary_matrix_ : BoundaryMatrix
    kernel_ : list of AnsatzVector
    kernel_dim_ : int

    Examples
    --------
    >>> from cmbbt.models import KitaevParams, kitaev_spec
    >>> solver = CornerBBTSolver(epsilon=0.0).fit(kitaev_spec(KitaevParams(0, 1, 1, 10)))
    >>> solver.kernel_dim_
    2
    """

    def __init__(self, epsilon=0.0, kernel_tol: float = 1e-8,
                 cluster_radius: float = CLUSTER_RADIUS, hermitian: Optional[bool] = None,
                 oracle_check: bool = False, threads: int = 1):
        self.epsilon = epsilon
        self.kernel_tol = kernel_tol
        self.cluster_radius = cluster_radius
        self.hermitian = hermitian
        self.oracle_check = oracle_check
        self.threads = threads

    def fit(self, X, y=None):
        """Solve ``(C - epsilon) v = 0`` for the problem ``X``.

        ``X`` is a ProblemSpec, a decoded problem document or JSON text;
        ``y`` is ignored.
        """
        spec = check_problem(X)
        eps = check_epsilon(self.epsilon)
        self.spec_ = spec
        self.basis_ = bulk_basis(spec, eps, cluster_radius=self.cluster_radius)
        self.boundary_matrix_ = assemble(spec, self.basis_)
        alphas = kernel(self.boundary_matrix_, atol=self.kernel_tol, canonical=True)
        self.kernel_ = [AnsatzVector(eps, 1, a, self.basis_) for a in alphas]
        self.kernel_dim_ = len(alphas)
        return self

    def kernel_vectors(self) -> np.ndarray:
        """Dense kernel vectors as columns (O(N) memory)."""
        check_is_fitted(self, "kernel_")
        if not self.kernel_:
            return np.zeros((self.spec_.size, 0), dtype=complex)
        return np.column_stack([v.to_dense() for v in self.kernel_])

    def spectrum(self, **search) -> SpectrumResult:
        """Eigenvalues of the fitted problem; keyword arguments go to SearchConfig."""
        check_is_fitted(self, "spec_")
        cfg = SearchConfig(hermitian=self.hermitian, oracle_check=self.oracle_check,
                           threads=self.threads, accept_tol=self.kernel_tol,
                           cluster_radius=self.cluster_radius)
        for key, value in search.items():
            if not hasattr(cfg, key):
                raise TypeError(f"unknown search option {key!r}")
            setattr(cfg, key, value)
        return eigenvalues(self.spec_, cfg)

    def generalized_eigenspace(self, epsilon=None, max_kappa: Optional[int] = None):
        """Jordan data at ``epsilon`` (default: the fitted shift)."""
        check_is_fitted(self, "spec_")
        eps = check_epsilon(self.epsilon if epsilon is None else epsilon)
        return generalized_eigenspace(self.spec_, eps, max_kappa=max_kappa,
                                      accept_tol=self.kernel_tol,
                                      cluster_radius=self.cluster_radius)
