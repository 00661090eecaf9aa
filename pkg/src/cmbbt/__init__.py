"""Exact kernels and eigensystems of corner-modified banded block-Toeplitz matrices.

The solver splits ``(C - epsilon) v = 0`` into a translation-invariant bulk
equation, solved in closed form from the roots of ``det(A(w) - epsilon)``, and
a small boundary system whose size depends only on the bandwidth and block
size. Work at a fixed ``epsilon`` is independent of the matrix size ``N``
for corners confined to the edges.
"""

from .boundary import AnsatzVector, BoundaryMatrix, assemble, kernel, reconstruct
from .bulk import BulkBasis, bulk_basis, extended_solutions, finite_support_solutions
from .eigensystem import (GeneralizedEigenspace, SearchConfig, SpectrumResult, eigenvalues,
                          exceptional_epsilons, generalized_eigenspace, multiply, power,
                          singular_epsilons)
from .estimator import CornerBBTSolver
from .exceptions import (CMBBTError, NTooSmall, OracleCapExceeded, ProblemFormatError,
                         SearchIncomplete, SingularSymbol)
from .laurent import LaurentSymbol, determinant, eval_map, is_regular
from .models import KitaevParams, kitaev_closed_form_check, kitaev_spec
from .problem import ProblemSpec
from .rootfind import RootCluster, roots
from .semiinfinite import SemiInfiniteSpec, decaying_bulk_basis, semi_kernel

__version__ = "0.1.0"

__all__ = [
    "AnsatzVector", "BoundaryMatrix", "BulkBasis", "CMBBTError", "CornerBBTSolver",
    "GeneralizedEigenspace", "KitaevParams", "LaurentSymbol", "NTooSmall", "OracleCapExceeded",
    "ProblemFormatError", "ProblemSpec", "RootCluster", "SearchConfig", "SearchIncomplete",
    "SemiInfiniteSpec", "SingularSymbol", "SpectrumResult", "assemble", "bulk_basis",
    "decaying_bulk_basis", "determinant", "eigenvalues", "eval_map", "exceptional_epsilons",
    "extended_solutions", "finite_support_solutions", "generalized_eigenspace", "is_regular",
    "kernel", "kitaev_closed_form_check", "kitaev_spec", "multiply", "power", "reconstruct",
    "roots", "semi_kernel", "singular_epsilons",
]
