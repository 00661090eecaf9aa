"""Problem builders for lattice models.

Currently the Kitaev (Majorana) chain in Bogoliubov-de Gennes form with the
Nambu basis ``(c_j, c_j^dagger)``:

    h0 = -[[mu, 0], [0, -mu]],   h1 = -[[t, -delta], [delta, -t]]

with ``h1`` on the first superdiagonal (block ``(j, j+1)``) and ``h1^dagger``
on the first subdiagonal.
"""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .laurent import LaurentSymbol
from .problem import ProblemSpec

__all__ = ["KitaevParams", "kitaev_symbol", "kitaev_spec", "kitaev_zeta", "kitaev_special_values",
           "kitaev_condition_residual", "KitaevCheck", "kitaev_closed_form_check"]


@dataclass(frozen=True)
class KitaevParams:
    """Chemical potential ``mu``, hopping ``t``, pairing ``delta`` and length ``N``."""

    mu: float
    t: float
    delta: float
    N: int

    def __post_init__(self):
        for name in ("mu", "t", "delta"):
            val = getattr(self, name)
            if not np.isfinite(val) or np.iscomplexobj(val):
                raise ValueError(f"{name} must be a finite real number, got {val!r}")
        if int(self.N) != self.N or self.N < 2:
            raise ValueError(f"N must be an integer >= 2, got {self.N!r}")


def kitaev_symbol(mu: float, t: float, delta: float) -> LaurentSymbol:
    h0 = -np.array([[mu, 0.0], [0.0, -mu]])
    h1 = -np.array([[t, -delta], [delta, -t]])
    return LaurentSymbol({-1: h1.conj().T, 0: h0, 1: h1}, d=2)


def kitaev_spec(params: KitaevParams) -> ProblemSpec:
    """Open Kitaev chain: bandwidth ``(-1, 1)``, no corner (plain truncation).

    The declared bandwidth stays ``(-1, 1)`` even when some coefficient
    vanishes (``t = delta = 0``), so the boundary rows are always ``1`` and
    ``N``.
    """
    if params.N <= 2:
        raise ValueError(f"the structured solver needs N > 2, got N={params.N}")
    return ProblemSpec(kitaev_symbol(params.mu, params.t, params.delta), params.N,
                       bandwidth=(-1, 1))


def kitaev_zeta(mu: float, t: float, epsilon) -> tuple:
    """Roots ``(zeta, 1/zeta)`` of the ``t = delta`` characteristic equation.

    ``zeta`` is the root with ``|zeta| <= 1``. Requires ``mu t != 0``.
    """
    if mu * t == 0:
        raise ValueError("closed form needs mu * t != 0")
    e = complex(epsilon)
    b = e * e - mu * mu - 4 * t * t
    disc = np.sqrt(complex(b * b - 16 * mu * mu * t * t))
    z1, z2 = (b + disc) / (4 * mu * t), (b - disc) / (4 * mu * t)
    return (z1, z2) if abs(z1) <= abs(z2) else (z2, z1)


def kitaev_special_values(mu: float, t: float) -> List[float]:
    """``{mu + 2t, -(mu + 2t), mu - 2t, -(mu - 2t)}``, where roots hit +-1 or vanish."""
    return [mu + 2 * t, -(mu + 2 * t), mu - 2 * t, -(mu - 2 * t)]


def kitaev_condition_residual(mu: float, t: float, N: int, epsilon, zeta) -> float:
    """Relative residual of ``2t z + e + mu = +- z^(N+1) (2t/z + e + mu)``.

    The smaller of the two signs is returned, normalized by the size of the
    terms. The condition is invariant under ``z -> 1/z``; pass ``|z| <= 1``
    for a well-scaled evaluation.
    """
    z, e = complex(zeta), complex(epsilon)
    lhs = 2 * t * z + e + mu
    rhs = z ** (N + 1) * (2 * t / z + e + mu)
    scale = max(abs(lhs), abs(rhs), abs(t) * 1e-300, 1e-300)
    return min(abs(lhs - rhs), abs(lhs + rhs)) / max(scale, abs(t), abs(mu), abs(e))


@dataclass
class KitaevCheck:
    """Outcome of comparing the closed form with a solver verdict."""

    epsilon: complex
    special: bool
    closed_form_eigenvalue: bool
    solver_eigenvalue: Optional[bool]
    residual: float
    zeta: Optional[complex] = None
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> Optional[bool]:
        if self.solver_eigenvalue is None:
            return None
        return self.closed_form_eigenvalue == self.solver_eigenvalue


def kitaev_closed_form_check(params: KitaevParams, epsilon, solver_eigenvalue: Optional[bool] = None,
                             tol: float = 1e-6) -> KitaevCheck:
    """Closed-form eigenvalue test for the ``t = delta`` chain.

    For ``epsilon`` in the special set the criterion is ``2Nt + (N+1) mu = 0``
    (only ``mu + 2t`` admits the power-law mode; its mirror ``-(mu + 2t)``
    follows by particle-hole symmetry). Elsewhere the quantization
    condition is evaluated at the small root ``zeta``.

    Parameters
    ----------
    solver_eigenvalue : bool, optional
        Verdict of the generic solver; when given, ``passed`` reports agreement.
    """
    mu, t, N = params.mu, params.t, params.N
    if not np.isclose(t, params.delta, rtol=1e-14, atol=0):
        raise ValueError("closed form applies only for t == delta")
    e = complex(epsilon)
    specials = kitaev_special_values(mu, t)
    scale = max(abs(mu), abs(t), 1.0)
    hit = [s for s in specials if abs(e - s) <= 1e-12 * scale]
    if hit:
        pl = 2 * N * t + (N + 1) * mu
        if abs(abs(e.real) - abs(mu + 2 * t)) <= 1e-12 * scale and abs(mu + 2 * t) > 0:
            ok = abs(pl) <= tol * scale
            res = abs(pl)
        else:
            # +-(mu - 2t): zeta = -1 double root, mirror condition
            pl = 2 * N * t - (N + 1) * mu
            ok = abs(pl) <= tol * scale
            res = abs(pl)
        return KitaevCheck(e, True, ok, solver_eigenvalue, res,
                           details={"power_law_condition": pl})
    zeta, _ = kitaev_zeta(mu, t, e)
    res = kitaev_condition_residual(mu, t, N, e, zeta)
    return KitaevCheck(e, False, res <= tol, solver_eigenvalue, res, zeta)
