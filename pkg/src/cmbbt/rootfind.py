"""Polynomial roots with multiplicity clustering.

Roots are found simultaneously with the Aberth-Ehrlich iteration, polished
one by one with Newton steps on the original polynomial, and then merged into
clusters by single linkage. A cluster of size ``s`` is read as a root of
multiplicity ``s``; its representative is refined by Newton's method on the
``(s-1)``-th derivative, where the root is simple.
"""

from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np
from numpy.polynomial import Polynomial

#: Default absolute/relative clustering radius.
CLUSTER_RADIUS = 1e-7


@dataclass(frozen=True)
class RootCluster:
    """A group of numerically coincident roots.

    Attributes
    ----------
    z : complex
        Representative root.
    multiplicity : int
        Number of raw roots in the cluster.
    members : tuple of complex
        The raw roots.
    residual : float
        ``max |P(z_i)|`` over the members.
    """

    z: complex
    multiplicity: int
    members: Tuple[complex, ...] = field(default=())
    residual: float = 0.0

    @property
    def s(self) -> int:
        return self.multiplicity

    def scaled(self, factor: int) -> "RootCluster":
        """Same root with multiplicity multiplied by ``factor`` (roots of ``P**factor``)."""
        return RootCluster(self.z, self.multiplicity * factor, self.members * factor, self.residual)


def _initial_guesses(coef: np.ndarray) -> np.ndarray:
    """Starting points on circles read off the Newton polygon of ``|c_k|``.

    The upper convex hull of ``(k, log|c_k|)`` gives one radius per edge, with
    as many points as the edge is long. Points are spread with an irrational
    angular offset so no start sits on a symmetry axis. For a polynomial whose
    coefficients are all comparable this reduces to a single circle whose
    radius lies between the Cauchy lower and upper root bounds.
    """
    n = coef.size - 1
    mags = np.abs(coef)
    ks = np.nonzero(mags)[0]
    logs = np.log(mags[ks])
    hull = [0]
    for i in range(1, ks.size):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            cross = (ks[b] - ks[a]) * (logs[i] - logs[a]) - (logs[b] - logs[a]) * (ks[i] - ks[a])
            if cross >= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    guesses = []
    offset = 0.7
    for a, b in zip(hull[:-1], hull[1:]):
        count = int(ks[b] - ks[a])
        radius = np.exp((logs[a] - logs[b]) / count)
        angles = 2 * np.pi * np.arange(count) / count + offset
        guesses.append(radius * np.exp(1j * angles))
        offset += 0.41
    z = np.concatenate(guesses) if guesses else np.zeros(0, dtype=complex)
    assert z.size == n
    return z


def aberth(coef: Sequence[complex], maxiter: int = 200, tol: float = 1e-13) -> np.ndarray:
    """All roots of ``sum_k coef[k] w**k`` (nonzero constant term expected).

    Parameters
    ----------
    coef : sequence of complex
        Ascending coefficients, leading coefficient nonzero.
    maxiter : int
        Iteration cap.
    tol : float
        Convergence threshold on the relative Aberth correction.
    """
    c = np.asarray(coef, dtype=complex)
    n = c.size - 1
    if n < 1:
        return np.zeros(0, dtype=complex)
    if n == 1:
        return np.array([-c[0] / c[1]])
    desc = c[::-1] / c[-1]
    ddesc = np.polyder(desc)
    z = _initial_guesses(c)
    active = np.ones(n, dtype=bool)
    for _ in range(maxiter):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        zi = z[idx]
        pv = np.polyval(desc, zi)
        dv = np.polyval(ddesc, zi)
        diff = zi[:, None] - z[None, :]
        diff[np.arange(idx.size), idx] = np.inf
        sums = np.sum(1.0 / diff, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = pv / dv
            step = ratio / (1.0 - ratio * sums)
        step = np.where(np.isfinite(step), step, 0.0)
        step = np.where(pv == 0, 0.0, step)
        z[idx] = zi - step
        done = np.abs(step) <= tol * np.maximum(np.abs(z[idx]), np.finfo(float).tiny)
        active[idx[done]] = False
    return z


def _polish(desc: np.ndarray, z: complex, steps: int = 3) -> complex:
    """Newton steps on the polynomial, kept only while the residual shrinks."""
    ddesc = np.polyder(desc)
    best, fbest = z, abs(np.polyval(desc, z))
    for _ in range(steps):
        dv = np.polyval(ddesc, best)
        if dv == 0 or fbest == 0:
            break
        cand = best - np.polyval(desc, best) / dv
        fc = abs(np.polyval(desc, cand))
        if not fc < fbest:
            break
        best, fbest = cand, fc
    return complex(best)


def cluster(points: Sequence[complex], radius: float = CLUSTER_RADIUS) -> List[List[int]]:
    """Single-linkage groups of points closer than ``max(radius, radius |z|)``."""
    pts = np.asarray(points, dtype=complex)
    n = pts.size
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            lim = max(radius, radius * abs(pts[i]), radius * abs(pts[j]))
            if abs(pts[i] - pts[j]) <= lim:
                parent[find(i)] = find(j)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def roots(P: Polynomial, cluster_radius: float = CLUSTER_RADIUS,
          maxiter: int = 200, tol: float = 1e-13) -> Tuple[List[RootCluster], int]:
    """Clustered roots of a scalar polynomial.

    Parameters
    ----------
    P : numpy.polynomial.Polynomial
        Ascending coefficients; trailing (high-order) exact zeros are ignored.
    cluster_radius : float
        Absolute and relative merge radius.

    Returns
    -------
    clusters : list of RootCluster
        Nonzero roots, sorted by ``(|z|, arg z)``.
    zero_multiplicity : int
        Multiplicity of the root at ``w = 0``.
    """
    c = np.asarray(P.coef, dtype=complex)
    nz = np.nonzero(c)[0]
    if nz.size == 0:
        raise ValueError("the zero polynomial has no well-defined roots")
    c = c[: nz[-1] + 1]
    zero_mult = int(nz[0])
    c = c[zero_mult:]
    raw = aberth(c, maxiter=maxiter, tol=tol)
    desc = c[::-1]
    raw = np.array([_polish(desc, z) for z in raw], dtype=complex)
    clusters = []
    for group in cluster(raw, cluster_radius):
        members = raw[group]
        s = len(group)
        z = complex(np.mean(members))
        if s > 1:
            z = _refine_multiple(desc, z, s, cluster_radius)
        res = float(np.max(np.abs(np.polyval(desc, members))))
        clusters.append(RootCluster(z, s, tuple(complex(m) for m in members), res))
    clusters.sort(key=lambda cl: (abs(cl.z), np.angle(cl.z)))
    return clusters, zero_mult


def _refine_multiple(desc: np.ndarray, z: complex, s: int, radius: float) -> complex:
    """Newton on the (s-1)-th derivative, where a multiplicity-s root is simple."""
    f = np.polyder(desc, s - 1)
    df = np.polyder(f)
    start = z
    lim = 10 * max(radius, radius * abs(z))
    for _ in range(8):
        dv = np.polyval(df, z)
        if dv == 0:
            break
        step = np.polyval(f, z) / dv
        z = z - step
        if abs(step) <= 1e-15 * max(1.0, abs(z)):
            break
    if not np.isfinite(z) or abs(z - start) > lim:
        return start
    return complex(z)
