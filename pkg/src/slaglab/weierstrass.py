"""The equianharmonic Weierstrass function and the threefold cover of CP^1.

The lattice is Z + Z rho with rho = exp(i pi/3), so g2 = 0.  The map
w = c / wp'(z), c = sqrt(-g3), has degree three, is totally ramified over
w = 0 (the lattice pole) and over w = +-1 (the two zeros of wp), and pulls
the cubic differential (dw)^3 / (w^2 (w^2 - 1)^2) back to the constant
-(27/2) c (dz)^3.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

RHO = np.exp(1j * np.pi / 3)
N_TERMS = 60


class NearPoleError(ValueError):
    """Evaluation point closer to a lattice pole than the exclusion radius."""


def eisenstein_e6(tau: complex, terms: int = 60) -> complex:
    q = np.exp(2j * np.pi * tau)
    n = np.arange(1, terms + 1)
    sigma5 = np.array([sum(d**5 for d in range(1, m + 1) if m % d == 0) for m in n], dtype=float)
    return 1 - 504 * np.sum(sigma5 * q**n)


@lru_cache(maxsize=None)
def invariants():
    """(g2, g3) of the lattice Z + Z rho."""
    g3 = 280 * np.pi**6 / 945 * eisenstein_e6(RHO)
    return 0.0, complex(g3)


@lru_cache(maxsize=None)
def laurent_coefficients(n_terms: int = N_TERMS) -> np.ndarray:
    """c_n with wp(z) = z^-2 + sum_{n>=2} c_n z^(2n-2)."""
    _, g3 = invariants()
    c = np.zeros(n_terms + 1, dtype=complex)
    c[3] = g3 / 28
    for n in range(4, n_terms + 1):
        c[n] = 3 / ((2 * n + 1) * (n - 3)) * sum(c[m] * c[n - m] for m in range(2, n - 1))
    return c


def reduce_to_cell(z):
    """Lattice translate of z nearest to the origin; returns (z_reduced, shift)."""
    z = np.asarray(z, dtype=complex)
    b = z.imag / RHO.imag
    a = z.real - b * RHO.real
    base = np.round(a) + np.round(b) * RHO
    best = z - base
    for da in (-1, 0, 1):
        for db in (-1, 0, 1):
            cand = z - base - da - db * RHO
            best = np.where(np.abs(cand) < np.abs(best), cand, best)
    return best, z - best


def wp(z, derivative: int = 0, exclusion: float = 0.0):
    """wp (derivative 0), wp' (1) or wp'' (2) by the reduced Laurent series."""
    zr, _ = reduce_to_cell(z)
    if exclusion and np.any(np.abs(zr) < exclusion):
        raise NearPoleError("point inside the pole exclusion disk")
    c = laurent_coefficients()
    z2 = zr * zr
    n = np.arange(2, len(c))
    with np.errstate(divide="ignore", invalid="ignore"):
        if derivative == 0:
            return 1 / z2 + _poly(c[2:], n, z2, 0)
        if derivative == 1:
            return -2 / (z2 * zr) + zr * _poly(c[2:], n, z2, 1)
        if derivative == 2:
            return 6 / (z2 * z2) + _poly(c[2:], n, z2, 2)
    raise ValueError("derivative must be 0, 1 or 2")


def _poly(c, n, z2, d):
    # sum c_n z^(2n-2) and its derivatives expressed in powers of z^2
    if d == 0:
        coef, power = c, n - 1
    elif d == 1:
        coef, power = c * (2 * n - 2), n - 2
    else:
        coef, power = c * (2 * n - 2) * (2 * n - 3), n - 2
    out = np.zeros_like(z2)
    # Horner in z^2 from the top power down
    for k in range(len(coef) - 1, -1, -1):
        out = out * z2 + coef[k]
    shift = power[0]
    return out * z2**shift if shift else out


@dataclass(frozen=True)
class BranchedCover:
    """w = c / wp'(z) with branch values (0, 1, -1)."""

    c: complex
    branch_points: tuple  # z over w = 0, 1, -1
    pullback_constant: complex

    def __call__(self, z):
        zr, _ = reduce_to_cell(z)
        with np.errstate(divide="ignore", invalid="ignore"):
            w = self.c / wp(zr, 1)
        return np.where(np.abs(zr) < 1e-300, 0.0, w)

    def derivative(self, z):
        return -self.c * wp(z, 2) / wp(z, 1) ** 2


@lru_cache(maxsize=None)
def branched_cover() -> BranchedCover:
    _, g3 = invariants()
    c = np.sqrt(-g3)
    # zeros of wp: wp'^2 = 4 wp^3 - g3 = -g3 there, so wp' = +-c
    z0 = _newton(lambda z: wp(z), lambda z: wp(z, 1), (1 + RHO) / 3)
    pts = {0: 0j}
    for z in (z0, -z0):
        pts[1 if abs(wp(z, 1) - c) < abs(wp(z, 1) + c) else -1] = complex(reduce_to_cell(z)[0])
    return BranchedCover(c, (pts[0], pts[1], pts[-1]), -13.5 * c)


def _newton(f, df, z, iters=60, tol=1e-15):
    for _ in range(iters):
        step = f(z) / df(z)
        z = z - step
        if abs(step) < tol:
            break
    return complex(z)


def cubic_form_coefficient(w, dw):
    """Coefficient of (dz)^3 in the pullback of (dw)^3 / (w^2 (w^2 - 1)^2)."""
    return dw**3 / (w**2 * (w**2 - 1) ** 2)


def pullback_coefficient(z):
    """(dz)^3 coefficient of the pulled back differential from exact
    derivatives of wp, in the chart v = 1/w where |w| > 1."""
    cover = branched_cover()
    z = np.asarray(z, complex)
    v = wp(z, 1) / cover.c
    dv = wp(z, 2) / cover.c
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        w, dw = 1 / v, -dv / v**2
        return np.where(np.abs(v) < 1, -dv**3 / (1 - v**2) ** 2, cubic_form_coefficient(w, dw))


def branch_point_deviation(radius: float = 0.05, m: int = 64) -> list:
    """Max relative deviation of the pullback coefficient from its constant
    on a circle of the given radius around each branch point."""
    cover = branched_cover()
    t = np.exp(2j * np.pi * np.arange(m) / m)
    return [float(np.max(np.abs(pullback_coefficient(b + radius * t) - cover.pullback_constant))
                  / abs(cover.pullback_constant)) for b in cover.branch_points]


def local_model_coefficient(z):
    """The local model w = z^3 at a branch point: (dw)^3 / w^2 = 27 (dz)^3."""
    z = np.asarray(z, dtype=complex)
    return (3 * z**2) ** 3 / (z**3) ** 2


def torus_grid(n: int):
    """n x n nodes z = s + t rho, s, t in [0, 1)."""
    s = np.arange(n) / n
    S, T = np.meshgrid(s, s, indexing="ij")
    return S + T * RHO


@dataclass(frozen=True)
class PullbackField:
    z: np.ndarray
    coefficient: np.ndarray
    mask: np.ndarray  # nodes outside the exclusion disks
    constant: complex

    @property
    def spread(self) -> float:
        """Maximum relative deviation from the constant on unmasked nodes."""
        d = np.abs(self.coefficient[self.mask] - self.constant) / abs(self.constant)
        return float(d.max())


def branched_cover_pullback(n: int = 64, exclusion: float = 0.05, step: float = 1e-5):
    """Evaluate pi_3 on a torus grid and the (dz)^3 coefficient of the pulled
    back cubic differential, differentiating w numerically.

    Nodes within ``exclusion`` of a branch point are masked: both numerator
    and denominator vanish to sixth order there.
    """
    cover = branched_cover()
    z = torus_grid(n)
    dist = np.full(z.shape, np.inf)
    for b in cover.branch_points:
        dist = np.minimum(dist, np.abs(reduce_to_cell(z - b)[0]))
    mask = dist > exclusion
    zs = np.where(mask, z, z + 0.5)  # masked nodes get a harmless stand-in
    # chart v = 1/w = wp'/c where |w| > 1, so the half periods (w = inf) stay regular
    v = wp(zs, 1) / cover.c
    dv = (wp(zs + step, 1) - wp(zs - step, 1)) / (2 * step * cover.c)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        w = 1 / v
        dw = -dv / v**2
        coeff = np.where(np.abs(v) < 1, -dv**3 / (1 - v**2) ** 2, cubic_form_coefficient(w, dw))
    coeff = np.where(mask, coeff, np.nan)
    return cover, PullbackField(z, coeff, mask, cover.pullback_constant)


def preimages(w: complex, n_seeds: int = 12, exclusion: float = 1e-3, tol: float = 1e-10):
    """All z in the period cell with pi_3(z) = w, found by Newton from a
    grid of seeds and deduplicated modulo the lattice."""
    cover = branched_cover()
    if abs(w) < exclusion:
        return [0j]
    target = cover.c / w
    z = torus_grid(n_seeds).ravel() + 0.5 / n_seeds * (1 + RHO)
    alive = np.ones(z.shape, bool)
    done = np.zeros(z.shape, bool)
    with np.errstate(all="ignore"):
        for _ in range(200):
            z = reduce_to_cell(z)[0]
            alive &= np.abs(z) > 1e-6
            step = np.where(alive & ~done, (wp(z, 1) - target) / wp(z, 2), 0)
            z = z - step
            done |= alive & (np.abs(step) < tol)
            if np.all(done | ~alive):
                break
        ok = done & alive & (np.abs(cover(z) - w) <= 1e-6 * max(1, abs(w)))
    roots = []
    for r in reduce_to_cell(z[ok])[0]:
        if all(abs(reduce_to_cell(r - q)[0]) > exclusion for q in roots):
            roots.append(complex(r))
    return roots
