"""Parameter grids and finite-difference operators.

All stencils here are centered and second order; one-sided second-order
stencils are used on the first and last node of non-periodic axes.
Fields are indexed ``[i, j, ...]`` with ``i`` along x and ``j`` along y.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Grid2D:
    """Uniform tensor grid; periodic axes exclude the right end point."""

    nx: int
    ny: int
    dx: float
    dy: float
    x0: float = 0.0
    y0: float = 0.0
    periodic_x: bool = False
    periodic_y: bool = False

    @classmethod
    def box(cls, nx, ny, xlim, ylim, periodic_x=False, periodic_y=False):
        """Grid over [x0, x1] x [y0, y1]; on periodic axes x1 is identified with x0."""
        (x0, x1), (y0, y1) = xlim, ylim
        dx = (x1 - x0) / (nx if periodic_x else nx - 1)
        dy = (y1 - y0) / (ny if periodic_y else ny - 1)
        return cls(nx, ny, dx, dy, x0, y0, periodic_x, periodic_y)

    @property
    def shape(self):
        return (self.nx, self.ny)

    @property
    def x(self):
        return self.x0 + self.dx * np.arange(self.nx)

    @property
    def y(self):
        return self.y0 + self.dy * np.arange(self.ny)

    def mesh(self):
        return np.meshgrid(self.x, self.y, indexing="ij")

    @property
    def spacing(self):
        return max(self.dx, self.dy)

    def refined(self, factor: int = 2) -> "Grid2D":
        """Nested refinement: every old node is a new node."""
        nx = self.nx * factor if self.periodic_x else (self.nx - 1) * factor + 1
        ny = self.ny * factor if self.periodic_y else (self.ny - 1) * factor + 1
        return Grid2D(nx, ny, self.dx / factor, self.dy / factor, self.x0, self.y0,
                      self.periodic_x, self.periodic_y)

    def interior_mask(self, margin: int = 2) -> np.ndarray:
        """Nodes at least ``margin`` away from a non-periodic edge."""
        m = np.ones(self.shape, dtype=bool)
        if not self.periodic_x:
            m[:margin] = m[-margin:] = False
        if not self.periodic_y:
            m[:, :margin] = m[:, -margin:] = False
        return m

    def quadrature_weights(self) -> np.ndarray:
        """Trapezoid weights (spectrally accurate on periodic axes)."""
        wx = np.full(self.nx, self.dx)
        wy = np.full(self.ny, self.dy)
        if not self.periodic_x:
            wx[[0, -1]] *= 0.5
        if not self.periodic_y:
            wy[[0, -1]] *= 0.5
        return np.outer(wx, wy)


def diff(f, axis: int, h: float, periodic: bool) -> np.ndarray:
    """Centered first derivative along ``axis`` (0 or 1)."""
    f = np.asarray(f)
    if periodic:
        return (np.roll(f, -1, axis) - np.roll(f, 1, axis)) / (2 * h)
    f = np.moveaxis(f, axis, 0)
    out = np.empty_like(f)
    out[1:-1] = (f[2:] - f[:-2]) / (2 * h)
    out[0] = (-3 * f[0] + 4 * f[1] - f[2]) / (2 * h)
    out[-1] = (3 * f[-1] - 4 * f[-2] + f[-3]) / (2 * h)
    return np.moveaxis(out, 0, axis)


def diff2(f, axis: int, h: float, periodic: bool) -> np.ndarray:
    """Centered second derivative along ``axis``."""
    f = np.asarray(f)
    if periodic:
        return (np.roll(f, -1, axis) - 2 * f + np.roll(f, 1, axis)) / h**2
    f = np.moveaxis(f, axis, 0)
    out = np.empty_like(f)
    out[1:-1] = (f[2:] - 2 * f[1:-1] + f[:-2]) / h**2
    out[0] = (2 * f[0] - 5 * f[1] + 4 * f[2] - f[3]) / h**2
    out[-1] = (2 * f[-1] - 5 * f[-2] + 4 * f[-3] - f[-4]) / h**2
    return np.moveaxis(out, 0, axis)


def dx(f, g: Grid2D):
    return diff(f, 0, g.dx, g.periodic_x)


def dy(f, g: Grid2D):
    return diff(f, 1, g.dy, g.periodic_y)


def dxx(f, g: Grid2D):
    return diff2(f, 0, g.dx, g.periodic_x)


def dyy(f, g: Grid2D):
    return diff2(f, 1, g.dy, g.periodic_y)


def dxy(f, g: Grid2D):
    return dx(dy(f, g), g)


def laplacian(f, g: Grid2D):
    """Flat 5-point Laplacian."""
    return dxx(f, g) + dyy(f, g)


def spectral_diff(f, axis: int, period: float) -> np.ndarray:
    """Fourier derivative on a periodic axis (exact for band-limited data)."""
    f = np.asarray(f)
    n = f.shape[axis]
    k = 2j * np.pi * np.fft.fftfreq(n, d=period / n)
    if n % 2 == 0:
        k[n // 2] = 0
    shape = [1] * f.ndim
    shape[axis] = n
    out = np.fft.ifft(np.fft.fft(f, axis=axis) * k.reshape(shape), axis=axis)
    return out if np.iscomplexobj(f) else out.real


def metric_tensor(P, g: Grid2D, Px=None, Py=None):
    """First fundamental form of an immersion sampled as ``P[i, j, :]``.

    Returns (E, F, G, Px, Py).  Tangents are finite differences unless
    supplied.
    """
    if Px is None:
        Px = dx(P, g)
    if Py is None:
        Py = dy(P, g)
    E = np.sum(Px * Px, axis=-1)
    F = np.sum(Px * Py, axis=-1)
    G = np.sum(Py * Py, axis=-1)
    return E, F, G, Px, Py


def laplace_beltrami(f, E, F, G, g: Grid2D):
    """(1/sqrt(det)) d_a (sqrt(det) g^{ab} d_b f), componentwise on trailing axes."""
    det = E * G - F * F
    s = np.sqrt(det)
    fx, fy = dx(f, g), dy(f, g)
    extra = (slice(None), slice(None)) + (None,) * (np.ndim(f) - 2)
    gxx, gxy, gyy = (G / s)[extra], (-F / s)[extra], (E / s)[extra]
    flux_x = gxx * fx + gxy * fy
    flux_y = gxy * fx + gyy * fy
    return (dx(flux_x, g) + dy(flux_y, g)) / s[extra]


def laplace_beltrami_conformal(f, u, g: Grid2D):
    """Laplace-Beltrami for the metric e^{2u}(dx^2 + dy^2), 5-point stencil."""
    extra = (slice(None), slice(None)) + (None,) * (np.ndim(f) - 2)
    return laplacian(f, g) * np.exp(-2 * u)[extra]


def brioschi_curvature(E, F, G, g: Grid2D):
    """Gaussian curvature from the first fundamental form alone."""
    Ex, Ey = dx(E, g), dy(E, g)
    Fx, Fy = dx(F, g), dy(F, g)
    Gx, Gy = dx(G, g), dy(G, g)
    Eyy, Gxx = dyy(E, g), dxx(G, g)
    Fxy = dxy(F, g)
    det = E * G - F * F
    a = -0.5 * Eyy + Fxy - 0.5 * Gxx
    m1 = np.stack(
        [
            np.stack([a, 0.5 * Ex, Fx - 0.5 * Ey], -1),
            np.stack([Fy - 0.5 * Gx, E, F], -1),
            np.stack([0.5 * Gy, F, G], -1),
        ],
        -2,
    )
    z = np.zeros_like(E)
    m2 = np.stack(
        [
            np.stack([z, 0.5 * Ey, 0.5 * Gx], -1),
            np.stack([0.5 * Ey, E, F], -1),
            np.stack([0.5 * Gx, F, G], -1),
        ],
        -2,
    )
    return (np.linalg.det(m1) - np.linalg.det(m2)) / det**2


def refinement_ratio(coarse: float, fine: float) -> float:
    """Error ratio between successive grids (4 for second-order)."""
    if fine == 0:
        return np.inf if coarse > 0 else np.nan
    return coarse / fine


def sup_interior(field, g: Grid2D, margin: int = 2) -> float:
    f = np.abs(np.asarray(field))
    m = g.interior_mask(margin)
    if f.ndim > 2:
        f = np.linalg.norm(f.reshape(f.shape[:2] + (-1,)), axis=-1)
    return float(np.max(f[m]))


def lagrange_line_interp(values, frac: float, periodic: bool) -> np.ndarray:
    """Cubic Lagrange interpolation of nodal ``values`` (n, ...) at
    positions ``s + frac`` for s = 0..n-2 (periodic: 0..n-1)."""
    v = np.asarray(values)
    n = v.shape[0]
    t = frac
    # weights for nodes s-1, s, s+1, s+2
    w = np.array([
        -t * (t - 1) * (t - 2) / 6,
        (t + 1) * (t - 1) * (t - 2) / 2,
        -(t + 1) * t * (t - 2) / 2,
        (t + 1) * t * (t - 1) / 6,
    ])
    count = n if periodic else n - 1
    s = np.arange(count)
    if periodic:
        idx = np.stack([(s - 1) % n, s % n, (s + 1) % n, (s + 2) % n])
        return np.tensordot(w, v[idx], axes=(0, 0))
    out = np.empty((count,) + v.shape[1:], dtype=v.dtype)
    if n < 4:
        return (1 - t) * v[:-1] + t * v[1:]
    inner = s[1:-1]
    idx = np.stack([inner - 1, inner, inner + 1, inner + 2])
    out[1:-1] = np.tensordot(w, v[idx], axes=(0, 0))
    # quadratic at the ends
    q = np.array([(t - 1) * (t - 2) / 2, -t * (t - 2), t * (t - 1) / 2])
    out[0] = np.tensordot(q, v[[0, 1, 2]], axes=(0, 0))
    qe = np.array([(t) * (t - 1) / 2, -(t + 1) * (t - 1), (t + 1) * t / 2])
    out[-1] = np.tensordot(qe, v[[n - 3, n - 2, n - 1]], axes=(0, 0))
    return out
