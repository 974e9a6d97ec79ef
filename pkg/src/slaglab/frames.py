"""SU(3) moving frames of special Legendrian surfaces.

A frame is stored as a complex 3x3 matrix ``F`` whose columns are the
complex vectors e1, e2, e3 (so n_k = i e_k).  On a conformal chart with
metric e^{2u}|dz|^2 and cubic differential H dz^3 the frame satisfies
dF = F (alpha + i beta) with

    alpha = [[0, rho, w1], [-rho, 0, w2], [-w1, -w2, 0]]
    beta  = [[b11, b12, 0], [b12, -b11, 0], [0, 0, 0]]

where w1 + i w2 = e^u dz, rho = u_y dx - u_x dy, a - ib = H e^{-3u},
b11 = a w1 + b w2 and b12 = b w1 - a w2.  The position is e3.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import discrete as fd
from .discrete import Grid2D
from .hermitian import as_real
from .kernels import get_sweep

DRIFT_LIMIT = 1e-6


class InadmissibleTripleError(ValueError):
    def __init__(self, residual, tolerance):
        super().__init__(
            f"admissibility residual {residual:.3e} exceeds tolerance {tolerance:.3e}"
        )
        self.residual = residual
        self.tolerance = tolerance


class FrameIntegrationError(RuntimeError):
    pass


class DomainViolationError(ValueError):
    pass


class AmbiguousZeroError(ValueError):
    pass


# --------------------------------------------------------------------------
# frames


@dataclass(frozen=True)
class FrameSU3:
    """Unitary frame (e1, e2, e3) with n_k = J e_k and det = 1."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        defect = np.linalg.norm(m.conj().T @ m - np.eye(3))
        if defect > 1e-10:
            raise ValueError(f"frame not unitary (defect {defect:.2e})")
        if abs(np.linalg.det(m) - 1) > 1e-10:
            raise ValueError(f"frame determinant {np.linalg.det(m):.6g} is not 1")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_real(cls, e, n) -> "FrameSU3":
        """Build from real 6-vectors e1..e3 and n1..n3; checks n = J e."""
        e = np.asarray(e, float).reshape(3, 6)
        n = np.asarray(n, float).reshape(3, 6)
        Je = np.concatenate([-e[:, 3:], e[:, :3]], axis=1)
        if np.max(abs(Je - n)) > 1e-10:
            raise ValueError("n is not J(e)")
        return cls((e[:, :3] + 1j * e[:, 3:]).T)

    @classmethod
    def identity(cls) -> "FrameSU3":
        return cls(np.eye(3, dtype=complex))

    @property
    def e(self) -> np.ndarray:
        return as_real(self.matrix.T)

    @property
    def n(self) -> np.ndarray:
        return as_real(1j * self.matrix.T)

    def real_matrix(self) -> np.ndarray:
        """6x6 orthogonal matrix with columns e1, e2, e3, n1, n2, n3."""
        return np.concatenate([self.e, self.n]).T


def frame_defects(F) -> tuple[float, float]:
    """Largest unitarity and determinant defect over a stack of frames."""
    F = np.asarray(F)
    FH = np.conj(np.swapaxes(F, -1, -2))
    orth = np.linalg.norm(FH @ F - np.eye(3), axis=(-2, -1))
    det = np.abs(np.linalg.det(F) - 1)
    return float(np.max(orth)), float(np.max(det))


# --------------------------------------------------------------------------
# admissible data


@dataclass(frozen=True)
class AdmissibleTriple:
    """Discretized metric e^{2u}|dz|^2 and cubic differential h dz^3.

    ``h`` is stored as ``h0`` rotated by the associate-family angle
    ``tau``; ``ux``/``uy`` optionally carry exact derivatives of u.
    """

    grid: Grid2D
    u: np.ndarray
    h0: np.ndarray
    c: int = 1
    tau: float = 0.0
    ux: np.ndarray | None = field(default=None, repr=False)
    uy: np.ndarray | None = field(default=None, repr=False)
    name: str = "custom"

    def __post_init__(self):
        if self.c not in (1, 0, -1):
            raise ValueError("space-form constant must be 1, 0 or -1")
        u = np.broadcast_to(np.asarray(self.u, float), self.grid.shape).copy()
        h0 = np.broadcast_to(np.asarray(self.h0, complex), self.grid.shape).copy()
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "h0", h0)

    @property
    def h(self) -> np.ndarray:
        if self.tau == 0.0:
            return self.h0
        return np.exp(1j * self.tau) * self.h0

    def derivatives(self):
        g = self.grid
        ux = fd.dx(self.u, g) if self.ux is None else self.ux
        uy = fd.dy(self.u, g) if self.uy is None else self.uy
        return ux, uy

    def curvature(self) -> np.ndarray:
        """K = -e^{-2u} Lap(u) with the 5-point Laplacian."""
        return -np.exp(-2 * self.u) * fd.laplacian(self.u, self.grid)

    def admissibility_field(self) -> np.ndarray:
        """K - (c - 2|h|^2 e^{-6u})."""
        return self.curvature() - (self.c - 2 * np.abs(self.h) ** 2 * np.exp(-6 * self.u))

    def admissibility_residual(self) -> float:
        return fd.sup_interior(self.admissibility_field(), self.grid, margin=1)

    def cauchy_riemann_residual(self) -> float:
        h = self.h
        dbar = 0.5 * (fd.dx(h, self.grid) + 1j * fd.dy(h, self.grid))
        return fd.sup_interior(dbar, self.grid, margin=1)


def associated_family(triple: AdmissibleTriple, tau: float) -> AdmissibleTriple:
    """Rotate the cubic differential by e^{i tau}; metric untouched."""
    return replace(triple, tau=triple.tau + tau)


def hexagonal_torus_triple(n: int = 64, ny: int | None = None) -> AdmissibleTriple:
    """Flat data u = ln(2)/6, h = 1 on the conformal period rectangle
    (which covers the torus twice)."""
    ny = n if ny is None else ny
    r = 2 ** (2 / 3)
    g = Grid2D.box(n, ny, (0, 4 * np.pi / r), (0, 4 * np.pi / (np.sqrt(3) * r)), True, True)
    z = np.zeros(g.shape)
    return AdmissibleTriple(g, np.log(2) / 6 + z, 1.0 + 0 * z, 1, ux=z, uy=z, name="hexagonal-torus")


def round_sphere_triple(n: int = 64, half_width: float = 1.0) -> AdmissibleTriple:
    """Stereographic chart of the unit sphere: u = ln(2/(1+|z|^2)), h = 0."""
    g = Grid2D.box(n, n, (-half_width, half_width), (-half_width, half_width))
    X, Y = g.mesh()
    r2 = X**2 + Y**2
    u = np.log(2 / (1 + r2))
    return AdmissibleTriple(g, u, np.zeros(g.shape), 1,
                            ux=-2 * X / (1 + r2), uy=-2 * Y / (1 + r2), name="sphere")


def wave_profile(amplitude: float = 0.15, lam: float = 1.0):
    """Periodic solution of u'' = -e^{2u} + 2 lam^2 e^{-4u} started at a crest.

    Returns (period, callable x -> (u, u')) accurate to about 1e-12.
    """
    from scipy.integrate import solve_ivp

    u0 = np.log(2 * lam**2) / 6 + amplitude

    def rhs(t, y):
        return [y[1], -np.exp(2 * y[0]) + 2 * lam**2 * np.exp(-4 * y[0])]

    def trough(t, y):
        return y[1]

    trough.direction = 1
    sol = solve_ivp(rhs, (0, 100), [u0, 0.0], method="DOP853", rtol=1e-13, atol=1e-14,
                    events=trough, dense_output=True)
    half = sol.t_events[0][0]
    period = 2 * half

    def evaluate(x):
        x = np.mod(np.asarray(x, float), period)
        # reflect the second half onto the first (the profile is even)
        xr = np.where(x > half, period - x, x)
        sign = np.where(x > half, -1.0, 1.0)
        pts = np.unique(xr)
        out = solve_ivp(rhs, (0, half), [u0, 0.0], method="DOP853", rtol=1e-13, atol=1e-14,
                        t_eval=pts)
        idx = np.searchsorted(pts, xr)
        return out.y[0][idx], sign * out.y[1][idx]

    return period, evaluate


def traveling_wave_triple(nx: int = 64, ny: int | None = None, amplitude: float = 0.15,
                          height: float | None = None) -> AdmissibleTriple:
    """Non-flat periodic data: u depends on x only and h = 1."""
    period, profile = wave_profile(amplitude)
    ny = nx if ny is None else ny
    height = period if height is None else height
    g = Grid2D.box(nx, ny, (0, period), (0, height), True, True)
    u1, up1 = profile(g.x)
    u = np.repeat(u1[:, None], ny, axis=1)
    ux = np.repeat(up1[:, None], ny, axis=1)
    return AdmissibleTriple(g, u, np.ones(g.shape), 1, ux=ux, uy=np.zeros(g.shape),
                            name="traveling-wave")


# --------------------------------------------------------------------------
# connection


@dataclass(frozen=True)
class ConnectionSample:
    """Values of the connection one-forms on one grid edge."""

    alpha: np.ndarray
    beta: np.ndarray
    omega1: float
    omega2: float
    rho: float
    beta11: float
    beta12: float
    a: float
    b: float

    @property
    def matrix(self) -> np.ndarray:
        return self.alpha + 1j * self.beta


def _assemble(w1, w2, rho, a, b):
    shape = np.shape(w1)
    alpha = np.zeros(shape + (3, 3))
    beta = np.zeros(shape + (3, 3))
    alpha[..., 0, 1], alpha[..., 1, 0] = rho, -rho
    alpha[..., 0, 2], alpha[..., 2, 0] = w1, -w1
    alpha[..., 1, 2], alpha[..., 2, 1] = w2, -w2
    b11 = a * w1 + b * w2
    b12 = b * w1 - a * w2
    beta[..., 0, 0], beta[..., 1, 1] = b11, -b11
    beta[..., 0, 1] = beta[..., 1, 0] = b12
    return alpha, beta, b11, b12


def connection_fields(triple: AdmissibleTriple):
    """Connection matrices A_x, A_y (complex, shape (nx, ny, 3, 3)) at nodes."""
    ux, uy = triple.derivatives()
    eu = np.exp(triple.u)
    ab = triple.h * np.exp(-3 * triple.u)
    a, b = ab.real, -ab.imag
    z = np.zeros_like(eu)
    al_x, be_x, _, _ = _assemble(eu, z, uy, a, b)
    al_y, be_y, _, _ = _assemble(z, eu, -ux, a, b)
    return al_x + 1j * be_x, al_y + 1j * be_y


def connection_from_triple(triple: AdmissibleTriple, edge) -> ConnectionSample:
    """Connection one-forms evaluated on the edge vector between two
    adjacent nodes, with coefficients taken at the edge midpoint."""
    (i0, j0), (i1, j1) = edge
    g = triple.grid
    di, dj = i1 - i0, j1 - j0
    if abs(di) + abs(dj) != 1:
        raise ValueError("edge must join two adjacent nodes")
    for i, j in edge:
        inside_x = g.periodic_x or 0 <= i < g.nx
        inside_y = g.periodic_y or 0 <= j < g.ny
        if not (inside_x and inside_y):
            raise ValueError(f"edge node {(i, j)} outside the domain")
    n0 = (i0 % g.nx, j0 % g.ny)
    n1 = (i1 % g.nx, j1 % g.ny)
    ux, uy = triple.derivatives()

    def mid(f):
        return 0.5 * (f[n0] + f[n1])

    u, uxm, uym, hm = mid(triple.u), mid(ux), mid(uy), mid(triple.h)
    vx, vy = di * g.dx, dj * g.dy
    eu = np.exp(u)
    w1, w2 = eu * vx, eu * vy
    rho = uym * vx - uxm * vy
    ab = hm * np.exp(-3 * u)
    alpha, beta, b11, b12 = _assemble(w1, w2, rho, ab.real, -ab.imag)
    return ConnectionSample(alpha, beta, w1, w2, rho, b11, b12, ab.real, -ab.imag)


# --------------------------------------------------------------------------
# patches


@dataclass
class DiscretePatch:
    """Frames on a parameter grid; the surface point is the third column.

    ``tags`` maps a boundary label to (kind, node index array) where kind
    is 'interior', 'anti_slag' or 'complex'.  ``tangents`` optionally
    holds exact (dP/dx, dP/dy) as real 6-vectors; ``conformal`` marks
    charts with metric e^{2u}|dz|^2.
    """

    grid: Grid2D
    frames: np.ndarray
    tags: dict = field(default_factory=dict)
    closed: tuple[bool, bool] = (False, False)
    conformal: bool = False
    tangents: tuple | None = None
    weights: np.ndarray | None = None
    parity: int = 1
    info: dict = field(default_factory=dict)

    @property
    def positions(self) -> np.ndarray:
        """Complex (nx, ny, 3)."""
        return self.frames[..., :, 2]

    @property
    def points(self) -> np.ndarray:
        """Real (nx, ny, 6)."""
        return as_real(self.positions)

    def frame_field(self, k: int) -> np.ndarray:
        return as_real(self.frames[..., :, k])

    @property
    def is_closed(self) -> bool:
        return all(self.closed)

    def frame_defects(self):
        return frame_defects(self.frames)

    def position_tangents(self, spectral: bool = False):
        """dP/dx, dP/dy: exact when stored, else spectral/FD."""
        if self.tangents is not None:
            return self.tangents
        P = self.points
        g = self.grid
        if spectral and self.is_closed:
            return (fd.spectral_diff(P, 0, g.nx * g.dx), fd.spectral_diff(P, 1, g.ny * g.dy))
        return fd.dx(P, g), fd.dy(P, g)

    def metric(self, exact: bool = False):
        """(E, F, G) from finite differences of the points, or from the
        stored tangents when ``exact``."""
        if exact:
            Px, Py = self.position_tangents(spectral=True)
            E, F, G, _, _ = fd.metric_tensor(None, self.grid, Px, Py)
        else:
            E, F, G, _, _ = fd.metric_tensor(self.points, self.grid)
        return E, F, G

    def area_weights(self) -> np.ndarray:
        """Quadrature weights times the area element."""
        if self.weights is not None and self.tangents is not None:
            E, F, G = self.metric(exact=True)
            return self.weights * np.sqrt(E * G - F * F)
        E, F, G = self.metric(exact=True)
        return self.grid.quadrature_weights() * np.sqrt(E * G - F * F)

    def laplace_beltrami(self, f):
        E, F, G = self.metric()
        return fd.laplace_beltrami(f, E, F, G, self.grid)

    def curvature(self):
        E, F, G = self.metric()
        return fd.brioschi_curvature(E, F, G, self.grid)

    def interior(self, margin: int = 2):
        g = self.grid
        m = np.ones(g.shape, dtype=bool)
        if not self.closed[0]:
            m[:margin] = m[-margin:] = False
        if not self.closed[1]:
            m[:, :margin] = m[:, -margin:] = False
        return m

    def sup_interior(self, field, margin: int = 2) -> float:
        f = np.abs(np.asarray(field))
        if f.ndim > 2:
            f = np.linalg.norm(f.reshape(f.shape[:2] + (-1,)), axis=-1)
        return float(np.max(f[self.interior(margin)]))


# --------------------------------------------------------------------------
# integration


def _fine_line(A, periodic, substeps):
    """Sub-sampled node and midpoint connection values along lines.

    A: (m, n, 3, 3).  Returns (Afine (m, nf, 3, 3), Amid (m, nf-1, 3, 3)).
    """
    m, n = A.shape[:2]
    s = substeps
    Al = np.moveaxis(A, 1, 0)
    nodes = [Al[:-1]]
    for k in range(1, s):
        nodes.append(fd.lagrange_line_interp(Al, k / s, periodic)[: n - 1])
    mids = [fd.lagrange_line_interp(Al, (k + 0.5) / s, periodic)[: n - 1] for k in range(s)]
    fine = np.stack(nodes, axis=1).reshape((n - 1) * s, m, 3, 3)
    fine = np.concatenate([fine, Al[-1:]], axis=0)
    mid = np.stack(mids, axis=1).reshape((n - 1) * s, m, 3, 3)
    return (np.ascontiguousarray(np.moveaxis(fine, 0, 1)),
            np.ascontiguousarray(np.moveaxis(mid, 0, 1)))


def _sweep(F0, A, h, periodic, substeps, sweep):
    """Integrate F' = F A along each line of A (m, n, 3, 3) starting at F0."""
    fine, mid = _fine_line(A, periodic, substeps)
    frames, worst = sweep(np.ascontiguousarray(F0, dtype=np.complex128), fine, mid,
                          h / substeps, DRIFT_LIMIT)
    if worst > DRIFT_LIMIT:
        raise FrameIntegrationError(
            f"frame drift {worst:.2e} before re-projection exceeds {DRIFT_LIMIT:.0e}"
        )
    return frames[:, ::substeps], worst


def _sweep_both_ways(F0, A, start, h, periodic, substeps, sweep):
    """Lines through index ``start`` integrated forwards and backwards
    (periodic lines are integrated once around, starting at ``start``)."""
    if periodic:
        rolled = np.roll(A, -start, axis=1)
        out, worst = _sweep(F0, rolled, h, True, substeps, sweep)
        return np.roll(out, start, axis=1), worst
    out = np.empty(A.shape, dtype=complex)
    fwd, worst = _sweep(F0, A[:, start:], h, False, substeps, sweep)
    out[:, start:] = fwd
    if start > 0:
        back, w2 = _sweep(F0, -A[:, start::-1], h, False, substeps, sweep)
        out[:, : start + 1] = back[:, ::-1]
        worst = max(worst, w2)
    return out, worst


def auto_substeps(triple: AdmissibleTriple, fields=None) -> int:
    """RK4 sub-steps per grid edge keeping |A| * step below 0.06."""
    Ax, Ay = connection_fields(triple) if fields is None else fields
    g = triple.grid
    worst = max(g.dx * np.max(np.linalg.norm(Ax, axis=(-2, -1))),
                g.dy * np.max(np.linalg.norm(Ay, axis=(-2, -1))))
    return max(2, int(np.ceil(worst / 0.06)))


def integrate_frame(triple: AdmissibleTriple, seed: FrameSU3 | None = None,
                    seed_index=(0, 0), substeps: int | None = None, backend=None,
                    check: bool = True, closed=None) -> DiscretePatch:
    """Propagate a frame over the grid: first along the seed row (x),
    then up and down every column (y).  Returns the patch with the
    plaquette holonomy in ``info``.
    """
    g = triple.grid
    if check:
        tol = 10 * g.spacing**2
        res = triple.admissibility_residual()
        if res > tol:
            raise InadmissibleTripleError(res, tol)
    if triple.c != 1:
        raise ValueError("frame integration targets c = 1 only")
    seed = FrameSU3.identity() if seed is None else seed
    sweep = get_sweep(backend)
    Ax, Ay = connection_fields(triple)
    if substeps is None:
        substeps = auto_substeps(triple, (Ax, Ay))
    i0, j0 = seed_index
    row, w_row = _sweep_both_ways(seed.matrix[None], Ax[None, :, j0], i0, g.dx,
                                  g.periodic_x, substeps, sweep)
    frames, w_col = _sweep_both_ways(row[0], Ay, j0, g.dy, g.periodic_y, substeps, sweep)
    hol = plaquette_holonomy(triple, substeps=substeps, backend=backend, fields=(Ax, Ay))
    orth, det = frame_defects(frames)
    info = {
        "triple": triple.name,
        "substeps": substeps,
        "max_drift": max(w_row, w_col),
        "holonomy_density": float(np.max(hol)),
        "frame_orthogonality_defect": orth,
        "frame_determinant_defect": det,
        "admissibility_residual": triple.admissibility_residual(),
    }
    return DiscretePatch(g, frames, closed=closed or (False, False), conformal=True,
                         info=info)


def edge_transports(A, periodic, h, substeps, sweep):
    """Propagators T with F(next) = F(current) T along every edge of every line."""
    m, n = A.shape[:2]
    if periodic:
        A = np.concatenate([A, A[:, :1]], axis=1)
        n += 1
    fine, mid = _fine_line(A, periodic, substeps)
    s = substeps
    segs = np.stack([fine[:, k * s: k * s + s + 1] for k in range(n - 1)], axis=1)
    msegs = np.stack([mid[:, k * s: k * s + s] for k in range(n - 1)], axis=1)
    segs = segs.reshape((-1, s + 1, 3, 3))
    msegs = msegs.reshape((-1, s, 3, 3))
    eye = np.broadcast_to(np.eye(3, dtype=complex), (segs.shape[0], 3, 3))
    frames, _ = sweep(np.ascontiguousarray(eye), np.ascontiguousarray(segs),
                      np.ascontiguousarray(msegs), h / s, 1.0)
    return frames[:, -1].reshape(m, n - 1, 3, 3)


def plaquette_holonomy(triple: AdmissibleTriple, substeps: int | None = None, backend=None,
                       fields=None) -> np.ndarray:
    """|hol - I| / (dx dy) for every grid cell: a discrete curvature
    density of the discretized connection."""
    g = triple.grid
    sweep = get_sweep(backend)
    Ax, Ay = connection_fields(triple) if fields is None else fields
    if substeps is None:
        substeps = auto_substeps(triple, (Ax, Ay))
    Tx = np.swapaxes(edge_transports(np.swapaxes(Ax, 0, 1), g.periodic_x, g.dx,
                                      substeps, sweep), 0, 1)
    Ty = edge_transports(Ay, g.periodic_y, g.dy, substeps, sweep)
    # Tx[i, j]: edge (i, j) -> (i+1, j);  Ty[i, j]: edge (i, j) -> (i, j+1)
    I, Jj = np.meshgrid(np.arange(Tx.shape[0]), np.arange(Ty.shape[1]), indexing="ij")
    a = Tx[I, Jj]
    b = Ty[(I + 1) % g.nx, Jj]
    c = Tx[I, (Jj + 1) % g.ny]
    d = Ty[I, Jj]
    H = a @ b @ np.conj(np.swapaxes(c, -1, -2)) @ np.conj(np.swapaxes(d, -1, -2))
    return np.linalg.norm(H - np.eye(3), axis=(-2, -1)) / (g.dx * g.dy)


# --------------------------------------------------------------------------
# pointwise identities


def _jvec(v):
    return np.concatenate([-v[..., 3:], v[..., :3]], axis=-1)


def _derivs(patch: DiscretePatch):
    """First and second coordinate derivatives of the points
    (spectral on closed patches, centered differences otherwise)."""
    P = patch.points
    g = patch.grid
    if patch.is_closed:
        Lx, Ly = g.nx * g.dx, g.ny * g.dy
        Px, Py = fd.spectral_diff(P, 0, Lx), fd.spectral_diff(P, 1, Ly)
        Pxx, Pyy = fd.spectral_diff(Px, 0, Lx), fd.spectral_diff(Py, 1, Ly)
        Pxy = fd.spectral_diff(Px, 1, Ly)
    else:
        Px, Py = fd.dx(P, g), fd.dy(P, g)
        Pxx, Pyy, Pxy = fd.dxx(P, g), fd.dyy(P, g), fd.dxy(P, g)
    return Px, Py, Pxx, Pxy, Pyy


def cubic_form_coordinates(patch: DiscretePatch):
    """C_abc = <d_a d_b P, J d_c P> for (xxx, xxy, xyy, yyy)."""
    Px, Py, Pxx, Pxy, Pyy = _derivs(patch)
    JPx, JPy = _jvec(Px), _jvec(Py)
    dot = lambda a, b: np.sum(a * b, axis=-1)
    return dot(Pxx, JPx), dot(Pxx, JPy), dot(Pyy, JPx), dot(Pyy, JPy)


def cubic_from_patch(patch: DiscretePatch) -> np.ndarray:
    """Recover the cubic differential from second derivatives of the points.

    On conformal patches the result is the coefficient H of H dz^3 in the
    grid coordinate.  Otherwise it is a - ib = Phi(e1, e1, e1) in the
    patch's unit frame.
    """
    Cxxx, Cxxy, Cxyy, Cyyy = cubic_form_coordinates(patch)
    if patch.conformal:
        return Cxxx - 1j * Cxxy
    Px, Py, *_ = _derivs(patch)
    e1, e2 = patch.frame_field(0), patch.frame_field(1)
    # coordinates of e1 in the basis (Px, Py)
    E, F, G = (np.sum(a * b, -1) for a, b in ((Px, Px), (Px, Py), (Py, Py)))
    det = E * G - F * F
    r1, r2 = np.sum(e1 * Px, -1), np.sum(e1 * Py, -1)
    cx, cy = (G * r1 - F * r2) / det, (E * r2 - F * r1) / det
    s1, s2 = np.sum(e2 * Px, -1), np.sum(e2 * Py, -1)
    dxn, dyn = (G * s1 - F * s2) / det, (E * s2 - F * s1) / det

    def C(x1, y1, x2, y2, x3, y3):
        # trilinear evaluation of the symmetric coordinate tensor
        out = 0
        comps = {0: Cxxx, 1: Cxxy, 2: Cxyy, 3: Cyyy}
        for a, va in ((0, x1), (1, y1)):
            for b, vb in ((0, x2), (1, y2)):
                for c, vc in ((0, x3), (1, y3)):
                    out = out + va * vb * vc * comps[a + b + c]
        return out

    return C(cx, cy, cx, cy, cx, cy) - 1j * C(cx, cy, cx, cy, dxn, dyn)


def dbar_residual(H, grid: Grid2D, margin: int = 2) -> float:
    dbar = 0.5 * (fd.dx(H, grid) + 1j * fd.dy(H, grid))
    return fd.sup_interior(dbar, grid, margin)


def h1_field(triple: AdmissibleTriple) -> np.ndarray:
    """h1 from dh = -3ih rho + h1 (w1 + i w2): h1 = e^{-4u}(H_z - 6 H u_z)."""
    g = triple.grid
    H = triple.h
    ux, uy = triple.derivatives()
    Hz = 0.5 * (fd.dx(H, g) - 1j * fd.dy(H, g))
    uz = 0.5 * (ux - 1j * uy)
    return np.exp(-4 * triple.u) * (Hz - 6 * H * uz)


def simons_residual(triple: AdmissibleTriple) -> np.ndarray:
    """|-Lap_g K - 12 K |h|^2 - 8 |h1|^2| pointwise."""
    if triple.c != 1:
        raise ValueError("the identity is stated for c = 1")
    g = triple.grid
    K = triple.curvature()
    lapK = np.exp(-2 * triple.u) * fd.laplacian(K, g)
    hn2 = np.abs(triple.h) ** 2 * np.exp(-6 * triple.u)
    return np.abs(-lapK - 12 * K * hn2 - 8 * np.abs(h1_field(triple)) ** 2)


@dataclass(frozen=True)
class UmbilicDivisor:
    zeros: list
    total_degree: int
    expected_total: int

    @property
    def consistent(self) -> bool:
        return self.total_degree == self.expected_total


def umbilic_divisor(h, grid: Grid2D, genus: int = 1, rel_tol: float = 1e-12) -> UmbilicDivisor:
    """Zeros of a cubic-differential coefficient by winding numbers around
    grid cells; degrees sum to 6g - 6 on a closed surface."""
    h = np.asarray(h, complex)
    scale = max(np.max(np.abs(h)), 1e-300)
    if np.min(np.abs(h)) <= rel_tol * scale:
        i, j = np.unravel_index(np.argmin(np.abs(h)), h.shape)
        raise AmbiguousZeroError(f"h vanishes at grid node {(int(i), int(j))}; shift the grid")
    cx = grid.nx if grid.periodic_x else grid.nx - 1
    cy = grid.ny if grid.periodic_y else grid.ny - 1
    I, Jn = np.meshgrid(np.arange(cx), np.arange(cy), indexing="ij")
    corners = [h[I, Jn], h[(I + 1) % grid.nx, Jn], h[(I + 1) % grid.nx, (Jn + 1) % grid.ny],
               h[I, (Jn + 1) % grid.ny]]
    wind = 0
    for a, b in zip(corners, corners[1:] + corners[:1]):
        step = np.angle(b / a)
        if np.any(np.abs(np.abs(step) - np.pi) < 1e-6):
            raise AmbiguousZeroError("phase jump of pi across a cell edge; refine the grid")
        wind = wind + step
    deg = np.rint(wind / (2 * np.pi)).astype(int)
    zeros = []
    for i, j in zip(*np.nonzero(deg)):
        loc = complex(grid.x0 + (i + 0.5) * grid.dx, grid.y0 + (j + 0.5) * grid.dy)
        zeros.append((loc, int(deg[i, j])))
    closed = grid.periodic_x and grid.periodic_y
    return UmbilicDivisor(zeros, int(deg.sum()), 6 * genus - 6 if closed else int(deg.sum()))


def flat_check_scaled_metric(u, grid: Grid2D, c: int = 1):
    """Curvature of ((c - K)/2)^{1/3} e^{2u}|dz|^2.

    Returns (curvature field, min margin c - K).
    """
    u = np.asarray(u, float)
    K = -np.exp(-2 * u) * fd.laplacian(u, grid)
    m = grid.interior_mask(1)
    margin = float(np.min((c - K)[m]))
    if margin <= 0:
        raise DomainViolationError(f"K >= c somewhere (min c - K = {margin:.3e})")
    ut = u + np.log((c - K) / 2) / 6
    Kt = -np.exp(-2 * ut) * fd.laplacian(ut, grid)
    return Kt, margin


# --------------------------------------------------------------------------
# distinguished curves


@dataclass(frozen=True)
class CurveClassification:
    label: str
    geodesic_residual: float
    real_part: float
    imag_part: float


def _curve_derivs(Q, closed):
    n = len(Q)
    if closed:
        d1 = fd.spectral_diff(Q, 0, n)
        return d1, fd.spectral_diff(d1, 0, n), np.arange(n)
    # eighth-order centered stencils
    c1 = np.array([1 / 280, -4 / 105, 1 / 5, -4 / 5, 0, 4 / 5, -1 / 5, 4 / 105, -1 / 280])
    c2 = np.array([-1 / 560, 8 / 315, -1 / 5, 8 / 5, -205 / 72, 8 / 5, -1 / 5, 8 / 315, -1 / 560])
    idx = np.arange(4, n - 4)
    win = np.stack([Q[idx + k] for k in range(-4, 5)])
    return (np.tensordot(c1, win, axes=(0, 0)), np.tensordot(c2, win, axes=(0, 0)), idx)


def classify_curve(patch: DiscretePatch, curve, closed: bool = False, tol: float = 1e-8):
    """Label a grid polyline as 'anti_slag', 'complex' or 'neither'.

    With unit tangent T and N the in-surface unit normal (T, N positively
    oriented), geodesic curves along which C(T,T,T) = Re Phi(T^3)
    vanishes lie in an anti-special Lagrangian 3-plane, and those along
    which C(T,T,N) = -Im Phi(T^3) vanishes lie in a complex plane.
    """
    ii, jj = np.asarray(curve).T
    Q = patch.points[ii, jj]
    if len(Q) < (3 if closed else 9):
        raise ValueError("curve too short")
    d1, d2, idx = _curve_derivs(Q, closed)
    e1 = patch.frame_field(0)[ii, jj][idx]
    e2 = patch.frame_field(1)[ii, jj][idx]
    speed2 = np.sum(d1 * d1, -1)
    T = d1 / np.sqrt(speed2)[:, None]
    c, s = np.sum(T * e1, -1), np.sum(T * e2, -1)
    N = -s[:, None] * e1 + c[:, None] * e2
    N /= np.linalg.norm(N, axis=1, keepdims=True)
    kg = np.sum(d2 * N, -1) / speed2
    ttt = np.sum(d2 * _jvec(T), -1) / speed2
    ttn = np.sum(d2 * _jvec(N), -1) / speed2
    geo, re, im = (float(np.max(np.abs(a))) for a in (kg, ttt, ttn))
    if geo > tol:
        label = "neither"
    elif re <= tol:
        label = "anti_slag"
    elif im <= tol:
        label = "complex"
    else:
        label = "neither"
    return CurveClassification(label, geo, re, im)


def lattice_curve(grid: Grid2D, start, direction, steps: int | None = None):
    """Nodes start + t * direction (mod the grid on periodic axes).

    On a doubly periodic grid with ``steps`` omitted the walk runs until
    it returns to the start, giving a closed curve.
    """
    i, j = start
    di, dj = direction
    nodes = []
    limit = steps if steps is not None else grid.nx * grid.ny
    for _ in range(limit):
        nodes.append((i % grid.nx, j % grid.ny))
        i, j = i + di, j + dj
        if steps is None and (i % grid.nx, j % grid.ny) == nodes[0]:
            break
    return np.array(nodes)
