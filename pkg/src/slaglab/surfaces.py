"""Closed-form special Legendrian surfaces, the Hopf projection and
reflection continuation of patches."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from . import discrete as fd
from .discrete import Grid2D
from .frames import DiscretePatch, _derivs, _jvec
from .hermitian import (
    ComplexLineCP2,
    J_MATRIX,
    ConstraintError,
    Lagrangian3Plane,
    as_complex,
    as_real,
    classify_lagrangian_plane,
    reflect_anti_slag,
    reflect_complex,
)

INV_SQRT3 = 1 / np.sqrt(3)


class SeamOrthogonalityWarning(UserWarning):
    pass


def _fix_orientation(F):
    """Flip e2 where det = -1 so every frame lies in SU(3)."""
    d = np.linalg.det(F)
    if np.max(np.abs(np.abs(d) - 1)) > 1e-9 or np.max(np.abs(d.imag)) > 1e-9:
        raise ConstraintError("frame is not special Legendrian (det not +-1)")
    F = F.copy()
    F[..., :, 1] *= np.sign(d.real)[..., None]
    return F


def _frames_from_tangents(X, Xa, Xb):
    """SU(3) frames from position and two tangent vectors (complex)."""
    e1 = Xa / np.linalg.norm(Xa, axis=-1, keepdims=True)
    e2 = Xb - np.real(np.sum(np.conj(e1) * Xb, -1))[..., None] * e1
    e2 /= np.linalg.norm(e2, axis=-1, keepdims=True)
    return _fix_orientation(np.stack([e1, e2, X], axis=-1))


def hexagonal_torus(n: int = 64, ny: int | None = None) -> DiscretePatch:
    """z = 3^{-1/2}(e^{i th1}, e^{i th2}, e^{-i(th1 + th2)}) on [0, 2pi)^2."""
    ny = n if ny is None else ny
    g = Grid2D.box(n, ny, (0, 2 * np.pi), (0, 2 * np.pi), True, True)
    T1, T2 = g.mesh()
    ph = np.stack([T1, T2, -T1 - T2], -1)
    X = INV_SQRT3 * np.exp(1j * ph)
    X1 = 1j * X * np.array([1, 0, -1])
    X2 = 1j * X * np.array([0, 1, -1])
    F = _frames_from_tangents(X, X1, X2)
    return DiscretePatch(g, F, closed=(True, True), tangents=(as_real(X1), as_real(X2)),
                         info={"name": "hexagonal-torus"})


HEX_R = 2 ** (2 / 3)
HEX_L = [HEX_R * np.array([np.cos(-2 * np.pi * j / 3), np.sin(-2 * np.pi * j / 3)])
         for j in range(3)]


def hexagonal_torus_conformal(nx: int = 64, ny: int | None = None) -> DiscretePatch:
    """The hexagonal torus in conformal coordinates, metric 2^{1/3}|dz|^2,
    cubic differential dz^3, on the period rectangle (a double cover)."""
    ny = nx if ny is None else ny
    g = Grid2D.box(nx, ny, (0, 4 * np.pi / HEX_R), (0, 4 * np.pi / (np.sqrt(3) * HEX_R)),
                   True, True)
    X, Y = g.mesh()
    Z = np.stack([INV_SQRT3 * np.exp(1j * (l[0] * X + l[1] * Y)) for l in HEX_L], -1)
    Zx = 1j * Z * np.array([l[0] for l in HEX_L])
    Zy = 1j * Z * np.array([l[1] for l in HEX_L])
    F = _frames_from_tangents(Z, Zx, Zy)
    return DiscretePatch(g, F, closed=(True, True), conformal=True,
                         tangents=(as_real(Zx), as_real(Zy)),
                         info={"name": "hexagonal-torus-conformal"})


def hexagonal_torus_strip(ns: int = 64, nt: int = 17, t_range=(0.0, np.pi / 2)) -> DiscretePatch:
    """Hexagonal torus in coordinates th1 = s + t, th2 = t - s.

    Lines t = const are the curves th1 + th2 = 2t, so the half torus
    t in [0, pi/2] is bounded by two such curves.  The full torus is
    s in [0, 2 pi), t in [-pi/2, pi/2).
    """
    g = Grid2D.box(ns, nt, (0, 2 * np.pi), t_range, True, False)
    S, T = g.mesh()
    ph = np.stack([S + T, T - S, -2 * T], -1)
    X = INV_SQRT3 * np.exp(1j * ph)
    Xs = 1j * X * np.array([1, -1, 0])
    Xt = 1j * X * np.array([1, 1, -2])
    F = _frames_from_tangents(X, Xs, Xt)
    seam_plane = Lagrangian3Plane(as_real(np.array([[1, 1, 0], [1j, -1j, 0], [0, 0, 1]])
                                          / np.array([[np.sqrt(2)], [np.sqrt(2)], [1]])))
    tags = {}
    if abs(t_range[0]) < 1e-15:
        tags["seam"] = ("anti_slag", np.array([(i, 0) for i in range(ns)]), seam_plane)
    return DiscretePatch(g, F, tags=tags, closed=(True, False),
                         tangents=(as_real(Xs), as_real(Xt)),
                         info={"name": "hexagonal-torus-strip"})


def anti_slag_seam_plane() -> Lagrangian3Plane:
    """span_R{(1,1,0)/sqrt2, (i,-i,0)/sqrt2, (0,0,1)}: contains th1 + th2 = 0."""
    return hexagonal_torus_strip(16, 4).tags["seam"][2]


def geodesic_sphere(L: Lagrangian3Plane | None = None, n: int = 32, chart: str = "latlong",
                    theta_range=None, n_phi: int | None = None, half_width: float = 1.0,
                    quadrature: str = "gauss") -> DiscretePatch:
    """L cap S^5 for a special Lagrangian plane L.

    chart='latlong': polar angle (Gauss-Legendre nodes by default, or a
    uniform grid over ``theta_range``) times a periodic azimuth.
    chart='stereographic': conformal chart on [-w, w]^2 with metric
    4|dz|^2/(1+|z|^2)^2.
    """
    L = Lagrangian3Plane(np.eye(6)[:3]) if L is None else L
    phase = classify_lagrangian_plane(L)
    if min(phase, 2 * np.pi - phase) > 1e-9:
        raise ConstraintError(f"plane has phase {phase:.6g}; a special Lagrangian plane is needed")
    U = L.unitary()
    if chart == "stereographic":
        g = Grid2D.box(n, n, (-half_width, half_width), (-half_width, half_width))
        X, Y = g.mesh()
        d = 1 + X**2 + Y**2
        s = np.stack([2 * X, 2 * Y, 1 - X**2 - Y**2], -1) / d[..., None]
        sx = np.stack([2 * (1 - X**2 + Y**2), -4 * X * Y, -4 * X], -1) / (d**2)[..., None]
        sy = np.stack([-4 * X * Y, 2 * (1 + X**2 - Y**2), -4 * Y], -1) / (d**2)[..., None]
        weights, closed, conformal = None, (False, False), True
    elif chart == "latlong":
        n_phi = 2 * n if n_phi is None else n_phi
        if theta_range is None and quadrature == "gauss":
            xg, wg = np.polynomial.legendre.leggauss(n)
            theta = np.arccos(-xg)
            wth = wg / np.sin(theta)  # d(cos theta) = sin theta d theta
            g = Grid2D(n, n_phi, 0.0, 2 * np.pi / n_phi, 0.0, 0.0, False, True)
            weights = np.outer(wth, np.full(n_phi, 2 * np.pi / n_phi))
        else:
            a, b = theta_range if theta_range is not None else (0.05, np.pi - 0.05)
            g = Grid2D.box(n, n_phi, (a, b), (0, 2 * np.pi), False, True)
            theta = g.x
            weights = None
        Th, Ph = np.meshgrid(theta, g.y, indexing="ij")
        st, ct, sp_, cp = np.sin(Th), np.cos(Th), np.sin(Ph), np.cos(Ph)
        s = np.stack([st * cp, st * sp_, ct], -1)
        sx = np.stack([ct * cp, ct * sp_, -st], -1)
        sy = np.stack([-st * sp_, st * cp, 0 * st], -1)
        closed, conformal = (False, True), False
        if weights is not None:
            g = replace(g, dx=float(np.mean(np.diff(theta))), x0=float(theta[0]))
    else:
        raise ValueError(f"unknown chart {chart!r}")
    Xc = s @ U.T
    Xa, Xb = sx @ U.T, sy @ U.T
    F = _frames_from_tangents(Xc, Xa.astype(complex), Xb.astype(complex))
    info = {"name": "geodesic-sphere", "chart": chart}
    if chart == "latlong" and weights is not None:
        info["theta"] = theta
        info["closed_surface"] = True
    return DiscretePatch(g, F, closed=closed, conformal=conformal,
                         tangents=(as_real(Xa), as_real(Xb)), weights=weights, info=info)


def geodesic_hemisphere(n: int = 33, n_phi: int = 64, theta0: float = 0.05) -> DiscretePatch:
    """Upper half of the standard geodesic sphere (uniform polar grid on
    [theta0, pi/2]) with the equator tagged: it lies in the anti-special
    Lagrangian plane span{e1, e2, i e3}."""
    p = geodesic_sphere(n=n, n_phi=n_phi, theta_range=(theta0, np.pi / 2), quadrature="uniform")
    face = Lagrangian3Plane(np.array([[1.0, 0, 0, 0, 0, 0], [0, 1, 0, 0, 0, 0], [0, 0, 0, 0, 0, 1]]))
    p.tags["equator"] = ("anti_slag", np.array([(n - 1, j) for j in range(n_phi)]), face)
    return p


def product_torus(levels=(0, 0, 0), n: int = 64) -> DiscretePatch:
    """Legendrian slice sum(th) = 0 of the product of three circles of
    radii ((n_i + 1)/(n + 1))^{1/2}, in the sheared parameters
    th1 = a - b, th2 = b, th3 = -a."""
    if len(levels) != 3:
        raise ValueError("only the product of three factors (S^5) is supported")
    if any(l != 0 for l in levels):
        raise ValueError("only zero-dimensional factors are supported")
    N = sum(l + 1 for l in levels)
    radii = np.array([np.sqrt((l + 1) / N) for l in levels])
    g = Grid2D.box(n, n, (0, 2 * np.pi), (0, 2 * np.pi), True, True)
    A, B = g.mesh()
    ph = np.stack([A - B, B, -A], -1)
    X = radii * np.exp(1j * ph)
    Xa = 1j * X * np.array([1, 0, -1])
    Xb = 1j * X * np.array([-1, 1, 0])
    F = _frames_from_tangents(X, Xa, Xb)
    return DiscretePatch(g, F, closed=(True, True), tangents=(as_real(Xa), as_real(Xb)),
                         info={"name": "product-torus", "radii": radii.tolist()})


def patch_from_points(grid: Grid2D, P, closed=(False, False)) -> DiscretePatch:
    """Unitary frames for an arbitrary sampled surface in S^5 (complex
    Gram-Schmidt of the position and its coordinate derivatives).  Used
    for negative controls; the frames need not satisfy any structure
    equation."""
    P = np.asarray(P, float)
    X = as_complex(P)
    X = X / np.linalg.norm(X, axis=-1, keepdims=True)
    P = as_real(X)
    Px, Py = fd.dx(P, grid), fd.dy(P, grid)
    cols = [X, as_complex(Px), as_complex(Py)]
    basis = []
    for v in cols:
        for q in basis:
            v = v - np.sum(np.conj(q) * v, -1)[..., None] * q
        basis.append(v / np.linalg.norm(v, axis=-1, keepdims=True))
    F = np.stack([basis[1], basis[2], basis[0]], -1)
    d = np.linalg.det(F)
    F[..., :, 1] *= np.conj(d)[..., None]
    return DiscretePatch(grid, F, closed=closed, info={"name": "from-points"})


# --------------------------------------------------------------------------
# projections and residuals


@dataclass(frozen=True)
class ProjectiveGrid:
    grid: Grid2D
    coords: np.ndarray  # (nx, ny, 3) unit representatives

    def projectors(self):
        return self.coords[..., :, None] * np.conj(self.coords[..., None, :])

    def fubini_study_metric(self, closed=(False, False)):
        """(E, F, G) of the pulled-back Fubini-Study metric, from
        differences of the projector (1/2)|dP|^2."""
        P = self.projectors()
        g = self.grid
        if all(closed):
            Px = fd.spectral_diff(P, 0, g.nx * g.dx)
            Py = fd.spectral_diff(P, 1, g.ny * g.dy)
        else:
            Px, Py = fd.dx(P, g), fd.dy(P, g)
        ip = lambda a, b: 0.5 * np.real(np.sum(a * np.conj(b), axis=(-2, -1)))
        return ip(Px, Px), ip(Px, Py), ip(Py, Py)


def normalize_projective(Z, tol: float = 1e-8):
    """Unit representatives whose first entry of modulus > tol is real positive."""
    Z = np.asarray(Z, complex)
    Z = Z / np.linalg.norm(Z, axis=-1, keepdims=True)
    idx = np.argmax(np.abs(Z) > tol, axis=-1)
    lead = np.take_along_axis(Z, idx[..., None], axis=-1)
    return Z * (np.conj(lead) / np.abs(lead))


def hopf_project(patch: DiscretePatch) -> ProjectiveGrid:
    return ProjectiveGrid(patch.grid, normalize_projective(patch.positions))


def hopf_metric_residual(patch: DiscretePatch) -> float:
    """Sup difference between the Fubini-Study pullback and the patch metric."""
    proj = hopf_project(patch)
    E1, F1, G1 = proj.fubini_study_metric(patch.closed)
    if patch.is_closed:
        Px, Py, *_ = _derivs(patch)
        E2, F2, G2 = (np.sum(a * b, -1) for a, b in ((Px, Px), (Px, Py), (Py, Py)))
    else:
        E2, F2, G2 = patch.metric()
    return patch.sup_interior(np.stack([E1 - E2, F1 - F2, G1 - G2], -1))


@dataclass(frozen=True)
class LegendrianResiduals:
    contact: float
    symplectic: float
    phase: float

    def max(self):
        return max(self.contact, self.symplectic, self.phase)


def legendrian_residuals(patch: DiscretePatch, margin: int = 2) -> LegendrianResiduals:
    """Sup norms of varpi(e3, de3), varpi(d_x e3, d_y e3) and Im Upsilon(e1, e2, e3)."""
    P = patch.points
    Px, Py, *_ = _derivs(patch)
    w = lambda a, b: np.sum(a * _jvec(b), -1)
    contact = np.maximum(np.abs(w(P, Px)), np.abs(w(P, Py)))
    sym = np.abs(w(Px, Py))
    phase = np.abs(np.linalg.det(patch.frames).imag)
    return LegendrianResiduals(patch.sup_interior(contact, margin),
                               patch.sup_interior(sym, margin),
                               float(np.max(phase)))


def minimality_residual(patch: DiscretePatch) -> float:
    """Sup of |Lap_g X + 2X|: the position of a minimal surface in S^5 is an
    eigenfunction with eigenvalue 2 (second-order stencils)."""
    P = patch.points
    return patch.sup_interior(patch.laplace_beltrami(P) + 2 * P)


# --------------------------------------------------------------------------
# reflection continuation


def face_reflection(face):
    """Point map of the reflection in an anti-special Lagrangian plane or
    a complex plane."""
    if isinstance(face, Lagrangian3Plane):
        return lambda p: reflect_anti_slag(p, face)
    if isinstance(face, ComplexLineCP2):
        return lambda p: reflect_complex(p, face)
    raise TypeError("face must be a Lagrangian3Plane or a ComplexLineCP2")


def _face_projector_normal(face):
    """Real projector onto the orthogonal complement of the face in R^6."""
    B = face.basis if isinstance(face, Lagrangian3Plane) else face.real_basis()
    return np.eye(6) - B.T @ B


def seam_angle(patch: DiscretePatch, seam_nodes, face) -> float:
    """Largest deviation (radians) of the surface from meeting the face
    orthogonally along the seam."""
    P = patch.points
    ii, jj = np.asarray(seam_nodes).T
    Px, Py = patch.position_tangents()
    D, T = (Py, Px) if np.all(jj == jj[0]) else (Px, Py)
    D, T, X = D[ii, jj], T[ii, jj], P[ii, jj]
    T = T / np.linalg.norm(T, axis=1, keepdims=True)
    N = D - np.sum(D * T, 1)[:, None] * T - np.sum(D * X, 1)[:, None] * X
    N = N / np.linalg.norm(N, axis=1, keepdims=True)
    Q = _face_projector_normal(face)
    cos_a = np.linalg.norm(N @ Q.T, axis=1)
    return float(np.max(np.arccos(np.clip(cos_a, 0, 1))))


def reflect_continue(patch: DiscretePatch, label: str, tol: float = 1e-8,
                     angle_tol: float = 1e-3) -> DiscretePatch:
    """Union of the patch and its reflection across the tagged boundary.

    The reflected copy has its parameter order reversed across the seam
    and its e2 flipped, so the union is consistently oriented.
    """
    kind, nodes, face = patch.tags[label]
    r = face_reflection(face)
    P = patch.points
    ii, jj = nodes.T
    off = np.max(np.linalg.norm(r(P[ii, jj]) - P[ii, jj], axis=1))
    if off > tol:
        raise ConstraintError(f"boundary lies {off:.2e} off the face's fixed set")
    angle = seam_angle(patch, nodes, face)
    if angle > angle_tol:
        warnings.warn(f"patch meets the face at {np.degrees(angle):.3f} degrees off orthogonal",
                      SeamOrthogonalityWarning, stacklevel=2)
    Fr = np.stack([as_complex(r(as_real(patch.frames[..., :, k]))) for k in range(3)], -1)
    Fr = _fix_orientation(Fr)
    g = patch.grid
    if np.all(jj == 0):
        refl = Fr[:, :0:-1]
        frames = np.concatenate([refl, patch.frames], axis=1)
        g2 = replace(g, ny=frames.shape[1], y0=g.y0 - (g.ny - 1) * g.dy)
    elif np.all(jj == g.ny - 1):
        refl = Fr[:, -2::-1]
        frames = np.concatenate([patch.frames, refl], axis=1)
        g2 = replace(g, ny=frames.shape[1])
    elif np.all(ii == 0):
        refl = Fr[:0:-1]
        frames = np.concatenate([refl, patch.frames], axis=0)
        g2 = replace(g, nx=frames.shape[0], x0=g.x0 - (g.nx - 1) * g.dx)
    elif np.all(ii == g.nx - 1):
        refl = Fr[-2::-1]
        frames = np.concatenate([patch.frames, refl], axis=0)
        g2 = replace(g, nx=frames.shape[0])
    else:
        raise ValueError("seam must be a full boundary row or column")
    info = dict(patch.info, seam_angle=angle, seam_offset=off, reflected_across=label)
    return DiscretePatch(g2, frames, closed=patch.closed, conformal=patch.conformal,
                         parity=-patch.parity, info=info)


def point_set_distance(A, B) -> float:
    """Symmetric Hausdorff distance between two finite point sets in R^6."""
    from scipy.spatial import cKDTree

    A = np.asarray(A).reshape(-1, 6)
    B = np.asarray(B).reshape(-1, 6)
    da, _ = cKDTree(B).query(A)
    db, _ = cKDTree(A).query(B)
    return float(max(da.max(), db.max()))


def tilted_strip(angle_deg: float = 5.0, ns: int = 64, nt: int = 9, width: float = 0.2):
    """Ruled patch leaving the seam th1 + th2 = 0 at ``angle_deg`` off the
    orthogonal direction (negative control for reflect_continue)."""
    g = Grid2D.box(ns, nt, (0, 2 * np.pi), (0, width), True, False)
    S, T = g.mesh()
    X0 = INV_SQRT3 * np.exp(1j * np.stack([S, -S, 0 * S], -1))
    X0r = as_real(X0)
    conormal = as_real(1j * X0 * np.array([1, 1, -2]))
    conormal /= np.linalg.norm(conormal, axis=-1, keepdims=True)
    plane = anti_slag_seam_plane()
    tangent = as_real(1j * X0 * np.array([1, -1, 0]))
    tangent /= np.linalg.norm(tangent, axis=-1, keepdims=True)
    # unit direction inside the face, orthogonal to the seam curve and the point
    B = plane.basis
    v = np.broadcast_to(B[2], X0r.shape).copy()
    for q in (X0r, tangent):
        v = v - np.sum(v * q, -1)[..., None] * q
    W = v / np.linalg.norm(v, axis=-1, keepdims=True)
    a = np.radians(angle_deg)
    D = np.cos(a) * conormal + np.sin(a) * W
    P = X0r + T[..., None] * D
    P /= np.linalg.norm(P, axis=-1, keepdims=True)
    patch = patch_from_points(g, P, closed=(True, False))
    patch.tags["seam"] = ("anti_slag", np.array([(i, 0) for i in range(ns)]), plane)
    return patch


@dataclass(frozen=True)
class AreaReport:
    area: float
    cone_mass: float | None
    closed: bool


def area_and_bound(patch: DiscretePatch) -> AreaReport:
    """Area by quadrature; for closed surfaces also the mass area/3 of the
    truncated cone over the surface in the unit ball of C^3."""
    area = float(np.sum(patch.area_weights()))
    closed = patch.is_closed or bool(patch.info.get("closed_surface"))
    return AreaReport(area, area / 3 if closed else None, closed)


# --------------------------------------------------------------------------
# comparisons with closed forms


def align_unitary(P, Q):
    """Best U in U(3) with P ~ Q U^T (Procrustes); returns (U, max deviation)."""
    P = np.asarray(P, complex).reshape(-1, 3)
    Q = np.asarray(Q, complex).reshape(-1, 3)
    M = P.T @ np.conj(Q)
    a, _, bh = np.linalg.svd(M)
    U = a @ bh
    return U, float(np.max(np.abs(P - Q @ U.T)))


@dataclass(frozen=True)
class PlaneFit:
    plane: Lagrangian3Plane | None
    distance: float  # sup distance of the points to the fitted 3-plane
    lagrangian_defect: float
    phase: float


def special_lagrangian_fit(patch: DiscretePatch) -> PlaneFit:
    """Fit a real 3-plane through the points of a patch and measure how far
    the points, and the plane itself, are from a special Lagrangian plane."""
    X = patch.points.reshape(-1, 6)
    _, s, vt = np.linalg.svd(X, full_matrices=False)
    B = vt[:3]
    dist = float(np.max(np.linalg.norm(X - (X @ B.T) @ B, axis=1)))
    w = B @ J_MATRIX.T @ B.T
    lag = float(np.max(np.abs(w)))
    if lag > 1e-6:
        return PlaneFit(None, dist, lag, float("nan"))
    # project to an exactly orthonormal Lagrangian basis before classifying
    Z = as_complex(B)
    q, _ = np.linalg.qr(Z.T)
    basis = as_real(q.T)
    L = Lagrangian3Plane(basis)
    # the fitted plane carries no orientation, so the phase is taken mod pi
    phase = classify_lagrangian_plane(L) % np.pi
    return PlaneFit(L, dist, lag, float(min(phase, np.pi - phase)))


from .weierstrass import branched_cover_pullback, preimages  # noqa: E402,F401
