"""Gauss, polar and bipolar maps into the 2-forms of R^6, generating
functions of su(3), and the checks attached to them.

Two-forms are antisymmetric 6x6 matrices, a wedge b = a b^T - b a^T, with
inner product <A, B> = tr(A^T B)/2, so e1 wedge e2 has unit length.  J
acts on 2-forms by A -> J A J^T.  The Kahler 2-vector is
varpi# = sum e_i wedge n_i = -J, of squared length 3.

su(3) is embedded by iota(xi) = -X_xi, X_xi the real form of xi.  With
this constant, <p wedge Jp, iota(xi)> = <xi p, Jp> = -i p^H xi p, and
u_xi = sqrt(2/3) <u_*, iota(xi)> equals G_xi(e3) exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import discrete as fd
from .frames import DiscretePatch, _jvec
from .hermitian import J_MATRIX, as_complex, complex_matrix_to_real

IU = np.triu_indices(6, 1)
VARPI = -J_MATRIX
SQ32 = np.sqrt(1.5)


class TooFewSamplesError(ValueError):
    pass


# --------------------------------------------------------------------------
# 2-forms


def wedge(a, b) -> np.ndarray:
    a, b = np.asarray(a, float), np.asarray(b, float)
    return a[..., :, None] * b[..., None, :] - b[..., :, None] * a[..., None, :]


def pair(A, B) -> np.ndarray:
    return 0.5 * np.sum(A * B, axis=(-2, -1))


@dataclass(frozen=True)
class Wedge2R6:
    """A 2-form with its 15 components in the basis d_i wedge d_j, i < j."""

    components: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.components, float)
        if c.shape != (15,):
            raise ValueError("a 2-form on R^6 has 15 components")
        object.__setattr__(self, "components", c)

    @classmethod
    def from_matrix(cls, A) -> "Wedge2R6":
        A = np.asarray(A, float)
        if np.max(np.abs(A + A.T)) > 1e-12:
            raise ValueError("matrix is not antisymmetric")
        return cls(A[IU])

    @property
    def matrix(self) -> np.ndarray:
        A = np.zeros((6, 6))
        A[IU] = self.components
        return A - A.T

    def __add__(self, other):
        return Wedge2R6(self.components + other.components)

    def norm(self) -> float:
        return float(np.linalg.norm(self.components))


def to_components(A) -> np.ndarray:
    """(..., 6, 6) -> (..., 15)."""
    return np.asarray(A)[..., IU[0], IU[1]]


def j_action(A) -> np.ndarray:
    return J_MATRIX @ A @ J_MATRIX.T


def j_eigenspace_split(xi):
    """(trace part along varpi#, W^8 part, Lambda^6_- part) as Wedge2R6."""
    A = xi.matrix if isinstance(xi, Wedge2R6) else np.asarray(xi, float)
    JA = j_action(A)
    plus, minus = 0.5 * (A + JA), 0.5 * (A - JA)
    trace = pair(A, VARPI) / pair(VARPI, VARPI) * VARPI
    return (Wedge2R6.from_matrix(trace), Wedge2R6.from_matrix(plus - trace),
            Wedge2R6.from_matrix(minus))


def j_eigenspace_dims(tol: float = 1e-12):
    """Dimensions of the +1 and -1 eigenspaces of the involution on a basis."""
    basis = np.eye(15)
    M = np.array([to_components(j_action(Wedge2R6(b).matrix)) for b in basis]).T
    ev = np.linalg.eigvalsh(0.5 * (M + M.T))
    return int(np.sum(np.abs(ev - 1) < tol)), int(np.sum(np.abs(ev + 1) < tol))


def iota(xi) -> np.ndarray:
    """su(3) -> W^8 as an antisymmetric 6x6 matrix."""
    xi = np.asarray(xi, complex)
    if np.max(np.abs(xi + xi.conj().T)) > 1e-12 or abs(np.trace(xi)) > 1e-12:
        raise ValueError("xi is not in su(3)")
    return -complex_matrix_to_real(xi)


def su3_basis() -> np.ndarray:
    """i times the Gell-Mann matrices."""
    s3 = 1 / np.sqrt(3)
    lam = np.zeros((8, 3, 3), complex)
    lam[0][0, 1] = lam[0][1, 0] = 1
    lam[1][0, 1], lam[1][1, 0] = -1j, 1j
    lam[2][0, 0], lam[2][1, 1] = 1, -1
    lam[3][0, 2] = lam[3][2, 0] = 1
    lam[4][0, 2], lam[4][2, 0] = -1j, 1j
    lam[5][1, 2] = lam[5][2, 1] = 1
    lam[6][1, 2], lam[6][2, 1] = -1j, 1j
    lam[7] = s3 * np.diag([1, 1, -2])
    return 1j * lam


def generating_function(xi, p) -> np.ndarray:
    """G_xi(p) = <xi p, J p> = -i p^H xi p for p in S^5 (RealVec6 or C^3)."""
    xi = np.asarray(xi, complex)
    if np.max(np.abs(xi + xi.conj().T)) > 1e-12 or abs(np.trace(xi)) > 1e-12:
        raise ValueError("xi is not in su(3)")
    p = np.asarray(p)
    z = p if np.iscomplexobj(p) else as_complex(p)
    return np.real(-1j * np.einsum("...i,ij,...j->...", np.conj(z), xi, z))


# --------------------------------------------------------------------------
# maps of a patch


def _frame_vectors(patch: DiscretePatch):
    e = [patch.frame_field(k) for k in range(3)]
    return e, [_jvec(v) for v in e]


def gauss_map(patch: DiscretePatch) -> np.ndarray:
    """u* = e1 wedge e2, as (nx, ny, 6, 6)."""
    e, _ = _frame_vectors(patch)
    return wedge(e[0], e[1])


def polar_map(patch: DiscretePatch) -> np.ndarray:
    """u*_+ = (e1 wedge e2 + n1 wedge n2)/sqrt 2, a unit field in W^8."""
    e, n = _frame_vectors(patch)
    return (wedge(e[0], e[1]) + wedge(n[0], n[1])) / np.sqrt(2)


def polar_minus(patch: DiscretePatch) -> np.ndarray:
    """u*_- = (e1 wedge e2 - n1 wedge n2)/sqrt 2, a linear image of the position."""
    e, n = _frame_vectors(patch)
    return (wedge(e[0], e[1]) - wedge(n[0], n[1])) / np.sqrt(2)


def bipolar_map(patch: DiscretePatch) -> np.ndarray:
    """u_* = sqrt(3/2) (e3 wedge n3 - varpi#/3)."""
    e, n = _frame_vectors(patch)
    return SQ32 * (wedge(e[2], n[2]) - VARPI / 3)


@dataclass(frozen=True)
class MapReport:
    """Identity residuals of a map of a patch (sup over interior nodes)."""

    name: str
    unit_defect: float
    factor_residual: float  # |measured factor - expected factor|
    conformal_defect: float  # |g_phi - factor g| relative
    laplacian_residual: float | None  # |Lap phi + lam phi|
    factor_mean: float
    extra: dict


def _field_derivs(patch: DiscretePatch, F):
    g = patch.grid
    if patch.is_closed:
        return (fd.spectral_diff(F, 0, g.nx * g.dx), fd.spectral_diff(F, 1, g.ny * g.dy))
    return fd.dx(F, g), fd.dy(F, g)


def _patch_metric(patch: DiscretePatch):
    g = patch.grid
    if patch.tangents is not None or patch.is_closed:
        return patch.metric(exact=True)
    return patch.metric()


def _uniform(patch: DiscretePatch) -> bool:
    return patch.weights is None


def pullback_factor(patch: DiscretePatch, field: np.ndarray):
    """Conformal factor f with phi^* <,> ~ f g, and the sup-relative
    defect of the proportionality.  ``field`` is (nx, ny, 6, 6) or (nx, ny, m)."""
    F = field.reshape(field.shape[:2] + (-1,))
    Fx, Fy = _field_derivs(patch, F)
    scale = 0.5 if field.ndim == 4 else 1.0  # 2-form inner product
    e = scale * np.sum(Fx * Fx, -1)
    f_ = scale * np.sum(Fx * Fy, -1)
    g_ = scale * np.sum(Fy * Fy, -1)
    E, Fm, G = _patch_metric(patch)
    det = E * G - Fm * Fm
    factor = 0.5 * (G * e - 2 * Fm * f_ + E * g_) / det
    defect = np.sqrt((e - factor * E) ** 2 + 2 * (f_ - factor * Fm) ** 2 + (g_ - factor * G) ** 2)
    defect = defect / np.sqrt(E**2 + 2 * Fm**2 + G**2)
    return factor, defect


def _curvature(patch: DiscretePatch, K):
    if K is not None:
        return np.broadcast_to(np.asarray(K, float), patch.grid.shape)
    if "K" in patch.info:
        return np.broadcast_to(np.asarray(patch.info["K"], float), patch.grid.shape)
    return patch.curvature()


def _laplacian_components(patch: DiscretePatch, field):
    comp = to_components(field)
    return patch.laplace_beltrami(comp), comp


def _report(name, patch, field, expected_factor, eigen, margin, unit=True):
    factor, defect = pullback_factor(patch, field)
    comp = to_components(field)
    unit_defect = float(np.max(np.abs(np.linalg.norm(comp, axis=-1) - 1))) if unit else 0.0
    lap = None
    if _uniform(patch) and eigen is not None:
        L = patch.laplace_beltrami(comp)
        lap = patch.sup_interior(L + eigen[..., None] * comp, margin)
    m = patch.interior(margin)
    return MapReport(name, unit_defect, patch.sup_interior(factor - expected_factor, margin),
                     patch.sup_interior(defect, margin), lap, float(np.mean(factor[m])), {})


def gauss_map_report(patch: DiscretePatch, K=None, margin: int = 2) -> MapReport:
    """Factor of du* . du* against 2 - K."""
    K = _curvature(patch, K)
    return _report("gauss", patch, gauss_map(patch), 2 - K, None, margin)


def polar_map_report(patch: DiscretePatch, K=None, margin: int = 2) -> MapReport:
    """Factor 3 - 2K, Lap u*_+ = -2(3 - 2K) u*_+, and membership in W^8."""
    K = _curvature(patch, K)
    up = polar_map(patch)
    rep = _report("polar", patch, up, 3 - 2 * K, 2 * (3 - 2 * K), margin)
    trace = float(np.max(np.abs(pair(up, VARPI))))
    jdef = float(np.max(np.abs(j_action(up) - up)))
    um = polar_minus(patch)
    minus_lap = None
    if _uniform(patch):
        comp = to_components(um)
        minus_lap = patch.sup_interior(patch.laplace_beltrami(comp) + 2 * comp, margin)
    rep.extra.update(trace=trace, j_defect=jdef, minus_laplacian=minus_lap)
    return rep


def bipolar_map_report(patch: DiscretePatch, margin: int = 2) -> MapReport:
    """Factor 3 independent of K and Lap u_* = -6 u_*."""
    ub = bipolar_map(patch)
    six = np.full(patch.grid.shape, 6.0)
    return _report("bipolar", patch, ub, 3.0, six, margin)


# --------------------------------------------------------------------------
# Killing fields and projection lengths


def killing_values(patch: DiscretePatch, xis=None) -> np.ndarray:
    """u_xi = G_xi(e3) at every node, one row per xi."""
    xis = su3_basis() if xis is None else xis
    z = patch.positions.reshape(-1, 3)
    return np.array([generating_function(x, z) for x in xis])


def bipolar_pairing(patch: DiscretePatch, xi) -> np.ndarray:
    """sqrt(2/3) <u_*, iota(xi)> at every node."""
    return np.sqrt(2 / 3) * pair(bipolar_map(patch), iota(xi))


def killing_jacobi_dim(patch: DiscretePatch, threshold: float = 1e-8, min_samples: int = 200) -> int:
    """Rank of the 8 x nodes matrix of u_xi over an su(3) basis."""
    if patch.grid.nx * patch.grid.ny < min_samples:
        raise TooFewSamplesError(f"need at least {min_samples} nodes")
    s = np.linalg.svd(killing_values(patch), compute_uv=False)
    return int(np.sum(s > threshold * s[0]))


def wedge_pairing(v, vp):
    """(<v' wedge Jv', v wedge Jv>, <v, v'>^2 + <Jv, v'>^2)."""
    v, vp = np.asarray(v, float), np.asarray(vp, float)
    lhs = pair(wedge(vp, _jvec(vp)), wedge(v, _jvec(v)))
    rhs = np.sum(v * vp, -1) ** 2 + np.sum(_jvec(v) * vp, -1) ** 2
    return lhs, rhs


@dataclass(frozen=True)
class ProjectionLengthReport:
    identity_defect: float  # two evaluations of u_v
    laplacian_residual: float | None  # |Lap u_v + 6 u_v - 2|
    mean_value: float | None  # integral of (u_v - 1/3)
    u: np.ndarray


def _closed_surface(patch: DiscretePatch) -> bool:
    return patch.is_closed or bool(patch.info.get("closed_surface"))


def projection_length_identity(patch: DiscretePatch, v, margin: int = 2) -> ProjectionLengthReport:
    """u_v = <e3, v>^2 + <J e3, v>^2 with Lap u_v = -6 u_v + 2 and mean 1/3.

    The Laplacian part needs a uniform grid; the mean value part needs a
    closed surface.  Skipped parts are reported as None.
    """
    v = np.asarray(v, float)
    v = v / np.linalg.norm(v)
    e3 = patch.points
    u = np.sum(e3 * v, -1) ** 2 + np.sum(_jvec(e3) * v, -1) ** 2
    u2, _ = wedge_pairing(v, e3)
    lap = None
    if _uniform(patch):
        lap = patch.sup_interior(patch.laplace_beltrami(u) + 6 * u - 2, margin)
    mean = None
    if _closed_surface(patch):
        w = patch.area_weights()
        mean = float(np.sum((u - 1 / 3) * w))
    return ProjectionLengthReport(float(np.max(np.abs(u - u2))), lap, mean, u)


# --------------------------------------------------------------------------
# distance bound


DISTANCE_BOUND = float(np.arccos(1 / np.sqrt(3)))


def fs_distance(p, q) -> np.ndarray:
    p, q = np.asarray(p, complex), np.asarray(q, complex)
    c = np.abs(np.sum(np.conj(p) * q, -1)) / (np.linalg.norm(p, axis=-1) * np.linalg.norm(q, axis=-1))
    return np.arccos(np.clip(c, 0.0, 1.0))


def mesh_diameter(patch: DiscretePatch) -> float:
    """Largest Fubini-Study distance between grid neighbours."""
    Z = patch.positions
    d = [fs_distance(Z[1:], Z[:-1]).max(), fs_distance(Z[:, 1:], Z[:, :-1]).max()]
    if patch.closed[0]:
        d.append(fs_distance(Z[0], Z[-1]).max())
    if patch.closed[1]:
        d.append(fs_distance(Z[:, 0], Z[:, -1]).max())
    return float(max(d))


@dataclass(frozen=True)
class DistanceReport:
    max_distance: float
    bound: float
    allowance: float

    @property
    def holds(self) -> bool:
        return self.max_distance <= self.bound + self.allowance


def random_cp2_points(n: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    z = rng.normal(size=(n, 3)) + 1j * rng.normal(size=(n, 3))
    return z / np.linalg.norm(z, axis=-1, keepdims=True)


def distance_bound_check(patch: DiscretePatch, n_probes: int = 10_000, seed: int = 0,
                         probes=None) -> DistanceReport:
    """Max over probes q of min over nodes of arccos |<p, q>|."""
    Q = random_cp2_points(n_probes, seed) if probes is None else np.asarray(probes, complex)
    Z = patch.positions.reshape(-1, 3)
    best = np.zeros(len(Q))
    for i in range(0, len(Q), 1024):
        best[i:i + 1024] = np.abs(np.conj(Q[i:i + 1024]) @ Z.T).max(axis=1)
    dist = np.arccos(np.clip(best, 0.0, 1.0))
    return DistanceReport(float(dist.max()), DISTANCE_BOUND, 2 * mesh_diameter(patch))
