"""Linear algebra of C^3 = R^6.

Real vectors are stored as length-6 arrays ``(x1, x2, x3, y1, y2, y3)``
with ``z_k = x_k + i y_k``.  Complex 3-vectors are used internally
wherever the formulas are shorter that way.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TOL = 1e-12


class ConstraintError(ValueError):
    """A plane or point violates a defining invariant."""


def as_complex(v) -> np.ndarray:
    """(..., 6) real -> (..., 3) complex."""
    v = np.asarray(v, dtype=float)
    return v[..., :3] + 1j * v[..., 3:]


def as_real(z) -> np.ndarray:
    """(..., 3) complex -> (..., 6) real."""
    z = np.asarray(z, dtype=complex)
    return np.concatenate([z.real, z.imag], axis=-1)


def basis_vector(name: str) -> np.ndarray:
    """``'x1'`` .. ``'y3'`` -> the coordinate vector of R^6."""
    idx = {"x": 0, "y": 3}[name[0]] + int(name[1]) - 1
    e = np.zeros(6)
    e[idx] = 1.0
    return e


def apply_J(v) -> np.ndarray:
    """J(x, y) = (-y, x)."""
    v = np.asarray(v, dtype=float)
    return np.concatenate([-v[..., 3:], v[..., :3]], axis=-1)


J_MATRIX = np.block([[np.zeros((3, 3)), -np.eye(3)], [np.eye(3), np.zeros((3, 3))]])


def kahler_form(v, w) -> float:
    """sum_k dx^k ^ dy^k evaluated on (v, w)."""
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    return np.sum(v[..., :3] * w[..., 3:] - v[..., 3:] * w[..., :3], axis=-1)


def metric(v, w) -> float:
    return np.sum(np.asarray(v, float) * np.asarray(w, float), axis=-1)


def hol_volume(v1, v2, v3) -> complex:
    """dz^1 ^ dz^2 ^ dz^3 on three real vectors (complex determinant)."""
    m = np.stack([as_complex(v1), as_complex(v2), as_complex(v3)], axis=-1)
    return np.linalg.det(m)


def complex_matrix_to_real(m) -> np.ndarray:
    """3x3 complex (acting on C^3) -> 6x6 real (acting on R^6)."""
    m = np.asarray(m, dtype=complex)
    return np.block([[m.real, -m.imag], [m.imag, m.real]])


def _mgs(vectors, what: str) -> np.ndarray:
    out = []
    for v in vectors:
        v = np.array(v, dtype=float)
        scale = max(np.linalg.norm(v), 1.0)
        for q in out:
            v = v - np.dot(q, v) * q
        n = np.linalg.norm(v)
        if n < 1e-10 * scale:
            raise ConstraintError(f"{what}: basis vectors are not independent")
        out.append(v / n)
    return np.array(out)


@dataclass(frozen=True)
class IsotropicPlane2:
    """Oriented real 2-plane on which the Kahler form vanishes."""

    basis: np.ndarray

    def __post_init__(self):
        b = _mgs(np.asarray(self.basis, float).reshape(2, 6), "isotropic plane")
        if abs(kahler_form(b[0], b[1])) > TOL:
            raise ConstraintError(
                f"isotropic plane: kahler form = {kahler_form(b[0], b[1]):.3e}"
            )
        object.__setattr__(self, "basis", b)


@dataclass(frozen=True)
class Lagrangian3Plane:
    """Oriented Lagrangian 3-plane; orientation is the order of ``basis``
    times ``orientation``."""

    basis: np.ndarray
    orientation: int = 1

    def __post_init__(self):
        b = _mgs(np.asarray(self.basis, float).reshape(3, 6), "lagrangian plane")
        worst = max(abs(kahler_form(b[i], b[j])) for i in range(3) for j in range(i + 1, 3))
        if worst > TOL:
            raise ConstraintError(f"lagrangian plane: kahler form residual {worst:.3e}")
        if self.orientation not in (1, -1):
            raise ConstraintError("orientation must be +1 or -1")
        object.__setattr__(self, "basis", b)

    @property
    def oriented_basis(self) -> np.ndarray:
        b = self.basis.copy()
        b[0] *= self.orientation
        return b

    def volume(self) -> complex:
        b = self.oriented_basis
        return hol_volume(b[0], b[1], b[2])

    def unitary(self) -> np.ndarray:
        """Columns are the oriented basis as complex vectors (a U(3) matrix)."""
        return as_complex(self.oriented_basis).T

    def projector(self) -> np.ndarray:
        return self.basis.T @ self.basis


@dataclass(frozen=True)
class ComplexLineCP2:
    """A complex 2-plane in C^3 (a projective line), given by two complex
    spanning vectors.  Stored with a Hermitian-orthonormal basis."""

    span: np.ndarray
    normal: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        s = np.asarray(self.span, dtype=complex).reshape(2, 3)
        q0 = s[0] / np.linalg.norm(s[0]) if np.linalg.norm(s[0]) > TOL else None
        if q0 is None:
            raise ConstraintError("complex line: zero spanning vector")
        v = s[1] - np.vdot(q0, s[1]) * q0
        nv = np.linalg.norm(v)
        if nv < 1e-10 * max(1.0, np.linalg.norm(s[1])):
            raise ConstraintError("complex line: spanning pair is dependent")
        q1 = v / nv
        n = np.conj(np.cross(q0, q1))
        object.__setattr__(self, "span", np.array([q0, q1]))
        object.__setattr__(self, "normal", n / np.linalg.norm(n))

    @classmethod
    def from_normal(cls, normal) -> "ComplexLineCP2":
        """The plane {z : <normal, z>_herm = 0}."""
        n = np.asarray(normal, dtype=complex)
        n = n / np.linalg.norm(n)
        # any vector not parallel to n
        trial = np.eye(3)[np.argmin(np.abs(n))]
        a = trial - np.vdot(n, trial) * n
        b = np.conj(np.cross(n, a))  # orthogonal to n and a
        return cls(np.array([a, b]))

    @classmethod
    def from_equation(cls, coeffs) -> "ComplexLineCP2":
        """The plane {z : c1 z1 + c2 z2 + c3 z3 = 0}."""
        return cls.from_normal(np.conj(np.asarray(coeffs, dtype=complex)))

    def contains(self, z, tol: float = 1e-10) -> bool:
        z = np.asarray(z, dtype=complex)
        return abs(np.vdot(self.normal, z)) <= tol * max(1.0, np.linalg.norm(z))

    def real_basis(self) -> np.ndarray:
        """Orthonormal basis (4, 6) of the underlying real 4-plane."""
        q = self.span
        return np.array([as_real(q[0]), as_real(1j * q[0]), as_real(q[1]), as_real(1j * q[1])])


def classify_lagrangian_plane(L: Lagrangian3Plane) -> float:
    """Phase theta in [0, 2pi) with Upsilon(b1, b2, b3) = exp(-i theta)."""
    vol = L.volume()
    if abs(abs(vol) - 1.0) > 1e-9:
        raise ConstraintError(f"not a Lagrangian frame: |Upsilon| = {abs(vol):.6g}")
    return float(np.mod(-np.angle(vol), 2 * np.pi))


def slag_extension(sigma: IsotropicPlane2) -> Lagrangian3Plane:
    """The special Lagrangian 3-plane containing sigma."""
    q1, q2 = as_complex(sigma.basis)
    # conj(q1 x q2) is hermitian-orthogonal to q1, q2 and makes det = |q1 x q2|^2 / |.| = 1
    q3 = np.conj(np.cross(q1, q2))
    if np.linalg.norm(q3) < 1e-10:
        raise ConstraintError("degenerate isotropic plane")
    q3 = q3 / np.linalg.norm(q3)
    return Lagrangian3Plane(np.array([sigma.basis[0], sigma.basis[1], as_real(q3)]))


def is_anti_special(L: Lagrangian3Plane, tol: float = 1e-9) -> bool:
    """Unoriented test Re(Upsilon) = 0, i.e. phase pi/2 up to orientation."""
    return abs(L.volume().real) <= tol


def reflect_anti_slag(p, L: Lagrangian3Plane) -> np.ndarray:
    """Geodesic reflection across an anti-special Lagrangian plane.

    Conjugates the standard map (x, y) -> (-x, y) by the unitary sending
    {x = 0} onto L.  Works on (..., 6) arrays.
    """
    if not is_anti_special(L):
        raise ConstraintError(
            f"reflection plane has phase {classify_lagrangian_plane(L):.6f}, expected pi/2"
        )
    U = -1j * as_complex(L.basis).T  # maps i*e_k to the k-th basis vector
    z = as_complex(p)
    w = np.einsum("ij,...j->...i", U.conj().T, z)
    w = -np.conj(w)
    return as_real(np.einsum("ij,...j->...i", U, w))


def reflect_anti_slag_matrix(L: Lagrangian3Plane) -> np.ndarray:
    """The same reflection as a real 6x6 matrix."""
    return np.stack([reflect_anti_slag(e, L) for e in np.eye(6)], axis=-1)


def reflect_complex(p, plane: ComplexLineCP2) -> np.ndarray:
    """Negate the component hermitian-orthogonal to the complex plane."""
    z = as_complex(p)
    n = plane.normal
    coef = np.einsum("j,...j->...", n.conj(), z)
    return as_real(z - 2 * coef[..., None] * n)


def complex_reflection_matrix(plane: ComplexLineCP2) -> np.ndarray:
    n = plane.normal
    return np.eye(3) - 2 * np.outer(n, n.conj())


def angle_between_complex_lines(P1: ComplexLineCP2, P2: ComplexLineCP2, at=None) -> float:
    """Angle in [0, pi/2] between two projective lines at a common point.

    cos(angle) is the modulus of the hermitian product of the unit normals
    inside the orthogonal complement of the point; cos^2 is the Jacobian of
    the projection between the two planes.
    """
    if at is None:
        at = np.conj(np.cross(P1.normal, P2.normal))
        if np.linalg.norm(at) < 1e-12:
            return 0.0
    q = np.asarray(at, dtype=complex)
    if q.shape == (6,) and not np.iscomplexobj(at):
        q = as_complex(q)
    q = q / np.linalg.norm(q)
    if not (P1.contains(q, 1e-9) and P2.contains(q, 1e-9)):
        raise ConstraintError("point does not lie on both lines")
    c = abs(np.vdot(P1.normal, P2.normal))
    return float(np.arccos(np.clip(c, 0.0, 1.0)))


def _real_span_complex(vectors) -> np.ndarray:
    """Orthonormal real basis of the complex span of the given complex vectors."""
    vs = []
    for v in np.atleast_2d(np.asarray(vectors, dtype=complex)):
        vs.append(np.concatenate([v.real, v.imag]))
        vs.append(np.concatenate([-v.imag, v.real]))
    q, r = np.linalg.qr(np.array(vs).T)
    keep = np.abs(np.diag(r)) > 1e-10
    return q[:, keep]


def wedge_angle_in_lagrangian(P1, P2, L) -> float:
    """Angle between the real lines L ∩ P1 and L ∩ P2 inside L.

    ``P1``, ``P2`` are complex subspaces of C^m given by complex spanning
    vectors (rows), ``L`` a real orthonormal basis (rows) of a Lagrangian
    subspace of R^{2m}.  Works for m = 2 (the wedge model) and m = 3.
    """
    Lb = np.asarray(L.basis if isinstance(L, Lagrangian3Plane) else L, dtype=float)
    directions = []
    for P in (P1, P2):
        span = P.span if isinstance(P, ComplexLineCP2) else P
        A = _real_span_complex(span)
        s_u, s, s_vt = np.linalg.svd(Lb @ A)
        hits = np.sum(s > 1 - 1e-9)
        if hits != 1:
            raise ConstraintError(f"intersection with L has dimension {hits}, expected 1")
        directions.append(Lb.T @ s_u[:, 0])
    c = abs(np.dot(directions[0], directions[1]))
    return float(np.arccos(np.clip(c, 0.0, 1.0)))
