import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from slaglab.hermitian import (
    ComplexLineCP2,
    ConstraintError,
    IsotropicPlane2,
    J_MATRIX,
    Lagrangian3Plane,
    angle_between_complex_lines,
    apply_J,
    as_complex,
    as_real,
    basis_vector as e,
    classify_lagrangian_plane,
    hol_volume,
    kahler_form,
    reflect_anti_slag,
    reflect_complex,
    slag_extension,
    wedge_angle_in_lagrangian,
)

rng = np.random.default_rng(7)


def random_unitary(rng, n=3):
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / abs(np.diag(r)))


def random_isotropic(rng):
    U = random_unitary(rng)
    return IsotropicPlane2(as_real(U[:, :2].T))


def test_apply_J_examples():
    assert np.array_equal(apply_J(e("x1")), e("y1"))
    v = rng.normal(size=6)
    assert np.allclose(apply_J(apply_J(v)), -v, atol=1e-14)
    assert abs(np.dot(v, apply_J(v))) < 1e-14
    assert np.allclose(J_MATRIX @ J_MATRIX, -np.eye(6), atol=1e-14)


def test_kahler_form_examples():
    assert kahler_form(e("x1"), e("y1")) == 1.0
    assert kahler_form(e("x1"), e("x2")) == 0.0
    v, w = rng.normal(size=(2, 1000, 6))
    assert np.max(abs(kahler_form(v, w) + kahler_form(w, v))) < 1e-12
    assert np.max(abs(np.sum(v * w, -1) - kahler_form(v, apply_J(w)))) < 1e-12
    assert np.max(abs(kahler_form(v, apply_J(v)) - np.sum(v * v, -1))) < 1e-12


def test_hol_volume_examples():
    assert hol_volume(e("x1"), e("x2"), e("x3")) == pytest.approx(1)
    assert hol_volume(e("y1"), e("y2"), e("y3")) == pytest.approx(-1j)
    v, w = rng.normal(size=(2, 6))
    assert abs(hol_volume(v, v, w)) < 1e-14
    # complex multilinearity
    phase = np.exp(0.7j)
    u = rng.normal(size=6)
    scaled = as_real(phase * as_complex(v))
    assert hol_volume(scaled, w, u) == pytest.approx(phase * hol_volume(v, w, u))


def test_classify_examples():
    assert classify_lagrangian_plane(Lagrangian3Plane(np.eye(6)[:3])) == pytest.approx(0)
    assert classify_lagrangian_plane(Lagrangian3Plane(np.eye(6)[3:])) == pytest.approx(np.pi / 2)
    alpha = 0.9
    D = np.diag([np.exp(1j * alpha), 1, 1])
    L = Lagrangian3Plane(as_real((D @ np.eye(3)).T))
    assert classify_lagrangian_plane(L) == pytest.approx(np.mod(-alpha, 2 * np.pi))
    with pytest.raises(ConstraintError):
        Lagrangian3Plane(np.array([e("x1"), e("y1"), e("x2")]))


def test_classify_invariant_under_so3():
    U = random_unitary(rng)
    L = Lagrangian3Plane(as_real(U.T))
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    if np.linalg.det(q) < 0:
        q[:, 0] *= -1
    L2 = Lagrangian3Plane(q.T @ L.basis)
    assert abs(classify_lagrangian_plane(L) - classify_lagrangian_plane(L2)) < 1e-12


def test_slag_extension_examples():
    L = slag_extension(IsotropicPlane2(np.array([e("y1"), e("y2")])))
    assert np.allclose(L.basis, [e("y1"), e("y2"), -e("x3")])
    L = slag_extension(IsotropicPlane2(np.array([e("x1"), e("x2")])))
    assert np.allclose(L.basis, np.eye(6)[:3])
    with pytest.raises(ConstraintError):
        IsotropicPlane2(np.array([e("x1"), 2 * e("x1")]))
    with pytest.raises(ConstraintError):
        IsotropicPlane2(np.array([e("x1"), e("y1")]))


def test_slag_extension_random_planes():
    r = np.random.default_rng(11)
    for _ in range(1000):
        sigma = random_isotropic(r)
        L = slag_extension(sigma)
        assert np.allclose(L.basis[:2], sigma.basis, atol=1e-12)
        assert abs(L.volume() - 1) < 1e-12


def test_reflect_anti_slag():
    Lp = Lagrangian3Plane(np.eye(6)[3:])
    p = rng.normal(size=6)
    assert np.allclose(reflect_anti_slag(p, Lp), np.r_[-p[:3], p[3:]])
    q = np.r_[0, 0, 0, rng.normal(size=3)]
    assert np.allclose(reflect_anti_slag(q, Lp), q)
    with pytest.raises(ConstraintError):
        reflect_anti_slag(p, Lagrangian3Plane(np.eye(6)[:3]))
    # moved plane: involution, isometry, fixes the plane
    U = random_unitary(rng)
    U = U / np.linalg.det(U) ** (1 / 3)
    L = Lagrangian3Plane(as_real((U @ (1j * np.eye(3))).T))
    p = rng.normal(size=(50, 6))
    p /= np.linalg.norm(p, axis=1, keepdims=True)
    rp = reflect_anti_slag(p, L)
    assert np.allclose(reflect_anti_slag(rp, L), p, atol=1e-13)
    assert np.max(abs(np.linalg.norm(rp, axis=1) - 1)) < 1e-13
    assert np.allclose(reflect_anti_slag(L.basis, L), L.basis, atol=1e-13)


def test_reflect_complex():
    P = ComplexLineCP2(np.array([[1, 0, 0], [0, 1, 0]]))
    z = rng.normal(size=3) + 1j * rng.normal(size=3)
    out = as_complex(reflect_complex(as_real(z), P))
    assert np.allclose(out, [z[0], z[1], -z[2]])
    z[2] = 0
    assert np.allclose(as_complex(reflect_complex(as_real(z), P)), z)
    P = ComplexLineCP2(rng.normal(size=(2, 3)) + 1j * rng.normal(size=(2, 3)))
    p = rng.normal(size=6)
    assert np.allclose(reflect_complex(apply_J(p), P), apply_J(reflect_complex(p, P)))
    assert np.allclose(reflect_complex(reflect_complex(p, P), P), p)
    assert abs(np.linalg.norm(reflect_complex(p, P)) - np.linalg.norm(p)) < 1e-13


def test_complex_line_is_J_invariant():
    P = ComplexLineCP2(rng.normal(size=(2, 3)) + 1j * rng.normal(size=(2, 3)))
    B = P.real_basis()
    proj = B.T @ B
    assert np.allclose(proj @ J_MATRIX @ B.T, J_MATRIX @ B.T, atol=1e-12)


@pytest.mark.parametrize("k", [3, 4, 7, 12])
def test_angle_between_complex_lines(k):
    eps = np.exp(2j * np.pi / k)
    P1 = ComplexLineCP2.from_equation([1, -1, 0])
    P2 = ComplexLineCP2.from_equation([1, -eps, 0])
    assert angle_between_complex_lines(P1, P2, at=np.array([0, 0, 1.0 + 0j])) == pytest.approx(
        np.pi / k, abs=1e-12
    )


def test_angle_between_complex_lines_other():
    P1 = ComplexLineCP2.from_equation([1, -1, 0])
    assert angle_between_complex_lines(P1, P1, at=np.array([0, 0, 1.0 + 0j])) == 0.0
    P3 = ComplexLineCP2.from_equation([0, 1, -1])
    assert angle_between_complex_lines(P1, P3) == pytest.approx(np.pi / 3)
    with pytest.raises(ConstraintError):
        angle_between_complex_lines(P1, P3, at=np.array([1, 0, 0], complex))


def test_wedge_angle_model():
    # L = E1 ^ E2 in C^2, second line spanned over C by cos(phi) E1 + sin(phi) E2
    for phi in (np.pi / 3, np.pi / 2, 0.4):
        Lb = np.array([[1.0, 0, 0, 0], [0, 1.0, 0, 0]])
        a = wedge_angle_in_lagrangian(np.array([[1, 0]]), np.array([[np.cos(phi), np.sin(phi)]]), Lb)
        assert a == pytest.approx(phi)
    with pytest.raises(ConstraintError):
        wedge_angle_in_lagrangian(np.array([[1, 0], [0, 1]]), np.array([[1, 0]]), Lb)


def test_wedge_angle_invariant_under_unitary_motion():
    L = Lagrangian3Plane(np.eye(6)[:3])
    P1 = ComplexLineCP2(np.array([[1, 0, 0], [0, 1j, 0.3]]))
    P2 = ComplexLineCP2(np.array([[0.6, 0.8, 0], [0, 0.2, 1j]]))
    ref = wedge_angle_in_lagrangian(P1, P2, L)
    U = random_unitary(rng)
    moved = wedge_angle_in_lagrangian(
        ComplexLineCP2((U @ P1.span.T).T),
        ComplexLineCP2((U @ P2.span.T).T),
        Lagrangian3Plane(as_real((U @ np.eye(3)).T)),
    )
    assert moved == pytest.approx(ref, abs=1e-10)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=6, max_size=6))
def test_reflections_preserve_sphere(vals):
    p = np.array(vals)
    if np.linalg.norm(p) < 1e-3:
        return
    p = p / np.linalg.norm(p)
    L = Lagrangian3Plane(np.eye(6)[3:])
    P = ComplexLineCP2.from_equation([1, -1, 0])
    assert abs(np.linalg.norm(reflect_anti_slag(p, L)) - 1) < 1e-13
    assert abs(np.linalg.norm(reflect_complex(p, P)) - 1) < 1e-13
