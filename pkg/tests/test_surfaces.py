import warnings

import numpy as np
import pytest

from slaglab.discrete import Grid2D
from slaglab.frames import DiscretePatch, classify_curve, lattice_curve
from slaglab.hermitian import ConstraintError, Lagrangian3Plane
from slaglab.surfaces import (
    SeamOrthogonalityWarning,
    area_and_bound,
    face_reflection,
    geodesic_hemisphere,
    geodesic_sphere,
    hexagonal_torus,
    hexagonal_torus_strip,
    hopf_metric_residual,
    hopf_project,
    legendrian_residuals,
    minimality_residual,
    patch_from_points,
    point_set_distance,
    product_torus,
    reflect_continue,
    tilted_strip,
)
from slaglab.weierstrass import (
    branch_point_deviation,
    branched_cover,
    branched_cover_pullback,
    invariants,
    local_model_coefficient,
    preimages,
    wp,
)

OMEGA = np.exp(2j * np.pi / 3)


# -- hexagonal torus ----------------------------------------------------------


def test_hex_torus_area_and_cone_mass():
    rep = area_and_bound(hexagonal_torus(64))
    assert rep.area == pytest.approx(4 * np.pi**2 / np.sqrt(3), abs=1e-6)
    assert rep.cone_mass == pytest.approx(rep.area / 3)


def test_hex_torus_lies_on_cubic_and_is_flat():
    h = hexagonal_torus(64)
    z = h.positions
    assert np.max(np.abs(np.prod(z, axis=-1).imag)) < 1e-14
    assert np.max(np.abs(h.curvature())) < 1e-8
    assert legendrian_residuals(h).max() <= 1e-10


def test_hex_torus_minimality():
    assert minimality_residual(hexagonal_torus(64)) < 1e-10


def test_product_torus_is_the_hex_torus():
    p = product_torus(n=64)
    assert np.allclose(p.info["radii"], 1 / np.sqrt(3))
    assert point_set_distance(p.points, hexagonal_torus(64).points) <= 1e-9


def test_product_torus_validation():
    with pytest.raises(ValueError):
        product_torus(levels=(0, 0))
    with pytest.raises(ValueError):
        product_torus(levels=(1, 0, 0))


# -- geodesic sphere ----------------------------------------------------------


def test_geodesic_sphere_area():
    assert area_and_bound(geodesic_sphere(n=32)).area == pytest.approx(4 * np.pi, abs=1e-10)


def test_open_patch_has_no_cone_bound():
    rep = area_and_bound(hexagonal_torus_strip(64, 17))
    assert rep.cone_mass is None and not rep.closed


def test_sphere_minimality_second_order():
    r = [minimality_residual(geodesic_sphere(chart="stereographic", n=n)) for n in (32, 64)]
    assert 3.5 <= r[0] / r[1] <= 4.5


def test_sphere_projects_into_real_plane():
    proj = hopf_project(geodesic_sphere(n=32))
    assert np.max(np.abs(proj.coords.imag)) < 1e-12


def test_sphere_hopf_metric_second_order():
    r = [hopf_metric_residual(geodesic_sphere(chart="stereographic", n=n)) for n in (32, 64)]
    assert 3.5 <= r[0] / r[1] <= 4.5


# -- Hopf projection ----------------------------------------------------------


def test_hopf_projection_invariant_under_deck_rotation():
    h = hexagonal_torus(48)
    rotated = DiscretePatch(h.grid, OMEGA * h.frames, closed=h.closed)
    a, b = hopf_project(h).coords, hopf_project(rotated).coords
    assert np.max(np.abs(a - b)) < 1e-14


def test_hex_torus_image_is_threefold_quotient():
    n = 48
    coords = hopf_project(hexagonal_torus(n)).coords.reshape(-1, 3)
    keys = {tuple(np.round(np.concatenate([c.real, c.imag]), 8) + 0.0) for c in coords}
    assert len(keys) == n * n // 3


def test_hex_torus_hopf_metric():
    assert hopf_metric_residual(hexagonal_torus(64)) < 1e-10


# -- negative control ---------------------------------------------------------


def test_non_legendrian_surface_has_large_contact_residual():
    g = Grid2D.box(64, 64, (0.2, 1.2), (0.0, 1.0))
    S, T = g.mesh()
    X = np.stack([np.cos(S), np.sin(S) * np.exp(1j * T), 0.3 * np.exp(1j * (S + T))], -1)
    P = np.concatenate([X.real, X.imag], -1)
    res = legendrian_residuals(patch_from_points(g, P))
    assert res.contact > 0.1


# -- reflection continuation --------------------------------------------------


def test_half_strip_reflects_to_full_strip():
    half = hexagonal_torus_strip(64, 33, (0, np.pi / 2))
    full = reflect_continue(half, "seam")
    ref = hexagonal_torus_strip(64, 65, (-np.pi / 2, np.pi / 2))
    assert point_set_distance(full.points, ref.points) <= 1e-8
    assert full.parity == -half.parity
    orth, det = full.frame_defects()
    assert orth < 1e-12 and det < 1e-12


def test_double_reflection_is_identity():
    half = hexagonal_torus_strip(64, 33)
    _, _, face = half.tags["seam"]
    r = face_reflection(face)
    assert np.max(np.abs(r(r(half.points)) - half.points)) <= 1e-12


def test_hemisphere_reflects_to_sphere():
    h = geodesic_hemisphere(33, 64)
    full = reflect_continue(h, "equator")
    ref = geodesic_sphere(n=65, n_phi=64, theta_range=(0.05, np.pi - 0.05), quadrature="uniform")
    assert point_set_distance(full.points, ref.points) <= 1e-8
    assert full.info["seam_angle"] < 1e-8


def test_tilted_strip_warns_with_angle():
    with pytest.warns(SeamOrthogonalityWarning, match=r"5\.0\d\d degrees"):
        reflect_continue(tilted_strip(5.0), "seam")


def test_orthogonal_seam_does_not_warn():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        reflect_continue(hexagonal_torus_strip(64, 17), "seam")


def test_boundary_off_face_raises():
    half = hexagonal_torus_strip(64, 17)
    kind, nodes, _ = half.tags["seam"]
    wrong = Lagrangian3Plane(np.array([[1.0, 0, 0, 0, 0, 0], [0, 1, 0, 0, 0, 0], [0, 0, 0, 0, 0, 1]]))
    half.tags["seam"] = (kind, nodes, wrong)
    with pytest.raises(ConstraintError):
        reflect_continue(half, "seam")


# -- distinguished curves -----------------------------------------------------


@pytest.mark.parametrize("direction,label", [
    ((1, -1), "anti_slag"), ((1, 0), "anti_slag"), ((0, 1), "anti_slag"),
    ((1, 1), "complex"), ((1, -2), "complex"), ((2, -1), "complex"),
])
def test_six_curve_families(direction, label):
    h = hexagonal_torus(64)
    for base in ((0, 0), (7, 11)):
        assert classify_curve(h, lattice_curve(h.grid, base, direction), closed=True).label == label


# -- Weierstrass cover --------------------------------------------------------


def test_g3_matches_lattice_sum():
    _, g3 = invariants()
    rho = np.exp(1j * np.pi / 3)
    m = np.arange(-60, 61)
    A, B = np.meshgrid(m, m)
    w = (A + B * rho).ravel()
    w = w[w != 0]
    assert abs(140 * np.sum(w**-6.0) - g3) / abs(g3) < 1e-6


def test_wp_differential_equation():
    _, g3 = invariants()
    z = np.array([0.13 + 0.21j, 0.41 - 0.05j, 0.7 + 0.6j, -0.3 + 0.45j])
    assert np.max(np.abs(wp(z, 1) ** 2 - (4 * wp(z) ** 3 - g3))) / abs(g3) < 1e-10


def test_wp_is_doubly_periodic():
    z = np.array([0.13 + 0.21j, 0.41 - 0.05j])
    rho = np.exp(1j * np.pi / 3)
    assert np.allclose(wp(z + 1), wp(z), rtol=1e-12)
    assert np.allclose(wp(z + rho), wp(z), rtol=1e-12)


def test_random_targets_have_three_preimages():
    rng = np.random.default_rng(0)
    targets = rng.normal(size=100) + 1j * rng.normal(size=100)
    cover = branched_cover()
    for w in targets:
        roots = preimages(w)
        assert len(roots) == 3
        assert max(abs(cover(z) - w) for z in roots) < 1e-8 * max(1, abs(w))


@pytest.mark.parametrize("w", [0.0, 1.0, -1.0])
def test_branch_values_have_one_preimage(w):
    assert len(preimages(w)) == 1


def test_pullback_is_constant():
    _, field = branched_cover_pullback(64)
    assert field.spread <= 1e-4


def test_pullback_bounded_at_branch_points():
    assert max(branch_point_deviation(0.05)) < 1e-8


def test_local_model_constant():
    z = np.array([0.1, 0.03j, -0.02 + 0.01j])
    assert np.allclose(local_model_coefficient(z), 27)
