import numpy as np
import pytest

from slaglab import kernels
from slaglab.frames import (
    AdmissibleTriple,
    AmbiguousZeroError,
    DomainViolationError,
    FrameIntegrationError,
    FrameSU3,
    InadmissibleTripleError,
    associated_family,
    auto_substeps,
    classify_curve,
    connection_from_triple,
    cubic_from_patch,
    flat_check_scaled_metric,
    hexagonal_torus_triple,
    integrate_frame,
    lattice_curve,
    plaquette_holonomy,
    round_sphere_triple,
    simons_residual,
    traveling_wave_triple,
    umbilic_divisor,
    wave_profile,
)
from slaglab.discrete import Grid2D, sup_interior
from slaglab.surfaces import (
    align_unitary,
    hexagonal_torus,
    hexagonal_torus_conformal,
    special_lagrangian_fit,
)


def random_su3(seed):
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))
    return q / np.linalg.det(q) ** (1 / 3)


# -- frames and connections -------------------------------------------------


def test_frame_rejects_non_unitary_and_wrong_determinant():
    with pytest.raises(ValueError):
        FrameSU3(np.diag([1, 1, 1.1]).astype(complex))
    with pytest.raises(ValueError):
        FrameSU3(np.diag([1, 1, -1]).astype(complex))


def test_frame_from_real_round_trip():
    F = FrameSU3(random_su3(1))
    G = FrameSU3.from_real(F.e, F.n)
    assert np.allclose(G.matrix, F.matrix)
    R = F.real_matrix()
    assert np.allclose(R.T @ R, np.eye(6))


def test_connection_is_traceless_anti_hermitian():
    t = traveling_wave_triple(32)
    for edge in [((3, 4), (4, 4)), ((7, 2), (7, 3))]:
        A = connection_from_triple(t, edge).matrix
        assert np.allclose(A + A.conj().T, 0, atol=1e-14)
        assert abs(np.trace(A)) < 1e-14


# -- admissibility -----------------------------------------------------------


def test_inadmissible_triple_rejected():
    t = hexagonal_torus_triple(64)
    bad = AdmissibleTriple(t.grid, t.u + 0.1, t.h0, 1)
    with pytest.raises(InadmissibleTripleError):
        integrate_frame(bad)


def test_admissibility_residual_second_order_on_wave():
    r = [traveling_wave_triple(n).admissibility_residual() for n in (32, 64, 128)]
    assert 3.5 <= r[0] / r[1] <= 4.5 and 3.5 <= r[1] / r[2] <= 4.5


def test_wave_profile_is_periodic():
    period, f = wave_profile(0.15)
    x = np.linspace(0, period, 7)
    u0, _ = f(x)
    u1, _ = f(x + period)
    assert np.allclose(u0, u1, atol=1e-10)
    assert abs(period - 2.27) < 0.05


# -- integration oracles -----------------------------------------------------


def test_hex_torus_integration_matches_closed_form():
    p = integrate_frame(hexagonal_torus_triple(64))
    U, dev = align_unitary(p.positions, hexagonal_torus_conformal(64).positions)
    assert dev <= 1e-6
    assert np.allclose(U.conj().T @ U, np.eye(3), atol=1e-12)
    assert p.info["max_drift"] < 1e-6


def test_integration_preserves_frame_invariants():
    p = integrate_frame(traveling_wave_triple(32))
    orth, det = p.frame_defects()
    assert orth < 1e-10 and det < 1e-10


def test_sphere_data_lands_in_one_special_lagrangian_plane():
    fit = special_lagrangian_fit(integrate_frame(round_sphere_triple(48)))
    assert fit.distance < 1e-6 and fit.lagrangian_defect < 1e-6 and fit.phase < 1e-6


def test_seed_motion_is_ambient_su3_motion():
    t = traveling_wave_triple(32)
    U = random_su3(3)
    p0 = integrate_frame(t)
    p1 = integrate_frame(t, seed=FrameSU3(U))
    assert np.allclose(p1.frames, U @ p0.frames, atol=1e-10)


def test_holonomy_density_second_order():
    d = [float(np.max(plaquette_holonomy(traveling_wave_triple(n)))) for n in (32, 64, 128)]
    assert 3.5 <= d[0] / d[1] <= 4.5 and 3.5 <= d[1] / d[2] <= 4.5


def test_holonomy_vanishes_on_flat_torus():
    assert float(np.max(plaquette_holonomy(hexagonal_torus_triple(32)))) < 1e-9


def test_drift_limit_raises(monkeypatch):
    import slaglab.frames as fr

    monkeypatch.setattr(fr, "DRIFT_LIMIT", 1e-18)
    with pytest.raises(FrameIntegrationError):
        integrate_frame(traveling_wave_triple(32))


def test_auto_substeps_at_least_two():
    assert auto_substeps(hexagonal_torus_triple(32)) >= 2


@pytest.mark.skipif(kernels.BACKEND != "cython", reason="compiled kernel not built")
def test_backends_agree():
    t = traveling_wave_triple(32)
    a = integrate_frame(t, backend="cython")
    b = integrate_frame(t, backend="numpy")
    assert np.max(np.abs(a.frames - b.frames)) < 1e-12


# -- cubic form, Simons, umbilics --------------------------------------------


def test_cubic_round_trip_on_wave():
    errs = []
    for n in (32, 64):
        t = traveling_wave_triple(n)
        p = integrate_frame(t)
        errs.append(p.sup_interior(cubic_from_patch(p) - t.h))
    assert errs[1] < 2e-3
    assert 3.5 <= errs[0] / errs[1] <= 4.5


def test_associated_family_composition_exact():
    t = traveling_wave_triple(32)
    a = associated_family(associated_family(t, 0.3), 0.4)
    b = associated_family(t, 0.7)
    assert np.array_equal(a.h, b.h) or np.max(np.abs(a.h - b.h)) < 1e-15


def test_associated_family_is_isometric():
    t = traveling_wave_triple(32)
    p0 = integrate_frame(t)
    p1 = integrate_frame(associated_family(t, np.pi / 2))
    E0 = np.array(p0.metric())
    E1 = np.array(p1.metric())
    assert np.max(np.abs(E0 - E1)[:, 2:-2, 2:-2]) < 1e-3


def test_simons_identity_second_order():
    r = [sup_interior(simons_residual(traveling_wave_triple(n)), traveling_wave_triple(n).grid)
         for n in (32, 64, 128)]
    assert 3.5 <= r[0] / r[1] <= 4.5 and 3.5 <= r[1] / r[2] <= 4.5


def test_umbilic_divisor_torus_has_degree_zero():
    g = Grid2D.box(32, 32, (0, 1), (0, 1), True, True)
    X, Y = g.mesh()
    h = np.exp(2j * np.pi * X) + 0.2  # nonvanishing, winding along x only
    d = umbilic_divisor(h + 0 * Y, g)
    assert d.total_degree == 0 and d.consistent


def test_umbilic_divisor_counts_a_simple_zero():
    g = Grid2D.box(33, 33, (-1, 1), (-1, 1))
    X, Y = g.mesh()
    d = umbilic_divisor((X - 0.03) + 1j * (Y - 0.02), g)
    assert d.total_degree == 1 and len(d.zeros) == 1


def test_umbilic_divisor_rejects_zero_on_node():
    g = Grid2D.box(33, 33, (-1, 1), (-1, 1))
    X, Y = g.mesh()
    with pytest.raises(AmbiguousZeroError):
        umbilic_divisor(X + 1j * Y, g)


def test_scaled_metric_flat_second_order():
    r = []
    for n in (32, 64, 128):
        t = traveling_wave_triple(n)
        Kt, margin = flat_check_scaled_metric(t.u, t.grid)
        assert margin > 0
        r.append(sup_interior(Kt, t.grid))
    assert 3.5 <= r[0] / r[1] <= 4.5 and 3.5 <= r[1] / r[2] <= 4.5


def test_scaled_metric_rejects_round_sphere():
    t = round_sphere_triple(32)
    with pytest.raises(DomainViolationError):
        flat_check_scaled_metric(t.u, t.grid)


# -- distinguished curves ----------------------------------------------------


@pytest.mark.parametrize("direction,label", [
    ((1, -1), "anti_slag"), ((1, 0), "anti_slag"), ((0, 1), "anti_slag"),
    ((1, 1), "complex"), ((1, -2), "complex"), ((2, -1), "complex"),
    ((1, 3), "neither"),
])
def test_curve_families_on_hex_torus(direction, label):
    h = hexagonal_torus(64)
    c = lattice_curve(h.grid, (3, 5), direction)
    assert classify_curve(h, c, closed=True).label == label
