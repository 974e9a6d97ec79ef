import numpy as np
import pytest

from slaglab.frames import round_sphere_triple
from slaglab.tzitzeica import (
    FlatDomain,
    PdeProblem,
    SingularSource,
    constant_solution,
    curvature_of,
    interpolate_periodic,
    jacobian_check,
    newton_solve,
    reduce_to_cell,
    residual,
    singular_solve,
)

U1 = np.log(2) / 6


def test_constant_solution_value():
    assert constant_solution(1.0) == pytest.approx(0.115525, abs=1e-6)


def test_residual_of_constant_solution_vanishes():
    for lam in (0.5, 1.0, 2.0):
        d = FlatDomain.hex_torus(32)
        r = residual(PdeProblem(d, lam), np.full(d.shape, constant_solution(lam)))
        assert r.sup < 1e-13


def test_residual_of_zero_is_minus_one():
    d = FlatDomain.hex_torus(32)
    r = residual(PdeProblem(d, 1.0), np.zeros(d.shape))
    assert np.allclose(r.field, -1.0, atol=1e-14)


def test_residual_matches_linearization():
    # u = c + delta sin(2 pi s): F(u) - F(c) = (2e^{2c} + 8 e^{-4c} - |k|^2) delta sin to O(delta^2)
    d = FlatDomain.rectangle(1.0, 1.0, 129)
    z = d.nodes()
    mode = np.sin(2 * np.pi * z.real) * np.sin(2 * np.pi * z.imag)
    k2 = 8 * np.pi**2
    c = 0.2
    prob = PdeProblem(d, 1.0, boundary=c)
    base = residual(prob, np.full(d.shape, c)).field
    errs = []
    for delta in (1e-3, 5e-4):
        r = residual(prob, c + delta * mode).field - base
        lin = (2 * np.exp(2 * c) + 8 * np.exp(-4 * c) - k2) * delta * mode
        errs.append(np.max(np.abs(r - lin)[4:-4, 4:-4]))
    # the grid Laplacian of the mode differs from -k^2 by O(h^2) times delta
    assert errs[1] < 0.6 * errs[0]


def test_lambda_must_be_positive():
    with pytest.raises(ValueError, match="lambda"):
        PdeProblem(FlatDomain.hex_torus(32), 0.0)
    with pytest.raises(ValueError, match="lambda"):
        PdeProblem(FlatDomain.hex_torus(32), -1.0)


def test_domain_validation():
    with pytest.raises(ValueError):
        FlatDomain("torus", 8)
    with pytest.raises(ValueError):
        FlatDomain("torus", 32, omega=1 - 1j)
    with pytest.raises(ValueError):
        FlatDomain.rectangle(-1, 1, 32)


def test_torus_solve_from_zero():
    d = FlatDomain.hex_torus(64)
    r = newton_solve(PdeProblem(d, 1.0), np.zeros(d.shape))
    assert np.max(np.abs(r.u - U1)) <= 1e-9


def test_residual_norm_strictly_decreasing():
    d = FlatDomain.hex_torus(48)
    init = 0.2 * np.random.default_rng(4).standard_normal(d.shape)
    r = newton_solve(PdeProblem(d, 2.0), init)
    norms = [h["residual_l2"] for h in r.history]
    assert all(b < a for a, b in zip(norms, norms[1:]))


def test_quadratic_tail():
    d = FlatDomain.hex_torus(64)
    lam = 1.0
    init = 0.3 * np.random.default_rng(0).standard_normal(d.shape)
    r = newton_solve(PdeProblem(d, lam), init, tol=1e-12,
                     reference=np.full(d.shape, constant_solution(lam)))
    e = [h["error_sup"] for h in r.history if h["error_sup"] > 1e-13]
    # e_{k+1} / e_k^2 stays bounded in the tail
    q = [b / a**2 for a, b in zip(e[-3:], e[-2:])]
    assert max(q) / min(q) <= 5


def test_rectangle_constant_boundary():
    d = FlatDomain.rectangle(1.0, 1.0, 33)
    r = newton_solve(PdeProblem(d, 1.0), np.zeros(d.shape))
    assert np.max(np.abs(r.u - U1)) <= 1e-9


def test_rectangle_maximum_principle():
    d = FlatDomain.rectangle(1.0, 1.0, 33)
    z = d.nodes()
    b = U1 + 0.1 * np.sin(3 * z.real)
    r = newton_solve(PdeProblem(d, 1.0, boundary=b), np.zeros(d.shape))
    lo = min(b.min(), U1) - 1e-12
    hi = max(b.max(), U1) + 1e-12
    assert lo <= r.u.min() and r.u.max() <= hi


def test_singular_empty_sources_reduce():
    d = FlatDomain.hex_torus(32)
    a = newton_solve(PdeProblem(d, 1.0), np.zeros(d.shape))
    b = singular_solve(PdeProblem(d, 1.0, SingularSource()), np.zeros(d.shape))
    assert np.array_equal(a.u, b.u)


def test_singular_source_small_beta():
    d = FlatDomain.hex_torus(64)
    p0 = 0.3 + 0.2j + 0.5 / 64
    prob = PdeProblem(d, 1.0, SingularSource(((p0, 0.05),)))
    r = singular_solve(prob)
    assert r.residual_sup <= 1e-7
    assert np.all(np.isfinite(r.v)) and np.ptp(r.v) < 1.0
    K = curvature_of(prob, r.u)
    far = np.abs(reduce_to_cell(d.nodes() - p0, d.omega)) > 4 / 64
    assert np.nanmax(np.abs(K - (1 - 2 * np.exp(-6 * r.u)))[far]) < 1e-7


def test_k3_configuration_is_flat():
    # three branch points of the k = 3 cover carry zero log coefficient
    d = FlatDomain.hex_torus(32)
    rho = d.omega
    pts = ((0.5 / 32 + 0.3j / 32, 0.0), ((1 + rho) / 3 + 0.01, 0.0), (2 * (1 + rho) / 3 + 0.01, 0.0))
    prob = PdeProblem(d, 1.0, SingularSource(pts))
    r = singular_solve(prob, np.zeros(d.shape))
    assert np.nanmax(np.abs(curvature_of(prob, r.u))) < 1e-8


def test_sphere_curvature_is_one():
    errs = []
    for n in (33, 65):
        t = round_sphere_triple(n)
        K = t.curvature()
        errs.append(np.max(np.abs(K - 1)[1:-1, 1:-1]))
    assert errs[1] < 1e-3 and 3.5 <= errs[0] / errs[1] <= 4.5


def test_curvature_identity_and_margin():
    d = FlatDomain.hex_torus(48)
    prob = PdeProblem(d, 0.5)
    r = newton_solve(prob, 0.2 * np.random.default_rng(1).standard_normal(d.shape))
    K = curvature_of(prob, r.u)
    assert np.max(np.abs(K - (1 - 2 * 0.25 * np.exp(-6 * r.u)))) < 1e-7
    assert np.max(K) < 1


def test_jacobian_check_constant():
    d = FlatDomain.hex_torus(32)
    err, _ = jacobian_check(PdeProblem(d, 1.0), np.full(d.shape, U1),
                            np.random.default_rng(2).standard_normal(d.shape))
    assert err <= 1e-6


def test_jacobian_check_large_amplitude():
    d = FlatDomain.hex_torus(32)
    u = 1.5 * np.sin(2 * np.pi * d.nodes().real)
    err, step = jacobian_check(PdeProblem(d, 1.0), u, np.random.default_rng(3).standard_normal(d.shape))
    assert err <= 1e-6


def test_jacobian_check_rejects_zero_direction():
    d = FlatDomain.hex_torus(32)
    with pytest.raises(ValueError):
        jacobian_check(PdeProblem(d, 1.0), np.zeros(d.shape), np.zeros(d.shape))


def test_interpolated_solution_residual_second_order():
    from scipy.interpolate import RectBivariateSpline

    def bc(z):
        return U1 + 0.2 * np.sin(2 * z.real + 1) * np.cos(z.imag)

    sups = []
    for n in (17, 33, 65):
        d = FlatDomain.rectangle(1.0, 1.0, n)
        r = newton_solve(PdeProblem(d, 1.0, boundary=bc), np.zeros(d.shape))
        x = np.linspace(0, 1, n)
        fine = FlatDomain.rectangle(1.0, 1.0, 2 * n - 1)
        xf = np.linspace(0, 1, 2 * n - 1)
        uf = RectBivariateSpline(x, x, r.u, kx=3, ky=3)(xf, xf)
        res = residual(PdeProblem(fine, 1.0, boundary=bc), uf).field
        # corners carry a weak singularity (data not compatible there)
        zf = fine.nodes()
        away = np.minimum(np.minimum(zf.real, 1 - zf.real), np.minimum(zf.imag, 1 - zf.imag)) >= 0.25
        sups.append(np.max(np.abs(res[away])))
    assert 3.5 <= sups[0] / sups[1] <= 4.5 and 3.5 <= sups[1] / sups[2] <= 4.5


def test_periodic_interpolation_exact_for_trig_polynomials():
    s = np.arange(16) / 16
    S, T = np.meshgrid(s, s, indexing="ij")
    f = lambda a, b: np.cos(2 * np.pi * (a + 2 * b)) + 0.5 * np.sin(2 * np.pi * 3 * a)
    sf = np.arange(32) / 32
    Sf, Tf = np.meshgrid(sf, sf, indexing="ij")
    assert np.max(np.abs(interpolate_periodic(f(S, T), 2) - f(Sf, Tf))) < 1e-12
