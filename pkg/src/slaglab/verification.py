"""Acceptance criteria as runnable checks.

Each runner returns a :class:`Criterion` holding a pass flag and the
measured values.  Reports carry no timings so that two runs with the same
configuration serialize to identical bytes.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import asdict, dataclass, field
from math import gcd

import numpy as np

from . import __version__
from .associated import (
    bipolar_map_report,
    distance_bound_check,
    gauss_map_report,
    generating_function,
    j_eigenspace_dims,
    killing_jacobi_dim,
    wedge_pairing,
    polar_map_report,
    projection_length_identity,
    su3_basis,
)
from .discrete import sup_interior
from .frames import (
    associated_family,
    classify_curve,
    flat_check_scaled_metric,
    hexagonal_torus_triple,
    integrate_frame,
    lattice_curve,
    plaquette_holonomy,
    round_sphere_triple,
    simons_residual,
    traveling_wave_triple,
)
from .reflection import (
    GroupTooLargeError,
    InconsistencyError,
    close_group,
    generators_k3,
    tessellation_report,
    verify_relations,
)
from .surfaces import (
    SeamOrthogonalityWarning,
    align_unitary,
    area_and_bound,
    face_reflection,
    geodesic_sphere,
    hexagonal_torus,
    hexagonal_torus_conformal,
    hexagonal_torus_strip,
    point_set_distance,
    reflect_continue,
    special_lagrangian_fit,
    tilted_strip,
)
from .tzitzeica import FlatDomain, PdeProblem, constant_solution, newton_solve, quadratic_tail_ratios
from .weierstrass import branch_point_deviation, branched_cover, branched_cover_pullback, preimages

RATIO_BAND = (3.5, 4.5)
PDE_AMPLITUDE = 0.1  # random initial data; larger noise can reach nonconstant solutions at lambda = 2


@dataclass
class VerifyConfig:
    res: tuple = (128,)
    seed: int = 0
    perturb_generators: float = 0.0
    ks: tuple = (3, 4, 5, 6, 7, 8)
    pde_res: int | None = None  # defaults to 2 * finest res, at most 256

    def __post_init__(self):
        self.res = tuple(sorted(int(r) for r in self.res))
        if any(r < 16 for r in self.res):
            raise ValueError("res: resolutions must be at least 16")
        if self.perturb_generators < 0:
            raise ValueError("perturb_generators must be non-negative")

    @property
    def pairs(self):
        """Consecutive (coarse, fine) resolutions for refinement ratios."""
        if len(self.res) == 1:
            return [(self.res[0] // 2, self.res[0])]
        return list(zip(self.res, self.res[1:]))

    @property
    def finest(self) -> int:
        return self.res[-1]

    def as_dict(self):
        return asdict(self)


@dataclass
class Criterion:
    number: int
    name: str
    passed: bool
    measured: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)


def _in_band(r):
    return RATIO_BAND[0] <= r <= RATIO_BAND[1]


def _ratio_entry(name, coarse, fine):
    r = coarse / fine if fine > 0 else float("inf")
    return {"item": name, "coarse": coarse, "fine": fine, "ratio": r, "ok": _in_band(r)}


class _Collector:
    def __init__(self, number, name):
        self.c = Criterion(number, name, True)

    def check(self, label, ok, **values):
        self.c.measured[label] = values if values else bool(ok)
        if not ok:
            self.c.passed = False
            self.c.failures.append(label)

    def ratios(self, label, entries):
        self.c.measured.setdefault("ratios", []).extend(entries)
        for e in entries:
            if not e["ok"]:
                self.c.passed = False
                self.c.failures.append(f"{label}:{e['item']}")


# --------------------------------------------------------------------------


def criterion_group(cfg: VerifyConfig) -> Criterion:
    col = _Collector(1, "group and tessellation exactness")
    for k in cfg.ks:
        gens = generators_k3(k, perturb=cfg.perturb_generators)
        rel = max(verify_relations(k, gens).values())
        try:
            rep = tessellation_report(k, group=close_group(gens, bound=50 * k * k))
        except (GroupTooLargeError, InconsistencyError, ValueError) as exc:
            col.check(f"k={k}", False, relations_residual=rel, error=str(exc))
            continue
        expected = {"order": 6 * k * k, "center": gcd(3, k), "faces": 6 * k * k,
                    "vertices": 3 * k + 2 * k * k, "chi": k * (3 - k),
                    "genus": 1 + k * (k - 3) // 2, "lift_degree": 3 if k % 3 == 0 else 1,
                    "orbits": sorted([k * k, k * k, 3 * k])}
        got = {"order": rep.order, "center": rep.center, "faces": rep.faces,
               "vertices": rep.vertices, "chi": rep.chi, "genus": rep.genus,
               "lift_degree": rep.lift_degree, "orbits": sorted(rep.orbits)}
        ok = (got == expected and rel <= 1e-10
              and rep.chi == rep.chi_vef == rep.chi_gauss_bonnet)
        col.check(f"k={k}", ok, relations_residual=rel, lifted_genus=rep.lifted_genus,
                  chi_vef=rep.chi_vef, chi_gauss_bonnet=rep.chi_gauss_bonnet, **got)
    return col.c


def criterion_pde(cfg: VerifyConfig) -> Criterion:
    col = _Collector(2, "constant solution recovery")
    n = cfg.pde_res or min(256, 2 * cfg.finest)
    rng = np.random.default_rng(cfg.seed)
    for lam in (0.5, 1.0, 2.0):
        d = FlatDomain.hex_torus(n)
        c = constant_solution(lam)
        init = PDE_AMPLITUDE * rng.standard_normal(d.shape)
        r = newton_solve(PdeProblem(d, lam), init, tol=1e-12, reference=np.full(d.shape, c))
        err = float(np.max(np.abs(r.u - c)))
        q = quadratic_tail_ratios(r.history)
        spread = max(q) / min(q) if q else float("inf")
        col.check(f"lambda={lam}", err <= 1e-9 and spread <= 5, sup_error=err,
                  iterations=r.iterations, tail_ratios=q, res=n)
    return col.c


def criterion_frame(cfg: VerifyConfig) -> Criterion:
    col = _Collector(3, "frame integration oracle")
    n = cfg.finest
    p = integrate_frame(hexagonal_torus_triple(n))
    _, dev = align_unitary(p.positions, hexagonal_torus_conformal(n).positions)
    col.check("hex_alignment", dev <= 1e-6, deviation=dev)
    col.ratios("holonomy", [_ratio_entry("plaquette_holonomy",
                                         float(np.max(plaquette_holonomy(traveling_wave_triple(a)))),
                                         float(np.max(plaquette_holonomy(traveling_wave_triple(b)))))
                            for a, b in cfg.pairs])
    fit = special_lagrangian_fit(integrate_frame(round_sphere_triple(n)))
    col.check("sphere_plane", max(fit.distance, fit.lagrangian_defect, fit.phase) <= 1e-6,
              distance=fit.distance, lagrangian_defect=fit.lagrangian_defect, phase=fit.phase)
    return col.c


def _wave_items(n):
    t = traveling_wave_triple(n)
    p = integrate_frame(t)
    g, pol, bip = gauss_map_report(p), polar_map_report(p), bipolar_map_report(p)
    Kt, _ = flat_check_scaled_metric(t.u, t.grid)
    v = np.array([0.3, -0.5, 0.2, 0.6, 0.1, -0.4])
    return {
        "admissibility": t.admissibility_residual(),
        "simons": sup_interior(simons_residual(t), t.grid),
        "factor_gauss": g.factor_residual,
        "factor_polar": pol.factor_residual,
        "factor_bipolar": bip.factor_residual,
        "laplacian_polar": pol.laplacian_residual,
        "laplacian_minus": pol.extra["minus_laplacian"],
        "laplacian_bipolar": bip.laplacian_residual,
        "projection_length": projection_length_identity(p, v).laplacian_residual,
        "scaled_metric_flat": sup_interior(Kt, t.grid),
    }


def criterion_identities(cfg: VerifyConfig) -> Criterion:
    col = _Collector(4, "identity suite at second order")
    cache = {}
    for n in sorted({r for pair in cfg.pairs for r in pair}):
        cache[n] = _wave_items(n)
    for a, b in cfg.pairs:
        col.ratios(f"{a}->{b}", [_ratio_entry(k, cache[a][k], cache[b][k]) for k in cache[a]])
    rng = np.random.default_rng(cfg.seed)
    v = rng.standard_normal(6)
    mean = projection_length_identity(geodesic_sphere(n=32), v).mean_value
    col.check("projection_mean_sphere", abs(mean) <= 1e-6, value=mean)
    mean_t = projection_length_identity(hexagonal_torus(cfg.finest), v).mean_value
    col.check("projection_mean_torus", abs(mean_t) <= 1e-6, value=mean_t)
    return col.c


def criterion_exact(cfg: VerifyConfig) -> Criterion:
    col = _Collector(5, "exact algebraic identities")
    rng = np.random.default_rng(cfg.seed)
    v, vp = rng.standard_normal((2, 1000, 6))
    v /= np.linalg.norm(v, axis=-1, keepdims=True)
    vp /= np.linalg.norm(vp, axis=-1, keepdims=True)
    lhs, rhs = wedge_pairing(v, vp)
    d = float(np.max(np.abs(lhs - rhs)))
    col.check("wedge_pairing", d <= 1e-12, max_defect=d)
    unit = 0.0
    for p in (hexagonal_torus(32), geodesic_sphere(n=24), integrate_frame(traveling_wave_triple(32))):
        unit = max(unit, polar_map_report(p, K=0.0).unit_defect, bipolar_map_report(p).unit_defect)
    col.check("unit_norms", unit <= 1e-12, max_defect=unit)
    dims = j_eigenspace_dims()
    col.check("eigenspace_dims", dims == (9, 6), dims=list(dims))
    t = traveling_wave_triple(32)
    comp = float(np.max(np.abs(associated_family(associated_family(t, 0.3), 0.4).h
                               - associated_family(t, 0.7).h)))
    col.check("associated_family_composition", comp <= 1e-15, max_defect=comp)
    return col.c


def criterion_rank(cfg: VerifyConfig) -> Criterion:
    col = _Collector(6, "rank and dimension oracles")
    ds = killing_jacobi_dim(geodesic_sphere(n=32))
    dt = killing_jacobi_dim(hexagonal_torus(64))
    col.check("killing_jacobi_sphere", ds == 5, dim=ds)
    col.check("killing_jacobi_torus", dt == 6, dim=dt)
    rng = np.random.default_rng(cfg.seed)
    z = rng.standard_normal((200, 3)) + 1j * rng.standard_normal((200, 3))
    z /= np.linalg.norm(z, axis=-1, keepdims=True)
    s = np.linalg.svd(np.array([generating_function(x, z) for x in su3_basis()]), compute_uv=False)
    rank = int(np.sum(s > 1e-8 * s[0]))
    col.check("generating_function_rank", rank == 8, rank=rank)
    return col.c


CURVE_FAMILIES = (((1, -1), "anti_slag"), ((1, 0), "anti_slag"), ((0, 1), "anti_slag"),
                  ((1, 1), "complex"), ((1, -2), "complex"), ((2, -1), "complex"))


def criterion_geometry(cfg: VerifyConfig) -> Criterion:
    col = _Collector(7, "geometry oracles")
    h = hexagonal_torus(cfg.finest)
    area = area_and_bound(h).area
    col.check("hex_area", abs(area - 4 * np.pi**2 / np.sqrt(3)) <= 1e-6, area=area)
    for name, patch in (("torus", hexagonal_torus(64)), ("rp2", geodesic_sphere(n=48))):
        rep = distance_bound_check(patch, 10_000, seed=cfg.seed)
        col.check(f"distance_{name}", rep.holds, max_distance=rep.max_distance,
                  bound=rep.bound, allowance=rep.allowance)
    labels = {}
    ok = True
    for direction, expected in CURVE_FAMILIES:
        got = classify_curve(h, lattice_curve(h.grid, (3, 5), direction), closed=True).label
        labels[str(direction)] = got
        ok &= got == expected
    col.check("curve_families", ok, labels=labels)
    return col.c


def criterion_reflection(cfg: VerifyConfig) -> Criterion:
    col = _Collector(8, "reflection continuation")
    half = hexagonal_torus_strip(64, 33, (0, np.pi / 2))
    full = reflect_continue(half, "seam")
    ref = hexagonal_torus_strip(64, 65, (-np.pi / 2, np.pi / 2))
    d = point_set_distance(full.points, ref.points)
    col.check("half_to_full", d <= 1e-8, distance=d)
    r = face_reflection(half.tags["seam"][2])
    dd = float(np.max(np.abs(r(r(half.points)) - half.points)))
    col.check("double_reflection", dd <= 1e-12, max_defect=dd)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        reflect_continue(tilted_strip(5.0), "seam")
    msgs = [str(w.message) for w in caught if issubclass(w.category, SeamOrthogonalityWarning)]
    col.check("tilted_warning", bool(msgs), messages=msgs)
    return col.c


def criterion_cover(cfg: VerifyConfig) -> Criterion:
    col = _Collector(9, "branched cover")
    rng = np.random.default_rng(cfg.seed)
    targets = rng.standard_normal(100) + 1j * rng.standard_normal(100)
    counts = [len(preimages(w)) for w in targets]
    col.check("three_preimages", all(c == 3 for c in counts),
              counts=sorted(set(counts)), n_targets=len(targets))
    _, pf = branched_cover_pullback(cfg.finest)
    col.check("pullback_constant", pf.spread <= 1e-4, spread=pf.spread,
              constant=[pf.constant.real, pf.constant.imag])
    dev = branch_point_deviation(0.05)
    branch = [len(preimages(w)) for w in (0.0, 1.0, -1.0)]
    col.check("branch_points_bounded", max(dev) <= 1e-6 and branch == [1, 1, 1],
              deviation=dev, preimages_at_branch_values=branch,
              points=[[b.real, b.imag] for b in branched_cover().branch_points])
    return col.c


RUNNERS = {1: criterion_group, 2: criterion_pde, 3: criterion_frame, 4: criterion_identities,
           5: criterion_exact, 6: criterion_rank, 7: criterion_geometry, 8: criterion_reflection,
           9: criterion_cover}


def _clean(x):
    """JSON-ready copy with plain Python scalars."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(_clean(cfg), sort_keys=True).encode()).hexdigest()[:16]


def run_suite(cfg: VerifyConfig, only=None) -> dict:
    """Criteria 1-9 as a JSON-ready report."""
    numbers = sorted(RUNNERS) if only is None else sorted(only)
    results = [RUNNERS[i](cfg) for i in numbers]
    return _clean({
        "config": cfg.as_dict(),
        "config_hash": config_hash(cfg.as_dict()),
        "versions": {"slaglab": __version__, "numpy": np.__version__},
        "criteria": [asdict(c) for c in results],
        "failed": [c.number for c in results if not c.passed],
    })


def dumps(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def criterion_determinism(cfg: VerifyConfig, only=(1, 5, 6)) -> Criterion:
    """Two runs of the (selected) suite serialize to identical bytes."""
    col = _Collector(10, "determinism")
    a, b = dumps(run_suite(cfg, only)), dumps(run_suite(cfg, only))
    col.check("byte_identical", a == b, sha256=hashlib.sha256(a.encode()).hexdigest(),
              criteria=list(only))
    return col.c
