"""Command-line entry point.

    slaglab pde     --domain torus-hex --lambda 1 --res 128
    slaglab frame   --surface hexagonal-torus --tau 0,90
    slaglab group   --k 3
    slaglab surface --name sphere --format obj
    slaglab assoc   --surface hexagonal-torus
    slaglab verify  --res 64,128
    slaglab export  --input u.slag --format csv

Options may also come from a flat ``key = value`` file given by
``--config``; command-line flags override it.  Exit codes: 0 ok,
1 usage or configuration error, 2 solver failure, 3 verification mismatch.
``SLAG_THREADS`` caps the BLAS thread pools.
"""

from __future__ import annotations

import os

_threads = os.environ.get("SLAG_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

import argparse  # noqa: E402
import json  # noqa: E402
import sys  # noqa: E402
from pathlib import Path  # noqa: E402

import numpy as np  # noqa: E402

from . import __version__  # noqa: E402
from .verification import _clean, config_hash, dumps  # noqa: E402

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_MISMATCH = 0, 1, 2, 3


class ConfigError(ValueError):
    """Invalid command-line or config-file input."""


# --------------------------------------------------------------------------
# config handling


def read_config_file(path) -> list:
    """``key = value`` lines as argv tokens; '#' starts a comment."""
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config: no such file {path}")
    tokens = []
    for n, line in enumerate(p.read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("_", "-")
        if value.lower() in ("true", "yes", "on"):
            tokens.append(f"--{key}")
        elif value.lower() not in ("false", "no", "off"):
            tokens += [f"--{key}", value]
    return tokens


def _floats(text: str) -> list:
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from exc


def _ints(text: str) -> list:
    vals = _floats(text)
    if any(v != int(v) for v in vals):
        raise ConfigError(f"expected integers, got {text!r}")
    return [int(v) for v in vals]


def _check_res(res, name="res"):
    if res < 16:
        raise ConfigError(f"{name}: resolution must be at least 16, got {res}")


def _out_dir(args) -> Path:
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".slaglab-write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ConfigError(f"out: directory {out} is not writable ({exc})") from exc
    return out


def _settings(args) -> dict:
    skip = {"func", "config", "out"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _write_report(out: Path, name: str, args, body: dict) -> Path:
    settings = _settings(args)
    report = {"command": args.command, "config": settings, "config_hash": config_hash(settings),
              "versions": {"slaglab": __version__, "numpy": np.__version__}, **body}
    path = out / name
    path.write_text(dumps(_clean(report)))
    return path


# --------------------------------------------------------------------------
# commands


def cmd_pde(args) -> int:
    from .gridio import GridField, write_grid, write_grid_csv
    from .tzitzeica import (
        FlatDomain,
        PdeProblem,
        SolverDivergenceError,
        constant_solution,
        curvature_of,
        newton_solve,
    )

    _check_res(args.res)
    if not args.lam > 0:
        raise ConfigError(f"lambda must be positive, got {args.lam}")
    if args.tol <= 0:
        raise ConfigError("tol must be positive")
    out = _out_dir(args)
    u0 = constant_solution(args.lam)
    if args.domain == "torus-hex":
        dom = FlatDomain.hex_torus(args.res)
        prob = PdeProblem(dom, args.lam)
        periods = (1.0, 1.0)
    else:
        dom = FlatDomain.rectangle(1.0, 1.0, args.res)
        bc = u0 if args.bc == "const" else _floats(args.bc)[0]
        prob = PdeProblem(dom, args.lam, boundary=bc)
        periods = (0.0, 0.0)
    init = args.amplitude * np.random.default_rng(args.seed).standard_normal(dom.shape)
    if dom.kind == "rectangle":
        init[[0, -1], :] = init[:, [0, -1]] = 0.0
    body = {"domain": args.domain, "constant_solution": u0}
    try:
        r = newton_solve(prob, init, tol=args.tol)
    except SolverDivergenceError as exc:
        body.update(status="diverged", message=str(exc), history=exc.args[1] if len(exc.args) > 1 else [])
        _write_report(out, "convergence.json", args, body)
        print(f"pde: solver failed: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    K = curvature_of(prob, r.u)
    write_grid(out / "solution.slag", GridField("u", r.u, periods, args.lam))
    write_grid(out / "curvature.slag", GridField("K", np.nan_to_num(K), periods, args.lam))
    if args.format == "csv":
        write_grid_csv(out / "solution.csv", GridField("u", r.u, periods, args.lam))
    inner = r.u[1:-1, 1:-1] if dom.kind == "rectangle" else r.u
    body.update(status="converged", iterations=r.iterations, residual_sup=r.residual_sup,
                history=r.history, max_deviation_from_constant=float(np.max(np.abs(inner - u0))))
    if dom.kind == "rectangle" and args.bc == "const":
        body["interior_constant"] = bool(np.max(np.abs(inner - u0)) <= 1e-9)
    _write_report(out, "convergence.json", args, body)
    print(f"pde: converged in {r.iterations} iterations, residual {r.residual_sup:.3e}")
    return EXIT_OK


def _load_triple(path):
    from .discrete import Grid2D
    from .frames import AdmissibleTriple
    from .gridio import GridFileError, read_grid

    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"triple: no such file {path}")
    try:
        gf = read_grid(p)
    except GridFileError as exc:
        raise ConfigError(f"triple: {exc}") from exc
    if gf.nc != 3:
        raise ConfigError("triple: expected three components (u, Re h, Im h)")
    nx, ny = gf.data.shape[:2]
    px, py = gf.periods
    if px <= 0 or py <= 0:
        raise ConfigError("triple: periods must be positive")
    g = Grid2D.box(nx, ny, (0, px), (0, py), True, True)
    return AdmissibleTriple(g, gf.data[..., 0], gf.data[..., 1] + 1j * gf.data[..., 2], name=p.stem)


def cmd_frame(args) -> int:
    from .discrete import sup_interior
    from .frames import (
        InadmissibleTripleError,
        associated_family,
        hexagonal_torus_triple,
        integrate_frame,
        round_sphere_triple,
        simons_residual,
        traveling_wave_triple,
    )
    from .gridio import write_obj, write_points_csv
    from .surfaces import align_unitary, hexagonal_torus_conformal, legendrian_residuals

    _check_res(args.res)
    if args.triple:
        triple = _load_triple(args.triple)
    else:
        triple = {"hexagonal-torus": hexagonal_torus_triple, "sphere": round_sphere_triple,
                  "wave": traveling_wave_triple}[args.surface](args.res)
    out = _out_dir(args)
    taus = _floats(args.tau)
    body = {"triple": triple.name, "runs": []}
    metrics = []
    for tau in taus:
        t = associated_family(triple, np.radians(tau)) if tau else triple
        try:
            p = integrate_frame(t)
        except InadmissibleTripleError as exc:
            body["error"] = str(exc)
            _write_report(out, "frame.json", args, body)
            print(f"frame: {exc}", file=sys.stderr)
            return EXIT_SOLVER
        leg = legendrian_residuals(p)
        run = {"tau_degrees": tau, "holonomy_density": p.info["holonomy_density"],
               "admissibility_residual": t.admissibility_residual(),
               "simons_residual": sup_interior(simons_residual(t), t.grid),
               "legendrian": {"contact": leg.contact, "symplectic": leg.symplectic, "phase": leg.phase},
               "frame_defects": list(p.frame_defects())}
        if triple.name.startswith("hexagonal") and not tau:
            _, dev = align_unitary(p.positions, hexagonal_torus_conformal(args.res).positions)
            run["alignment_error"] = dev
        body["runs"].append(run)
        metrics.append(np.array(p.metric()))
        stem = f"frame_tau{tau:g}"
        write_points_csv(out / f"{stem}.csv", p.points)
        if args.format == "obj":
            write_obj(out / f"{stem}.obj", p.points, closed=p.closed)
    if len(taus) > 1:
        body["isometry"] = [{"tau_degrees": tau, "metric_difference": float(np.max(np.abs(m - metrics[0])[:, 2:-2, 2:-2]))}
                            for tau, m in zip(taus[1:], metrics[1:])]
    _write_report(out, "frame.json", args, body)
    print(f"frame: {len(taus)} run(s) written to {out}")
    return EXIT_OK


def cmd_group(args) -> int:
    from .reflection import GroupTooLargeError, InconsistencyError, close_group, generators_k3, tessellation_report

    if args.k < 3:
        raise ConfigError(f"k must be at least 3, got {args.k}")
    out = _out_dir(args)
    k = args.k
    gens = generators_k3(k, perturb=args.perturb_generators)
    try:
        rep = tessellation_report(k, group=close_group(gens, bound=max(10_000, 50 * k * k)))
    except (GroupTooLargeError, InconsistencyError) as exc:
        _write_report(out, "group.json", args, {"k": k, "error": str(exc)})
        print(f"group: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    d = rep.as_dict()
    expected = {"order": 6 * k * k, "faces": 6 * k * k, "vertices": 3 * k + 2 * k * k,
                "chi": k * (3 - k), "genus": 1 + k * (k - 3) // 2,
                "lift_degree": 3 if k % 3 == 0 else 1, "center": np.gcd(3, k)}
    mismatches = [key for key, v in expected.items() if d[key] != v]
    if d["relations_residual"] > 1e-10:
        mismatches.append("relations_residual")
    _write_report(out, "group.json", args, {"report": d, "mismatches": mismatches})
    print(json.dumps(_clean({key: d[key] for key in ("k", "order", "chi", "genus", "lift_degree")})))
    return EXIT_MISMATCH if mismatches else EXIT_OK


def _surface(name, res):
    from .surfaces import geodesic_hemisphere, geodesic_sphere, hexagonal_torus, hexagonal_torus_strip, product_torus

    return {"hexagonal-torus": lambda: hexagonal_torus(res),
            "product-torus": lambda: product_torus(n=res),
            "sphere": lambda: geodesic_sphere(n=res),
            "hemisphere": lambda: geodesic_hemisphere(res // 2 + 1, res),
            "strip": lambda: hexagonal_torus_strip(res, res // 4 + 1)}[name]()


def cmd_surface(args) -> int:
    from .gridio import write_obj, write_points_csv
    from .surfaces import area_and_bound, legendrian_residuals, reflect_continue

    _check_res(args.res)
    out = _out_dir(args)
    p = _surface(args.name, args.res)
    if args.reflect:
        if args.reflect not in p.tags:
            raise ConfigError(f"reflect: surface has no boundary tagged {args.reflect!r}")
        p = reflect_continue(p, args.reflect)
    area = area_and_bound(p)
    leg = legendrian_residuals(p)
    body = {"surface": args.name, "area": area.area, "cone_mass": area.cone_mass,
            "legendrian": {"contact": leg.contact, "symplectic": leg.symplectic, "phase": leg.phase},
            "frame_defects": list(p.frame_defects()), "tags": sorted(p.tags)}
    write_points_csv(out / f"{args.name}.csv", p.points)
    if args.format == "obj":
        proj = np.array(_floats(args.projection)).reshape(3, 6) if args.projection else None
        write_obj(out / f"{args.name}.obj", p.points, proj, closed=p.closed)
    _write_report(out, "surface.json", args, body)
    print(f"surface: {args.name} area {area.area:.12g}")
    return EXIT_OK


def cmd_assoc(args) -> int:
    from .associated import (
        bipolar_map_report,
        distance_bound_check,
        gauss_map_report,
        killing_jacobi_dim,
        polar_map_report,
        projection_length_identity,
    )

    _check_res(args.res)
    out = _out_dir(args)
    p = _surface(args.surface, args.res)
    K = 0.0 if "torus" in args.surface else 1.0
    reps = [gauss_map_report(p, K=K), polar_map_report(p, K=K), bipolar_map_report(p)]
    v = np.random.default_rng(args.seed).standard_normal(6)
    pl = projection_length_identity(p, v)
    dist = distance_bound_check(p, args.probes, seed=args.seed)
    body = {"surface": args.surface,
            "maps": [{"name": r.name, "unit_defect": r.unit_defect, "factor_residual": r.factor_residual,
                      "factor_mean": r.factor_mean, "laplacian_residual": r.laplacian_residual,
                      **r.extra} for r in reps],
            "killing_jacobi_dim": killing_jacobi_dim(p),
            "projection_length": {"identity_defect": pl.identity_defect,
                                  "laplacian_residual": pl.laplacian_residual, "mean_value": pl.mean_value},
            "distance": {"max": dist.max_distance, "bound": dist.bound,
                         "allowance": dist.allowance, "holds": dist.holds}}
    _write_report(out, "assoc.json", args, body)
    print(f"assoc: killing-jacobi dimension {body['killing_jacobi_dim']}")
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verification import VerifyConfig, criterion_determinism, run_suite

    res = _ints(args.res)
    for r in res:
        _check_res(r)
    only = _ints(args.criteria) if args.criteria else None
    if only and any(c not in range(1, 11) for c in only):
        raise ConfigError("criteria: numbers must lie in 1..10")
    out = _out_dir(args)
    cfg = VerifyConfig(res=tuple(res), seed=args.seed, perturb_generators=args.perturb_generators)
    suite = [c for c in (only or range(1, 10)) if c != 10]
    report = run_suite(cfg, suite) if suite else run_suite(cfg, [])
    if only is None or 10 in only:
        c10 = criterion_determinism(cfg)
        from dataclasses import asdict

        report["criteria"].append(_clean(asdict(c10)))
        if not c10.passed:
            report["failed"].append(10)
    (out / "verify.json").write_text(dumps(report))
    for c in report["criteria"]:
        flag = "PASS" if c["passed"] else "FAIL"
        extra = f"  ({', '.join(c['failures'])})" if c["failures"] else ""
        print(f"[{flag}] {c['number']:2d}. {c['name']}{extra}")
        for e in c["measured"].get("ratios", []):
            print(f"         {e['item']:<20s} {e['coarse']:.3e} -> {e['fine']:.3e}  ratio {e['ratio']:.3f}")
    if report["failed"]:
        print(f"verify: failed criteria {report['failed']}", file=sys.stderr)
        return EXIT_MISMATCH
    return EXIT_OK


def cmd_export(args) -> int:
    from .gridio import GridFileError, read_grid, write_grid_csv

    src = Path(args.input)
    if not src.is_file():
        raise ConfigError(f"input: no such file {args.input}")
    out = _out_dir(args)
    try:
        gf = read_grid(src)
    except GridFileError as exc:
        raise ConfigError(f"input: {exc}") from exc
    if args.format == "csv":
        dest = write_grid_csv(out / (src.stem + ".csv"), gf)
    elif args.format == "json":
        dest = out / (src.stem + ".json")
        dest.write_text(dumps(_clean({"kind": gf.kind, "periods": list(gf.periods), "lambda": gf.lam,
                                      "shape": list(gf.data.shape), "data": gf.data.tolist()})))
    else:
        raise ConfigError("format: export supports csv or json")
    print(f"export: wrote {dest}")
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="flat key = value file")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--format", choices=("obj", "csv", "json"), default="json")

    p = _Parser(prog="slaglab", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("pde", parents=[common], help="solve the Tzitzeica equation")
    s.add_argument("--domain", choices=("torus-hex", "rect"), default="torus-hex")
    s.add_argument("--lambda", dest="lam", type=float, default=1.0)
    s.add_argument("--res", type=int, default=128)
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--bc", default="const", help="'const' or a boundary value")
    s.add_argument("--amplitude", type=float, default=0.1, help="random initial perturbation")
    s.set_defaults(func=cmd_pde)

    s = sub.add_parser("frame", parents=[common], help="integrate a moving frame")
    s.add_argument("--surface", choices=("hexagonal-torus", "sphere", "wave"), default="hexagonal-torus")
    s.add_argument("--triple", help="grid file with (u, Re h, Im h)")
    s.add_argument("--res", type=int, default=128)
    s.add_argument("--tau", default="0", help="associated-family angles in degrees")
    s.set_defaults(func=cmd_frame)

    s = sub.add_parser("group", parents=[common], help="reflection group and tessellation")
    s.add_argument("--k", type=int, default=3)
    s.add_argument("--perturb-generators", type=float, default=0.0)
    s.set_defaults(func=cmd_group)

    names = ("hexagonal-torus", "product-torus", "sphere", "hemisphere", "strip")
    s = sub.add_parser("surface", parents=[common], help="closed-form surfaces")
    s.add_argument("--name", choices=names, default="hexagonal-torus")
    s.add_argument("--res", type=int, default=64)
    s.add_argument("--reflect", help="continue across the tagged boundary")
    s.add_argument("--projection", help="18 comma-separated entries of a 3x6 OBJ projection")
    s.set_defaults(func=cmd_surface)

    s = sub.add_parser("assoc", parents=[common], help="Gauss, polar and bipolar maps")
    s.add_argument("--surface", choices=("hexagonal-torus", "sphere"), default="hexagonal-torus")
    s.add_argument("--res", type=int, default=64)
    s.add_argument("--probes", type=int, default=10_000)
    s.set_defaults(func=cmd_assoc)

    s = sub.add_parser("verify", parents=[common], help="run the acceptance suite")
    s.add_argument("--res", default="128", help="one or more comma-separated resolutions")
    s.add_argument("--criteria", help="comma-separated subset of 1..10")
    s.add_argument("--perturb-generators", type=float, default=0.0)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("export", parents=[common], help="convert a grid-field file")
    s.add_argument("--input", required=True)
    s.set_defaults(func=cmd_export)
    return p


def _expand_config(argv: list) -> list:
    """Splice config-file tokens in right after the subcommand so that
    explicit flags, which come later, take precedence."""
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    if i + 1 >= len(argv):
        raise ConfigError("config: missing file name")
    tokens = read_config_file(argv[i + 1])
    rest = argv[:i] + argv[i + 2:]
    return rest[:1] + tokens + rest[1:]


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(_expand_config(argv))
        return args.func(args)
    except ConfigError as exc:
        print(f"slaglab: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"slaglab: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
