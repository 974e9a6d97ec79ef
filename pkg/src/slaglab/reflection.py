"""Reflection polygons in CP^2 and the finite unitary groups they generate.

The triangle Gamma_{k,3} has the three complex faces z1 = eps z2, z1 = z2
and z2 = z3 (eps = exp(2 pi i/k)).  Reflections in them generate a group
of order 6k^2 whose translates of the fundamental triangle tessellate
CP^2.  Everything here is floating point; integer conclusions are guarded
by separation checks on the canonical keys.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd

import numpy as np

from .hermitian import (
    ComplexLineCP2,
    Lagrangian3Plane,
    angle_between_complex_lines,
    complex_matrix_to_real,
    complex_reflection_matrix,
    reflect_anti_slag_matrix,
)

KEY_DIGITS = 8


class GroupTooLargeError(RuntimeError):
    """Closure exceeded its safety bound: infinite group or bad tolerance."""


class InconsistencyError(RuntimeError):
    """An enumerated count disagrees with its closed form."""


class DegeneratePolygonError(ValueError):
    pass


# --------------------------------------------------------------------------
# polygons


@dataclass(frozen=True)
class Face:
    name: str
    kind: str  # 'complex' or 'anti_slag'
    plane: object  # ComplexLineCP2 or Lagrangian3Plane


@dataclass(frozen=True)
class Vertex:
    point: np.ndarray
    angle: float
    faces: tuple  # indices (i, i+1)


@dataclass(frozen=True)
class PolygonGamma:
    """Closed chain of faces; vertex i is the meet of faces i and i+1."""

    faces: tuple
    vertices: tuple
    k: int | None = None

    def __post_init__(self):
        m = len(self.faces)
        if m < 2 or len(self.vertices) != m:
            raise DegeneratePolygonError("need as many vertices as faces (closed chain)")
        for v in self.vertices:
            if not (0 < v.angle <= np.pi / 2 + 1e-12):
                raise DegeneratePolygonError(f"vertex angle {v.angle:.3g} outside (0, pi/2]")


def _meet(P1: ComplexLineCP2, P2: ComplexLineCP2):
    z = np.conj(np.cross(P1.normal, P2.normal))
    nz = np.linalg.norm(z)
    if nz < 1e-10:
        raise DegeneratePolygonError("coincident faces")
    return z / nz


def polygon_from_faces(faces, k=None) -> PolygonGamma:
    """Vertices and angles of a closed chain of complex faces."""
    faces = tuple(faces)
    verts = []
    for i in range(len(faces)):
        a, b = faces[i], faces[(i + 1) % len(faces)]
        if a.kind != "complex" or b.kind != "complex":
            raise ValueError("use mixed_vertex for faces that are not complex lines")
        p = _meet(a.plane, b.plane)
        verts.append(Vertex(p, angle_between_complex_lines(a.plane, b.plane, at=p),
                            (i, (i + 1) % len(faces))))
    return PolygonGamma(faces, tuple(verts), k)


def gamma_k3(k: int) -> PolygonGamma:
    """Faces P1: z1 = eps z2, P2: z1 = z2, P3: z2 = z3.

    Vertex order follows v1 = P2 cap P3, v2 = P3 cap P1, v3 = P1 cap P2,
    with angles (pi/3, pi/3, pi/k).
    """
    if int(k) != k or k < 3:
        raise ValueError(f"k must be an integer >= 3, got {k}")
    eps = np.exp(2j * np.pi / k)
    P1 = Face("P1", "complex", ComplexLineCP2.from_equation([1, -eps, 0]))
    P2 = Face("P2", "complex", ComplexLineCP2.from_equation([1, -1, 0]))
    P3 = Face("P3", "complex", ComplexLineCP2.from_equation([0, 1, -1]))
    return polygon_from_faces((P2, P3, P1), k)


# --------------------------------------------------------------------------
# reflections


@dataclass(frozen=True)
class UnitaryReflection:
    matrix: np.ndarray
    line: ComplexLineCP2
    word: str

    def __post_init__(self):
        M = self.matrix
        if np.max(np.abs(M @ M - np.eye(3))) > 1e-11:
            raise ValueError("reflection does not square to the identity")
        if np.max(np.abs(M.conj().T @ M - np.eye(3))) > 1e-11:
            raise ValueError("reflection is not unitary")
        if np.max(np.abs(M @ self.line.span.T - self.line.span.T)) > 1e-11:
            raise ValueError("reflection does not fix its line")


FACE_WORDS = {"P1": "1", "P2": "2", "P3": "3"}


def reflection_matrix(face: Face) -> UnitaryReflection:
    """I - 2 n n^H for the unit normal n of a complex face."""
    M = complex_reflection_matrix(face.plane)
    return UnitaryReflection(M, face.plane, FACE_WORDS.get(face.name, face.name))


def generators_k3(k: int, perturb: float = 0.0):
    """(r1, r2, r3) as matrices; ``perturb`` adds a non-unitary error to r1."""
    poly = gamma_k3(k)
    by_name = {f.name: reflection_matrix(f).matrix for f in poly.faces}
    r1 = by_name["P1"].copy()
    if perturb:
        r1 = r1 + perturb * np.array([[1, 0, 0], [0, 0, 0], [0, 0, 0]])
    return {"1": r1, "2": by_name["P2"], "3": by_name["P3"]}


# --------------------------------------------------------------------------
# closure


def canonical_key(M) -> bytes:
    """Entries rounded to 8 decimals, real/imag interleaved."""
    M = np.asarray(M)
    if np.iscomplexobj(M):
        flat = np.stack([M.real, M.imag], -1).ravel()
    else:
        flat = M.ravel()
    return (np.round(flat, KEY_DIGITS) + 0.0).tobytes()


@dataclass
class GroupClosure:
    elements: np.ndarray
    words: list
    generators: dict
    diameter: int
    min_separation: float
    conj_flags: np.ndarray | None = None

    @property
    def order(self) -> int:
        return len(self.words)


def close_group(generators: dict, tolerance: float = 1e-8, bound: int = 10_000,
                antilinear=()) -> GroupClosure:
    """Breadth-first closure of a generator set.

    Elements are compared as matrices (no projectivization).  Names in
    ``antilinear`` mark generators acting as z -> M conj(z); products
    then carry a conjugation flag.
    """
    names = list(generators)
    mats = {n: np.asarray(generators[n]) for n in names}
    flags = {n: n in antilinear for n in names}
    dim = next(iter(mats.values())).shape[0]
    dtype = complex if any(np.iscomplexobj(m) for m in mats.values()) else float
    eye = np.eye(dim, dtype=dtype)

    def key(M, f):
        return canonical_key(M) + (b"c" if f else b"l")

    seen = {key(eye, False): 0}
    elems, conj, words, depth = [eye], [False], [""], [0]
    queue = deque([0])
    while queue:
        i = queue.popleft()
        A, a = elems[i], conj[i]
        for n in names:
            B, b = mats[n], flags[n]
            C = A @ (np.conj(B) if a else B)
            c = a != b
            kk = key(C, c)
            if kk in seen:
                continue
            if len(elems) >= bound:
                raise GroupTooLargeError(
                    f"closure exceeded {bound} elements (infinite group or tolerance too loose)")
            seen[kk] = len(elems)
            elems.append(C)
            conj.append(c)
            words.append(words[i] + n)
            depth.append(depth[i] + 1)
            queue.append(len(elems) - 1)
    E = np.array(elems)
    sep = _min_separation(E, np.array(conj))
    if sep < 1e-4:
        raise InconsistencyError(f"group elements only {sep:.2e} apart; keys unreliable")
    return GroupClosure(E, words, mats, max(depth), sep,
                        np.array(conj) if antilinear else None)


def _min_separation(E, conj):
    n = len(E)
    if n < 2:
        return np.inf
    flat = E.reshape(n, -1)
    best = np.inf
    for i in range(0, n, 256):
        d = np.abs(flat[i:i + 256, None, :] - flat[None, :, :]).max(-1)
        same = conj[i:i + 256, None] == conj[None, :]
        idx = np.arange(i, min(i + 256, n))
        d[idx - i, idx] = np.inf
        d[~same] = np.inf
        best = min(best, float(d.min()))
    return best


def relation_words(k: int):
    return {
        "r1^2": "11", "r2^2": "22", "r3^2": "33",
        "(r2r3)^3": "23" * 3, "(r3r1)^3": "31" * 3,
        f"(r1r2)^{k}": "12" * k, "(r1r2r3r2)^3": "1232" * 3,
    }


def evaluate_word(word: str, generators: dict) -> np.ndarray:
    M = np.eye(3, dtype=complex)
    for ch in word:
        M = M @ generators[ch]
    return M


def verify_relations(k: int, generators: dict | None = None) -> dict:
    """Distance to the identity of every defining relation."""
    gens = generators_k3(k) if generators is None else generators
    return {name: float(np.max(np.abs(evaluate_word(w, gens) - np.eye(3))))
            for name, w in relation_words(k).items()}


def center_order(group: GroupClosure, tol: float = 1e-9) -> int:
    gens = list(group.generators.values())
    E = group.elements
    ok = np.ones(len(E), dtype=bool)
    for G in gens:
        ok &= np.max(np.abs(E @ G - G @ E), axis=(-2, -1)) < tol
    return int(ok.sum())


def element_order(M, limit: int = 1000) -> int | None:
    A = np.array(M)
    P = A.copy()
    for n in range(1, limit + 1):
        if np.max(np.abs(P - np.eye(len(A)))) < 1e-9:
            return n
        P = P @ A
    return None


# --------------------------------------------------------------------------
# finiteness


@dataclass(frozen=True)
class VertexFiniteness:
    angle: float
    rational: bool
    fraction: Fraction | None
    dihedral_order: int | None


def rational_multiple_of_2pi(angle: float, max_denominator: int = 1000, tol: float = 1e-10):
    x = angle / (2 * np.pi)
    f = Fraction(x).limit_denominator(max_denominator)
    return (f if abs(float(f) - x) < tol else None)


def _vertex_generators(polygon: PolygonGamma, v: Vertex):
    faces = [polygon.faces[i] for i in v.faces]
    if all(f.kind == "complex" for f in faces):
        return {str(i): complex_reflection_matrix(f.plane) for i, f in enumerate(faces)}
    mats = {}
    for i, f in enumerate(faces):
        if f.kind == "complex":
            mats[str(i)] = complex_matrix_to_real(complex_reflection_matrix(f.plane))
        else:
            mats[str(i)] = reflect_anti_slag_matrix(f.plane)
    return mats


def finiteness_test(polygon: PolygonGamma, max_denominator: int = 1000):
    """Per-vertex rationality of the angle and dihedral order of the
    vertex stabilizer; overall finite-type flag (all vertices rational)."""
    out = []
    for v in polygon.vertices:
        frac = rational_multiple_of_2pi(v.angle, max_denominator)
        order = None
        if frac is not None:
            gens = _vertex_generators(polygon, v)
            order = close_group(gens, bound=4 * max_denominator).order
        out.append(VertexFiniteness(v.angle, frac is not None, frac, order))
    return out, all(o.rational for o in out)


def mixed_vertex_rotation(L: Lagrangian3Plane, P: ComplexLineCP2) -> float:
    """Rotation angle of r_L r_P (as a real 6x6 map) at a mixed vertex;
    measured numerically, no closed form is assumed."""
    M = reflect_anti_slag_matrix(L) @ complex_matrix_to_real(complex_reflection_matrix(P))
    ev = np.linalg.eigvals(M)
    angles = np.abs(np.angle(ev))
    nontrivial = angles[angles > 1e-9]
    return float(nontrivial.min()) if len(nontrivial) else 0.0


# --------------------------------------------------------------------------
# tessellation


@dataclass
class TessellationReport:
    k: int
    order: int
    relations_residual: float
    center: int
    faces: int
    vertices: int
    edges: int
    orbits: tuple
    chi: int
    chi_vef: int
    chi_gauss_bonnet: int
    total_curvature: float
    genus: int
    lift_degree: int
    lifted_genus: int
    lifted_genus_covering: int
    diameter: int
    min_separation: float
    checks: dict = field(default_factory=dict)

    def as_dict(self):
        d = {k: getattr(self, k) for k in (
            "k", "order", "relations_residual", "center", "faces", "vertices", "edges",
            "chi", "chi_vef", "chi_gauss_bonnet", "total_curvature", "genus",
            "lift_degree", "lifted_genus", "lifted_genus_covering", "diameter",
            "min_separation")}
        d["orbits"] = list(self.orbits)
        d["checks"] = dict(self.checks)
        return d


def _probe_vector():
    rng = np.random.default_rng(12345)
    q = rng.normal(size=3) + 1j * rng.normal(size=3)
    return q / np.linalg.norm(q)


def _vkey(v):
    return (np.round(np.stack([v.real, v.imag], -1).ravel(), KEY_DIGITS - 1) + 0.0).tobytes()


def tessellation_report(k: int, group: GroupClosure | None = None) -> TessellationReport:
    """Counts of the tessellation by translates of Gamma_{k,3}, from closed
    forms and from orbit enumeration, with three evaluations of chi."""
    poly = gamma_k3(k)
    gens = generators_k3(k)
    G = close_group(gens, bound=10 * 6 * k * k) if group is None else group
    q = _probe_vector()
    images = G.elements @ q
    face_keys = {_vkey(v) for v in images}
    # vertex i is stabilized by the dihedral group of its two faces
    names = {"P1": "1", "P2": "2", "P3": "3"}
    orbit_sizes = []
    for v in poly.vertices:
        pair = [names[poly.faces[i].name] for i in v.faces]
        D = close_group({p: gens[p] for p in pair}, bound=4 * k).elements
        keys = set()
        for g in G.elements:
            keys.add(frozenset(_vkey(x) for x in (g @ D) @ q))
        orbit_sizes.append(len(keys))
    edge_keys = set()
    for n in ("1", "2", "3"):
        rq = gens[n] @ q
        for g in G.elements:
            edge_keys.add(frozenset((_vkey(g @ q), _vkey(g @ rq))))
    F, V, E = len(face_keys), sum(orbit_sizes), len(edge_keys)
    # Gauss-Bonnet over the fundamental triangle, exact in units of pi
    angle_sum = sum(rational_multiple_of_2pi(v.angle) * 2 for v in poly.vertices)
    per_triangle = angle_sum - 1  # (sum of angles - pi) / pi
    total = per_triangle * G.order  # in units of pi
    chi_gb = total / 2
    if chi_gb.denominator != 1:
        raise InconsistencyError("Gauss-Bonnet total is not an integer multiple of 2 pi")
    chi_formula = k * (3 - k)
    genus = 1 + k * (k - 3) // 2
    lift = 3 if k % 3 == 0 else 1
    rel = max(verify_relations(k, gens).values())
    report = TessellationReport(
        k=k, order=G.order, relations_residual=rel, center=center_order(G), faces=F,
        vertices=V, edges=E, orbits=tuple(orbit_sizes), chi=chi_formula, chi_vef=V - E + F,
        chi_gauss_bonnet=int(chi_gb), total_curvature=float(total) * np.pi, genus=genus,
        lift_degree=lift, lifted_genus=lift * genus if lift == 3 else genus,
        lifted_genus_covering=1 + lift * (genus - 1), diameter=G.diameter,
        min_separation=G.min_separation)
    expected = {
        "order": (G.order, 6 * k * k),
        "faces": (F, 6 * k * k),
        "vertices": (V, 3 * k + 2 * k * k),
        "orbits": (tuple(orbit_sizes), (k * k, k * k, 3 * k)),
        "center": (report.center, gcd(3, k)),
        "chi_vef": (report.chi_vef, chi_formula),
        "chi_gauss_bonnet": (report.chi_gauss_bonnet, chi_formula),
    }
    report.checks = {name: a == b for name, (a, b) in expected.items()}
    bad = [n for n, ok in report.checks.items() if not ok]
    if bad:
        raise InconsistencyError(f"enumeration disagrees with closed form: {bad}")
    return report


def enlarged_group_order(k: int, bound: int = 100_000) -> int:
    """Order of G_{k,3} extended by complex conjugation (the reflection in
    the real plane RP^2); reported only."""
    gens = generators_k3(k)
    gens["c"] = np.eye(3, dtype=complex)
    return close_group(gens, bound=bound, antilinear=("c",)).order
