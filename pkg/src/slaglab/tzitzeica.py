"""Newton solver for Lap u + e^{2u} - 2 lam^2 e^{-4u} = 0 on flat tori and
rectangles, with optional logarithmic point sources.

Sources are split off explicitly: u = v + S with S = sum_i beta_i G(z - p_i),
where G is the periodic Green function on a torus (Lap G = 2 pi delta -
2 pi / area) and ln|z - p| on a rectangle.  Only the smooth part v lives
on the grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

HEX_OMEGA = np.exp(1j * np.pi / 3)


class SolverDivergenceError(RuntimeError):
    def __init__(self, message, history):
        super().__init__(message)
        self.history = history


@dataclass(frozen=True)
class FlatDomain:
    """Torus C / (Z + omega Z) sampled with n nodes per period, or a
    rectangle [0, width] x [0, height] with nx x ny nodes (boundary
    included)."""

    kind: str
    n: int = 64
    omega: complex = HEX_OMEGA
    width: float = 1.0
    height: float = 1.0
    ny: int | None = None

    def __post_init__(self):
        if self.kind not in ("torus", "rectangle"):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if self.n < 16 or (self.ny is not None and self.ny < 16):
            raise ValueError("resolution must be at least 16")
        if self.kind == "torus" and complex(self.omega).imag <= 0:
            raise ValueError("omega must lie in the upper half-plane")
        if self.kind == "rectangle" and (self.width <= 0 or self.height <= 0):
            raise ValueError("rectangle sides must be positive")

    @classmethod
    def hex_torus(cls, n=64):
        return cls("torus", n, HEX_OMEGA)

    @classmethod
    def rectangle(cls, width, height, nx, ny=None):
        return cls("rectangle", nx, width=width, height=height, ny=ny or nx)

    @property
    def shape(self):
        return (self.n, self.n) if self.kind == "torus" else (self.n, self.ny or self.n)

    @property
    def spacing(self) -> float:
        if self.kind == "torus":
            return 1.0 / self.n
        nx, ny = self.shape
        return max(self.width / (nx - 1), self.height / (ny - 1))

    @property
    def is_hexagonal(self) -> bool:
        return self.kind == "torus" and abs(self.omega - HEX_OMEGA) < 1e-14

    def nodes(self) -> np.ndarray:
        """Complex node positions, shape ``shape``."""
        nx, ny = self.shape
        if self.kind == "torus":
            s, t = np.meshgrid(np.arange(nx) / nx, np.arange(ny) / ny, indexing="ij")
            return s + t * self.omega
        X, Y = np.meshgrid(np.linspace(0, self.width, nx), np.linspace(0, self.height, ny),
                           indexing="ij")
        return X + 1j * Y

    def area(self) -> float:
        return self.omega.imag if self.kind == "torus" else self.width * self.height


@dataclass(frozen=True)
class SingularSource:
    points: tuple = ()  # ((location: complex, beta: float), ...)

    def __post_init__(self):
        locs = [complex(p) for p, _ in self.points]
        for a in range(len(locs)):
            for b in range(a + 1, len(locs)):
                if abs(locs[a] - locs[b]) < 1e-12:
                    raise ValueError("source points must be distinct")
        object.__setattr__(self, "points", tuple((complex(p), float(b)) for p, b in self.points))

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class PdeProblem:
    domain: FlatDomain
    lam: float = 1.0
    sources: SingularSource = field(default_factory=SingularSource)
    boundary: object = None  # rectangle only: constant, array or callable(z)

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if self.domain.kind == "rectangle" and self.boundary is None:
            object.__setattr__(self, "boundary", constant_solution(self.lam))

    def boundary_values(self) -> np.ndarray:
        z = self.domain.nodes()
        b = self.boundary
        if callable(b):
            return np.asarray(b(z), float)
        return np.broadcast_to(np.asarray(b, float), z.shape).copy()


def constant_solution(lam: float) -> float:
    return np.log(2 * lam**2) / 6


# --------------------------------------------------------------------------
# discrete Laplacians


def laplacian_matrix(domain: FlatDomain) -> sp.csr_matrix:
    """Sparse Laplacian acting on row-major node values.

    Hexagonal torus: 7-point stencil (2/(3h^2)) sum over the six
    neighbours.  Other tori: 9-point stencil in lattice coordinates.
    Rectangle: 5-point stencil on interior nodes, identity rows on the
    boundary (Dirichlet).
    """
    nx, ny = domain.shape
    N = nx * ny
    idx = np.arange(N).reshape(nx, ny)

    def shift(di, dj):
        cols = np.roll(np.roll(idx, -di, 0), -dj, 1).ravel()
        return sp.csr_matrix((np.ones(N), (np.arange(N), cols)), shape=(N, N))

    if domain.kind == "torus":
        h = 1.0 / nx
        if domain.is_hexagonal:
            nbrs = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1)]
            L = sum(shift(*d) for d in nbrs) - 6 * sp.identity(N)
            return (2 / (3 * h * h) * L).tocsr()
        a, b = domain.omega.real, domain.omega.imag
        css = 1 + a * a / (b * b)
        ctt = 1 / (b * b)
        cst = -2 * a / (b * b)
        Dss = (shift(1, 0) - 2 * sp.identity(N) + shift(-1, 0)) / h**2
        Dtt = (shift(0, 1) - 2 * sp.identity(N) + shift(0, -1)) / h**2
        Dst = (shift(1, 1) - shift(1, -1) - shift(-1, 1) + shift(-1, -1)) / (4 * h * h)
        return (css * Dss + ctt * Dtt + cst * Dst).tocsr()
    hx = domain.width / (nx - 1)
    hy = domain.height / (ny - 1)
    rows, cols, vals = [], [], []
    for i in range(nx):
        for j in range(ny):
            k = idx[i, j]
            if i in (0, nx - 1) or j in (0, ny - 1):
                rows.append(k), cols.append(k), vals.append(0.0)
                continue
            rows += [k] * 5
            cols += [k, idx[i + 1, j], idx[i - 1, j], idx[i, j + 1], idx[i, j - 1]]
            vals += [-2 / hx**2 - 2 / hy**2, 1 / hx**2, 1 / hx**2, 1 / hy**2, 1 / hy**2]
    return sp.csr_matrix((vals, (rows, cols)), shape=(N, N))


# --------------------------------------------------------------------------
# source terms


def theta1(z, tau, terms: int = 30):
    """Jacobi theta_1(z | tau) by its q-series, q = exp(i pi tau)."""
    q = np.exp(1j * np.pi * tau)
    z = np.asarray(z, complex)
    out = np.zeros_like(z)
    for n in range(terms):
        out = out + (-1) ** n * q ** ((n + 0.5) ** 2) * np.sin((2 * n + 1) * z)
    return 2 * out


def reduce_to_cell(z, omega):
    """Representative of z mod (Z + omega Z) nearest to the origin cell."""
    z = np.asarray(z, complex)
    t = np.round(z.imag / omega.imag)
    z = z - t * omega
    return z - np.round(z.real)


def torus_green(z, omega):
    """ln|theta_1(pi z | omega)| - pi Im(z)^2 / Im(omega): doubly periodic,
    Lap G = 2 pi delta - 2 pi / Im(omega)."""
    w = reduce_to_cell(z, omega)
    return np.log(np.abs(theta1(np.pi * w, omega))) - np.pi * w.imag**2 / omega.imag


def source_field(problem: PdeProblem, z=None):
    """(S, Lap S away from the sources) at the nodes or at points ``z``."""
    d = problem.domain
    z = d.nodes() if z is None else np.asarray(z, complex)
    S = np.zeros(z.shape)
    lapS = 0.0
    for p, beta in problem.sources.points:
        if d.kind == "torus":
            r = np.abs(reduce_to_cell(z - p, d.omega))
            if np.min(r) < 1e-12:
                raise ValueError(f"source {p} coincides with a grid node")
            S = S + beta * torus_green(z - p, d.omega)
            lapS = lapS - 2 * np.pi * beta / d.omega.imag
        else:
            r = np.abs(z - p)
            if np.min(r) < 1e-12:
                raise ValueError(f"source {p} coincides with a grid node")
            S = S + beta * np.log(r)
    return S, lapS


# --------------------------------------------------------------------------
# residual and Newton


@dataclass(frozen=True)
class Residual:
    field: np.ndarray
    sup: float


class _Operator:
    """F(v) = L v + Lap S + e^{2u} - 2 lam^2 e^{-4u}, u = v + S."""

    def __init__(self, problem: PdeProblem):
        self.problem = problem
        self.domain = problem.domain
        self.L = laplacian_matrix(self.domain)
        self.S, self.lapS = source_field(problem)
        self.S = self.S.ravel()
        nx, ny = self.domain.shape
        if self.domain.kind == "rectangle":
            m = np.zeros((nx, ny), dtype=bool)
            m[1:-1, 1:-1] = True
            self.interior = m.ravel()
            self.bvals = problem.boundary_values().ravel() - self.S
        else:
            self.interior = np.ones(nx * ny, dtype=bool)
            self.bvals = None

    def lap(self, v):
        # rows of L sum to zero; shifting by a node value keeps constants exact
        return self.L @ (v - v[0])

    def F(self, v):
        lam2 = self.problem.lam**2
        u = v + self.S
        r = self.lap(v) + self.lapS + np.exp(2 * u) - 2 * lam2 * np.exp(-4 * u)
        if self.bvals is not None:
            r = np.where(self.interior, r, v - self.bvals)
        return r

    def jacobian(self, v):
        lam2 = self.problem.lam**2
        u = v + self.S
        d = 2 * np.exp(2 * u) + 8 * lam2 * np.exp(-4 * u)
        if self.bvals is not None:
            d = np.where(self.interior, d, 1.0)
        return (self.L + sp.diags(d)).tocsc()


def residual(problem: PdeProblem, v) -> Residual:
    """Pointwise residual of the regular part ``v`` (u = v + S)."""
    op = _Operator(problem)
    r = op.F(np.asarray(v, float).ravel())
    r = np.where(op.interior, r, 0.0).reshape(problem.domain.shape)
    return Residual(r, float(np.max(np.abs(r))))


@dataclass
class SolveResult:
    v: np.ndarray
    u: np.ndarray
    converged: bool
    iterations: int
    history: list

    @property
    def residual_sup(self) -> float:
        return self.history[-1]["residual_sup"]


def newton_solve(problem: PdeProblem, initial=None, tol: float = 1e-9,
                 max_iter: int = 50, max_halvings: int = 30, reference=None,
                 max_step: float = 0.5) -> SolveResult:
    """Damped Newton iteration; each accepted step strictly lowers the
    Euclidean residual norm.  ``reference`` (optional) records the
    sup-distance to a known solution in the history."""
    op = _Operator(problem)
    shape = problem.domain.shape
    if initial is None:
        initial = np.full(shape, constant_solution(problem.lam))
    v = np.asarray(initial, float).ravel() - op.S
    if op.bvals is not None:
        v = np.where(op.interior, v, op.bvals)
    r = op.F(v)
    norm = np.linalg.norm(r)
    history = []

    def record(it, damping):
        entry = {"iteration": it, "residual_sup": float(np.max(np.abs(r))),
                 "residual_l2": float(norm), "damping": damping}
        if reference is not None:
            entry["error_sup"] = float(np.max(np.abs(v + op.S - np.ravel(reference))))
        history.append(entry)

    record(0, None)
    for it in range(1, max_iter + 1):
        if history[-1]["residual_sup"] <= tol:
            break
        try:
            step = spla.splu(op.jacobian(v), permc_spec="MMD_AT_PLUS_A").solve(-r)
        except RuntimeError as exc:  # singular factorization
            raise SolverDivergenceError(f"singular Newton system: {exc}", history) from exc
        # cap the sup norm of a step; the exponentials punish overshoot
        t = min(1.0, max_step / max(float(np.max(np.abs(step))), 1e-300))
        for _ in range(max_halvings + 1):
            trial = v + t * step
            rt = op.F(trial)
            nt = np.linalg.norm(rt)
            if np.all(np.isfinite(rt)) and nt < norm:
                break
            t *= 0.5
        else:
            trial, rt, nt, t = _levenberg_marquardt(op, v, r, norm)
            if trial is None:
                raise SolverDivergenceError("line search failed to reduce the residual", history)
        v, r, norm = trial, rt, nt
        record(it, t)
    converged = history[-1]["residual_sup"] <= tol
    if not converged:
        raise SolverDivergenceError(
            f"no convergence after {max_iter} iterations "
            f"(residual {history[-1]['residual_sup']:.3e})", history)
    v = v.reshape(shape)
    return SolveResult(v, v + op.S.reshape(shape), True, len(history) - 1, history)


def _levenberg_marquardt(op, v, r, norm):
    """Fallback when the Newton direction is unusable (nearly singular,
    indefinite Jacobian): regularized Gauss-Newton steps, which are descent
    directions for |F|^2 once mu is large enough."""
    J = op.jacobian(v)
    JT = J.T.tocsc()
    A = (JT @ J).tocsc()
    g = JT @ r
    scale = float(abs(A.diagonal()).max())
    n = A.shape[0]
    for mu in scale * 10.0 ** np.arange(-8, 3):
        step = spla.spsolve(A + mu * sp.identity(n, format="csc"), -g)
        trial = v + step
        rt = op.F(trial)
        nt = np.linalg.norm(rt)
        if np.all(np.isfinite(rt)) and nt < norm:
            return trial, rt, nt, f"lm {mu / scale:.0e}"
    return None, None, None, None


def singular_solve(problem: PdeProblem, initial=None, **kw) -> SolveResult:
    """Solve for the regular part v; the full solution is v + S."""
    return newton_solve(problem, initial, **kw)


def curvature_of(problem: PdeProblem, u) -> np.ndarray:
    """K = -e^{-2u} Lap u with the solver's stencil (sources analytically)."""
    op = _Operator(problem)
    u = np.asarray(u, float).ravel()
    v = u - op.S
    lap = op.lap(v) + op.lapS
    K = -np.exp(-2 * u) * lap
    K = np.where(op.interior, K, np.nan)
    return K.reshape(problem.domain.shape)


def jacobian_check(problem: PdeProblem, u, direction, step: float = 1e-5,
                   tol: float = 1e-6):
    """Relative error between the analytic linearization and centered
    differences of the residual.  If the error at ``step`` exceeds
    ``tol`` a sweep of steps is tried.  Returns (error, step used)."""
    d = np.asarray(direction, float).ravel()
    if not np.any(d):
        raise ValueError("direction must be nonzero")
    op = _Operator(problem)
    v = np.asarray(u, float).ravel() - op.S
    Jd = op.jacobian(v) @ d

    def err(eps):
        fdiff = (op.F(v + eps * d) - op.F(v - eps * d)) / (2 * eps)
        return np.linalg.norm(fdiff - Jd) / np.linalg.norm(Jd)

    e = err(step)
    if e <= tol:
        return float(e), step
    best = (e, step)
    for eps in np.logspace(-8, -2, 13):
        ee = err(eps)
        if ee < best[0]:
            best = (ee, eps)
    return float(best[0]), float(best[1])


def interpolate_periodic(u, factor: int = 2):
    """Trigonometric interpolation of a periodic grid field onto a grid
    ``factor`` times finer."""
    nx, ny = u.shape
    U = np.fft.fft2(u)
    mx, my = nx * factor, ny * factor
    out = np.zeros((mx, my), complex)
    kx = np.fft.fftfreq(nx) * nx
    ky = np.fft.fftfreq(ny) * ny
    ix = np.where(kx >= 0, kx, mx + kx).astype(int)
    iy = np.where(ky >= 0, ky, my + ky).astype(int)
    out[np.ix_(ix, iy)] = U
    return np.real(np.fft.ifft2(out)) * factor * factor


def quadratic_tail_ratios(history, start: float = 1e-2, floor: float = 1e-15) -> list:
    """e_{k+1} / e_k^2 over the asymptotic tail: pairs with e_k <= start
    and e_{k+1} above the roundoff floor.  Needs ``reference`` in the solve."""
    e = [h["error_sup"] for h in history]
    return [b / a**2 for a, b in zip(e, e[1:]) if a <= start and b > floor]
