"""Porous journal bearing: Laplace equation in the annular matrix coupled to the
surface Reynolds equation on the film side ``rho = R2``.

The discretization is vertex centred on a tensor grid in ``(rho, theta, y)``
and follows the weak form edge by edge, so the Reynolds equation enters the
outer-surface rows as a natural boundary condition:

    a(u, v) = int (u_r v_r + u_t v_t / r^2 + u_y v_y) r dr dt dy
            + int h^3 (k1 u_t v_t + k2 u_y v_y) R2 dt dy          (r = R2)
    <f, v>  = int k3 h'(t) v R2 dt dy                              (r = R2)

Volume integrals use the trapezoid rule per direction, surface fluxes in
``theta`` sample ``h^3`` at edge midpoints. Nodes on ``rho = R1``, ``y = 0``
and ``y = L`` carry zero pressure and are eliminated.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .geometry import BearingGeometry, film_height_journal, film_height_journal_derivative, reynolds_coefficients
from .obstacle import ObstacleProblem, SolveReport, projected_sor

log = logging.getLogger(__name__)


class ConvergenceError(RuntimeError):
    """Iterative solver stopped before reaching its tolerance."""

    def __init__(self, message, iterations=None, residual=None, field=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual
        self.field = field


@dataclass(frozen=True)
class CylindricalGrid:
    n_rho: int
    n_theta: int
    n_y: int
    R1: float
    R2: float
    L: float

    def __post_init__(self):
        if self.n_rho < 3 or self.n_theta < 8 or self.n_y < 3:
            raise ValueError(
                f"grid too coarse: need n_rho >= 3, n_theta >= 8, n_y >= 3 "
                f"(got {self.n_rho}, {self.n_theta}, {self.n_y})"
            )
        if not 0.0 < self.R1 < self.R2 or not self.L > 0.0:
            raise ValueError("grid needs 0 < R1 < R2 and L > 0")

    @classmethod
    def for_geometry(cls, geom: BearingGeometry, n_rho=33, n_theta=128, n_y=33) -> "CylindricalGrid":
        return cls(n_rho, n_theta, n_y, geom.R1, geom.R2, geom.L)

    def refined(self) -> "CylindricalGrid":
        """Dyadic refinement; every old node stays a node."""
        return CylindricalGrid(
            2 * self.n_rho - 1, 2 * self.n_theta, 2 * self.n_y - 1, self.R1, self.R2, self.L
        )

    @property
    def shape(self):
        return (self.n_rho, self.n_theta, self.n_y)

    @property
    def d_rho(self) -> float:
        return (self.R2 - self.R1) / (self.n_rho - 1)

    @property
    def d_theta(self) -> float:
        return 2.0 * math.pi / self.n_theta

    @property
    def d_y(self) -> float:
        return self.L / (self.n_y - 1)

    @property
    def rho(self) -> np.ndarray:
        return np.linspace(self.R1, self.R2, self.n_rho)

    @property
    def theta(self) -> np.ndarray:
        return np.arange(self.n_theta) * self.d_theta

    @property
    def y(self) -> np.ndarray:
        return np.linspace(0.0, self.L, self.n_y)

    def active_mask(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        mask[1:, :, 1:-1] = True
        return mask


@dataclass
class PressureField:
    """Nodal pressure on the full grid (Dirichlet nodes included, equal to 0)."""

    values: np.ndarray
    grid: CylindricalGrid
    iterations: int = 0
    residual: float = 0.0
    converged: bool = True
    report: SolveReport | None = field(default=None, repr=False)

    @property
    def surface(self) -> np.ndarray:
        """Film pressure on ``rho = R2``, shape ``(n_theta, n_y)``."""
        return self.values[-1]

    def at(self, i, j, k):
        return self.values[i, np.mod(j, self.grid.n_theta), k]


@dataclass
class CoupledSystem:
    A: sp.csr_matrix
    b: np.ndarray
    grid: CylindricalGrid
    geom: BearingGeometry
    active: np.ndarray  # flat full-grid index of each unknown
    surface: np.ndarray  # bool per unknown, True on rho = R2
    norm_matrix: sp.csr_matrix = field(repr=False)

    @property
    def n(self) -> int:
        return self.b.size

    def to_field(self, u, **info) -> PressureField:
        full = np.zeros(self.grid.shape)
        full.reshape(-1)[self.active] = u
        return PressureField(full, self.grid, **info)

    def restrict(self, u) -> np.ndarray:
        if isinstance(u, PressureField):
            return u.values.reshape(-1)[self.active].copy()
        u = np.asarray(u, dtype=float)
        if u.shape == self.grid.shape:
            return u.reshape(-1)[self.active].copy()
        if u.shape != self.b.shape:
            raise ValueError(f"vector of shape {u.shape} does not match the system")
        return u


def _edges(grid: CylindricalGrid, coef, film_weight):
    """Edge list ``(p, q, w)`` of the discrete form with ``h^3`` replaced by
    ``film_weight(theta)`` in the surface terms."""
    nr, nt, ny = grid.shape
    dr, dt, dy = grid.d_rho, grid.d_theta, grid.d_y
    rho, theta = grid.rho, grid.theta
    wr = np.full(nr, dr)
    wr[[0, -1]] = 0.5 * dr
    wy = np.full(ny, dy)
    wy[[0, -1]] = 0.5 * dy
    idx = np.arange(nr * nt * ny).reshape(nr, nt, ny)

    ps, qs, ws = [], [], []

    # rho edges
    rmid = 0.5 * (rho[1:] + rho[:-1])
    w = (rmid / dr)[:, None, None] * dt * wy[None, None, :]
    ps.append(idx[:-1].ravel())
    qs.append(idx[1:].ravel())
    ws.append(np.broadcast_to(w, idx[:-1].shape).ravel())

    # theta edges, periodic
    w = (wr / (rho * dt))[:, None, None] * np.ones((1, nt, 1)) * wy[None, None, :]
    w = w.copy()
    tmid = theta + 0.5 * dt
    w[-1] += (coef.k1 * grid.R2 / dt) * film_weight(tmid)[:, None] * wy[None, :]
    ps.append(idx.ravel())
    qs.append(np.roll(idx, -1, axis=1).ravel())
    ws.append(w.ravel())

    # y edges
    w = (rho * wr * dt / dy)[:, None, None] * np.ones((1, nt, ny - 1))
    w = w.copy()
    w[-1] += (coef.k2 * grid.R2 * dt / dy) * film_weight(theta)[:, None]
    ps.append(idx[:, :, :-1].ravel())
    qs.append(idx[:, :, 1:].ravel())
    ws.append(w.ravel())

    return np.concatenate(ps), np.concatenate(qs), np.concatenate(ws)


def _edge_matrix(p, q, w, n):
    rows = np.concatenate([p, q, p, q])
    cols = np.concatenate([p, q, q, p])
    vals = np.concatenate([w, w, -w, -w])
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def assemble_coupled_system(geom: BearingGeometry, grid: CylindricalGrid) -> CoupledSystem:
    """Sparse SPD system of the coupled Laplace/Reynolds problem."""
    if (grid.R1, grid.R2, grid.L) != (geom.R1, geom.R2, geom.L):
        raise ValueError("grid does not match the bearing geometry")
    coef = reynolds_coefficients(geom)
    n_full = grid.n_rho * grid.n_theta * grid.n_y

    h3 = lambda t: film_height_journal(t, geom) ** 3  # noqa: E731
    A_full = _edge_matrix(*_edges(grid, coef, h3), n_full)
    N_full = _edge_matrix(*_edges(grid, coef, np.ones_like), n_full)

    mask = grid.active_mask()
    active = np.flatnonzero(mask.ravel())
    A = A_full[active][:, active].tocsr()
    Nm = N_full[active][:, active].tocsr()

    wy = np.full(grid.n_y, grid.d_y)
    load = np.zeros(grid.shape)
    load[-1] = (coef.k3 * grid.R2 * grid.d_theta) * film_height_journal_derivative(grid.theta, geom)[:, None] * wy
    b = load.ravel()[active]

    surf = np.zeros(grid.shape, dtype=bool)
    surf[-1] = True
    return CoupledSystem(A, b, grid, geom, active, surf.ravel()[active], Nm)


def solve_bilateral(sys: CoupledSystem, tol: float = 1e-10, maxiter: int | None = None) -> PressureField:
    """Jacobi-preconditioned conjugate gradients on ``A u = b``."""
    if not np.any(sys.b):
        return sys.to_field(np.zeros(sys.n))
    precond = sp.diags(1.0 / sys.A.diagonal())
    count = [0]

    def tick(_):
        count[0] += 1

    u, info = spla.cg(sys.A, sys.b, rtol=tol, atol=0.0, maxiter=maxiter or 10 * sys.n, M=precond, callback=tick)
    res = float(np.linalg.norm(sys.A @ u - sys.b) / np.linalg.norm(sys.b))
    if info != 0:
        raise ConvergenceError(
            f"CG stopped after {count[0]} iterations, relative residual {res:.3e}",
            iterations=count[0],
            residual=res,
            field=sys.to_field(u, iterations=count[0], residual=res, converged=False),
        )
    return sys.to_field(u, iterations=count[0], residual=res)


def solve_unilateral(
    sys: CoupledSystem,
    tol: float = 1e-10,
    maxit: int = 200_000,
    omega: float = 1.5,
    x0=None,
    record_trace: bool = False,
) -> PressureField:
    """Projected SOR with ``u >= 0`` imposed on the film surface only.

    Matrix pressure below the surface is left unconstrained.
    """
    problem = obstacle_problem(sys)
    if not np.any(sys.b) and x0 is None:
        u = np.zeros(sys.n)
        report = SolveReport(0, 0.0, 0.0, 0.0, True)
        return sys.to_field(u, report=report)
    u, report = projected_sor(problem, omega=omega, tol=tol, maxit=maxit, x0=x0, record_trace=record_trace)
    out = sys.to_field(u, iterations=report.iterations, residual=report.final_change, converged=report.converged, report=report)
    if not report.converged:
        raise ConvergenceError(
            f"projected SOR exhausted {maxit} sweeps, last change {report.final_change:.3e}",
            iterations=report.iterations,
            residual=report.final_change,
            field=out,
        )
    return out


def obstacle_problem(sys: CoupledSystem) -> ObstacleProblem:
    return ObstacleProblem(sys.A, sys.b, sys.surface)


def functional_J(sys: CoupledSystem, u) -> float:
    """Discrete ``J(u) = u.A u - 2 b.u`` (twice the obstacle energy)."""
    u = sys.restrict(u)
    return float(u @ (sys.A @ u)) - 2.0 * float(sys.b @ u)


def h100_norm(sys: CoupledSystem, u) -> float:
    """Discrete energy norm: volume gradient plus ``k1``/``k2`` surface
    gradient, without the film-height weight."""
    u = sys.restrict(u)
    return math.sqrt(max(float(u @ (sys.norm_matrix @ u)), 0.0))


def coercivity_constant(geom: BearingGeometry) -> float:
    return min(1.0, (geom.c * (1.0 - geom.eps)) ** 3)


def continuity_constant(geom: BearingGeometry) -> float:
    return max(1.0, (geom.c * (1.0 + geom.eps)) ** 3)


def interior_laplacian_residual(fld: PressureField, i, j, k, stride: int = 1):
    """Seven-point cylindrical Laplacian of ``fld`` at nodes ``(i, j, k)``.

    ``stride`` multiplies the stencil spacing; with ``stride = 1`` this is the
    interior row of the assembled system divided by the cell volume.
    """
    g = fld.grid
    i, j, k = (np.asarray(a) for a in (i, j, k))
    s = stride
    if np.any(i - s < 0) or np.any(i + s > g.n_rho - 1) or np.any(k - s < 0) or np.any(k + s > g.n_y - 1):
        raise ValueError("stencil leaves the grid")
    p = fld.at
    r = g.rho[i]
    hr, ht, hy = s * g.d_rho, s * g.d_theta, s * g.d_y
    c = p(i, j, k)
    lap = (p(i + s, j, k) - 2.0 * c + p(i - s, j, k)) / hr**2
    lap += (p(i + s, j, k) - p(i - s, j, k)) / (2.0 * r * hr)
    lap += (p(i, j + s, k) - 2.0 * c + p(i, j - s, k)) / (r * ht) ** 2
    lap += (p(i, j, k + s) - 2.0 * c + p(i, j, k - s)) / hy**2
    return lap


def surface_residual(fld: PressureField, geom: BearingGeometry) -> np.ndarray:
    """Strong-form residual ``p_r - k1 (h^3 p_t)_t - k2 (h^3 p_y)_y - k3 h'``
    on the film surface, shape ``(n_theta, n_y - 2)``.

    ``p_r`` is the one-sided first-order difference, so the residual of a
    converged solution is O(d_rho).
    """
    g = fld.grid
    coef = reynolds_coefficients(geom)
    P = fld.values
    ps = P[-1]
    dr, dt, dy = g.d_rho, g.d_theta, g.d_y
    p_r = (ps - P[-2]) / dr
    hm = film_height_journal(g.theta + 0.5 * dt, geom) ** 3
    flux_t = hm[:, None] * (np.roll(ps, -1, axis=0) - ps) / dt
    div_t = (flux_t - np.roll(flux_t, 1, axis=0)) / dt
    h3 = film_height_journal(g.theta, geom) ** 3
    div_y = h3[:, None] * (ps[:, 2:] - 2.0 * ps[:, 1:-1] + ps[:, :-2]) / dy**2
    rhs = coef.k3 * film_height_journal_derivative(g.theta, geom)
    res = p_r[:, 1:-1] - coef.k1 * div_t[:, 1:-1] - coef.k2 * div_y - rhs[:, None]
    return res
