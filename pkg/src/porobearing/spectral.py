"""Long-bearing reduction: sine series, Dirichlet-to-Neumann map, Galerkin solve.

The porous layer is the rectangle ``(0, pi) x (0, a)`` with zero pressure on
three sides and the film on ``y = a``. The harmonic extension of a boundary
pressure ``P(x) = sum b_n sin(nx)`` is

    p(x, y) = sum b_n sinh(ny) / sinh(na) sin(nx)

and its normal flux at the film is ``sum n coth(na) b_n sin(nx)``, so in the
sine basis the matrix enters through a diagonal operator.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.fft
import scipy.linalg
import scipy.sparse as sp

from .geometry import LongBearingConfig, film_height_long, film_height_long_derivative
from .obstacle import ObstacleProblem, SolveReport, projected_sor

log = logging.getLogger(__name__)


class SpectralSolveError(RuntimeError):
    pass


@dataclass(frozen=True)
class Quadrature:
    """Composite Gauss-Legendre rule on ``[0, pi]``."""

    points: int = 8
    intervals: int = 64

    def nodes_weights(self, lo: float = 0.0, hi: float = math.pi):
        t, w = np.polynomial.legendre.leggauss(self.points)
        edges = np.linspace(lo, hi, self.intervals + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        x = (mid[:, None] + half[:, None] * t[None, :]).ravel()
        wx = (half[:, None] * w[None, :]).ravel()
        return x, wx

    def refined(self) -> "Quadrature":
        return Quadrature(self.points, 2 * self.intervals)


DEFAULT_QUAD = Quadrature()


@dataclass
class SineSeries:
    """Coefficients ``b_1..b_N`` of ``P(x) = sum b_n sin(nx)`` on ``[0, pi]``."""

    coeffs: np.ndarray
    quad_error: float = 0.0

    def __post_init__(self):
        self.coeffs = np.atleast_1d(np.asarray(self.coeffs, dtype=float))
        if self.coeffs.ndim != 1 or self.coeffs.size < 1:
            raise ValueError("a sine series needs at least one coefficient")
        if not np.all(np.isfinite(self.coeffs)):
            raise ValueError("sine coefficients must be finite")

    @property
    def N(self) -> int:
        return self.coeffs.size

    @property
    def modes(self) -> np.ndarray:
        return np.arange(1, self.N + 1, dtype=float)

    @property
    def truncation(self) -> float:
        """Magnitude of the last retained coefficient."""
        return float(abs(self.coeffs[-1]))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.sin(np.multiply.outer(x, self.modes)) @ self.coeffs

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        return np.cos(np.multiply.outer(x, self.modes)) @ (self.modes * self.coeffs)

    def h1_seminorm(self) -> float:
        """``(sum n^2 b_n^2)^(1/2)``."""
        return float(np.sqrt(np.sum(self.modes**2 * self.coeffs**2)))

    def l2_coefficient_norm(self) -> float:
        return float(np.sqrt(np.sum(self.coeffs**2)))


def sine_coefficients(P, N: int, quad: Quadrature = DEFAULT_QUAD, endpoint_tol: float = 1e-10) -> SineSeries:
    """Sine coefficients ``b_n = (2/pi) int_0^pi sin(n x) P(x) dx``.

    ``P`` is either a vectorized callable or an array of samples on the
    uniform grid ``linspace(0, pi, M)``. Callables are integrated with the
    composite Gauss-Legendre rule ``quad``; the difference to a rule with
    twice the intervals is stored in ``quad_error``. Samples go through a
    type-I discrete sine transform (trapezoid rule), which limits ``N`` to
    ``M - 2``.
    """
    if N < 1:
        raise ValueError(f"truncation order must be >= 1, got {N}")
    n = np.arange(1, N + 1)
    if callable(P):
        ends = np.asarray(P(np.array([0.0, math.pi])), dtype=float)
        if np.max(np.abs(ends)) > endpoint_tol:
            log.warning("P does not vanish at the endpoints: P(0)=%g, P(pi)=%g", ends[0], ends[1])

        def project(q):
            x, w = q.nodes_weights()
            return (2.0 / math.pi) * (np.sin(np.outer(n, x)) @ (w * np.asarray(P(x), dtype=float)))

        b = project(quad)
        err = float(np.max(np.abs(project(quad.refined()) - b)))
        return SineSeries(b, quad_error=err)

    samples = np.asarray(P, dtype=float)
    if samples.ndim != 1 or samples.size < 3:
        raise ValueError("nodal samples must be a 1-D array with at least 3 points")
    if max(abs(samples[0]), abs(samples[-1])) > endpoint_tol:
        log.warning("sampled P does not vanish at the endpoints: %g, %g", samples[0], samples[-1])
    m = samples.size - 2
    if N > m:
        raise ValueError(f"N={N} exceeds the {m} modes resolvable by {samples.size} samples")
    b = scipy.fft.dst(samples[1:-1], type=1) / (m + 1)
    return SineSeries(b[:N])


def _sinh_ratio(n, y, a):
    # sinh(n y) / sinh(n a) without overflow for large n a
    return np.exp(n * (y - a)) * np.expm1(-2.0 * n * y) / np.expm1(-2.0 * n * a)


def dirichlet_solve(series: SineSeries, a: float, x, y):
    """Harmonic extension of the film pressure into the porous layer.

    Evaluates ``sum b_n sinh(n y) sin(n x) / sinh(n a)`` for broadcastable
    ``x`` in ``[0, pi]`` and ``y`` in ``[0, a]``.
    """
    if not a > 0.0:
        raise ValueError(f"layer thickness must be positive, got {a}")
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    if np.any((x < 0.0) | (x > math.pi)) or np.any((y < 0.0) | (y > a)):
        raise ValueError("evaluation point outside the rectangle [0, pi] x [0, a]")
    n = series.modes
    ratio = _sinh_ratio(n, y[..., None], a)
    return np.sum(series.coeffs * ratio * np.sin(n * x[..., None]), axis=-1)


def dtn_symbol(N: int, a: float) -> np.ndarray:
    """``n coth(n a)`` for ``n = 1..N``."""
    if not a > 0.0:
        raise ValueError(f"layer thickness must be positive, got {a}")
    n = np.arange(1, N + 1, dtype=float)
    return n / np.tanh(n * a)


def dtn_map(series: SineSeries, a: float) -> SineSeries:
    """Sine coefficients of the film-side flux ``dp/dy(x, a)``."""
    return SineSeries(dtn_symbol(series.N, a) * series.coeffs)


@dataclass
class SpectralSystem:
    """Galerkin matrix and load of the long-bearing weak problem."""

    matrix: np.ndarray
    rhs: np.ndarray
    a: float
    N: int
    eps: float
    quad_error: float = 0.0


def _assemble(cfg, N, quad, forcing, porous):
    n = np.arange(1, N + 1, dtype=float)
    x, w = quad.nodes_weights()
    h3 = film_height_long(x, cfg) ** 3
    cos_nx = np.cos(np.outer(n, x))
    sin_nx = np.sin(np.outer(n, x))
    stiff = cfg.k1 * ((cos_nx * (w * h3)) @ cos_nx.T) * np.outer(n, n)
    stiff = 0.5 * (stiff + stiff.T)
    if porous:
        stiff[np.diag_indices(N)] += 0.5 * math.pi * dtn_symbol(N, cfg.a)
    if forcing is None:
        load = cfg.k3 * film_height_long_derivative(x, cfg)
    else:
        load = np.asarray(forcing(x), dtype=float)
    rhs = sin_nx @ (w * load)
    return stiff, rhs


def assemble_spectral_system(
    cfg: LongBearingConfig,
    N: int = 64,
    quad: Quadrature = DEFAULT_QUAD,
    forcing: Callable | None = None,
    porous: bool = True,
) -> SpectralSystem:
    """Assemble the Galerkin system in the basis ``sin(nx)``, ``n = 1..N``.

    ``matrix[n, k] = k1 int h^3 n k cos(nx) cos(kx) dx + (pi/2) n coth(na) delta_nk``
    and ``rhs[n] = int f(x) sin(nx) dx`` with ``f = k3 h'`` unless a
    ``forcing`` callable is given. ``porous=False`` drops the matrix term and
    gives the solid-bearing problem.
    """
    if N < 1:
        raise ValueError(f"truncation order must be >= 1, got {N}")
    stiff, rhs = _assemble(cfg, N, quad, forcing, porous)
    stiff2, rhs2 = _assemble(cfg, N, quad.refined(), forcing, porous)
    err = max(float(np.max(np.abs(stiff2 - stiff))), float(np.max(np.abs(rhs2 - rhs))))
    scale = max(1.0, float(np.max(np.abs(stiff))))
    if err > 1e-9 * scale:
        log.warning("quadrature not converged for N=%d: change %.3g under refinement", N, err)
    return SpectralSystem(stiff, rhs, cfg.a, N, cfg.eps, quad_error=err)


def small_eccentricity_system(a: float, N: int = 64, quad: Quadrature = DEFAULT_QUAD) -> SpectralSystem:
    """System of ``-P'' + DtN(P) = sin(2x)`` (``h = 1``)."""
    return assemble_spectral_system(LongBearingConfig(a=a, eps=0.0), N, quad, forcing=lambda x: np.sin(2.0 * x))


def solve_long_bearing(system: SpectralSystem, tol: float = 1e-10) -> SineSeries:
    """Cholesky solve of the Galerkin system."""
    try:
        factor = scipy.linalg.cho_factor(system.matrix, lower=True)
    except np.linalg.LinAlgError as exc:
        raise SpectralSolveError("Galerkin matrix is not positive definite; assembly bug") from exc
    b = scipy.linalg.cho_solve(factor, system.rhs)
    res = float(np.linalg.norm(system.matrix @ b - system.rhs))
    ref = max(float(np.linalg.norm(system.rhs)), np.finfo(float).tiny)
    if res > tol * ref and res > tol:
        raise SpectralSolveError(f"Galerkin residual {res:.3e} exceeds tolerance {tol:.1e}")
    series = SineSeries(b, quad_error=system.quad_error)
    log.debug("long bearing solved, N=%d, |b_N|=%.3e", system.N, series.truncation)
    return series


@dataclass
class CavitationProfile:
    x: np.ndarray
    P: np.ndarray
    report: SolveReport
    problem: ObstacleProblem

    @property
    def support(self) -> tuple[float, float]:
        """First and last node with ``P > 0``; ``(nan, nan)`` if ``P`` vanishes."""
        pos = np.flatnonzero(self.P > 0.0)
        if not pos.size:
            return (math.nan, math.nan)
        return float(self.x[pos[0]]), float(self.x[pos[-1]])

    @property
    def rupture_point(self) -> float:
        """Right end of the pressurized zone (last node with ``P > 0``)."""
        return self.support[1]


def assemble_nodal_system(
    cfg: LongBearingConfig,
    N: int = 64,
    M: int = 256,
    forcing: Callable | None = None,
) -> tuple[np.ndarray, ObstacleProblem]:
    """Nodal discretization for the cavitating long bearing.

    Piecewise-linear elements on ``M`` uniform nodes carry the local term
    ``int h^3 P' V'`` (midpoint rule per element). The matrix flux term is a
    dense block ``dx * S^T diag(n coth(na)) S`` with ``S`` the type-I
    discrete sine transform restricted to the first ``min(N, M-2)`` modes.
    Loads are lumped.
    """
    if M < 16:
        raise ValueError(f"need at least 16 grid nodes, got M={M}")
    if N < 1:
        raise ValueError(f"truncation order must be >= 1, got {N}")
    x = np.linspace(0.0, math.pi, M)
    dx = x[1] - x[0]
    m = M - 2
    xm = 0.5 * (x[1:] + x[:-1])
    kappa = cfg.k1 * film_height_long(xm, cfg) ** 3 / dx
    local = sp.diags(
        [kappa[:-1] + kappa[1:], -kappa[1:-1], -kappa[1:-1]], [0, -1, 1], shape=(m, m)
    ).toarray()

    modes = min(N, m)
    j = np.arange(1, m + 1)
    S = np.sin(np.outer(np.arange(1, modes + 1), j) * math.pi / (m + 1))
    # b = (2/(m+1)) S P ; pairing (pi/2) sum lam b c
    lam = dtn_symbol(modes, cfg.a)
    nonlocal_ = (0.5 * math.pi * (2.0 / (m + 1)) ** 2) * (S.T * lam) @ S
    A = local + nonlocal_
    A = 0.5 * (A + A.T)

    if forcing is None:
        f = cfg.k3 * film_height_long_derivative(x[1:-1], cfg)
    else:
        f = np.asarray(forcing(x[1:-1]), dtype=float)
    b = dx * f
    return x, ObstacleProblem(A, b, np.ones(m, dtype=bool))


def solve_long_bearing_cavitation(
    cfg: LongBearingConfig,
    N: int = 64,
    M: int = 256,
    tol: float = 1e-10,
    forcing: Callable | None = None,
    omega: float = 1.5,
    maxit: int = 200_000,
    record_trace: bool = False,
) -> CavitationProfile:
    """Film pressure ``P >= 0`` of the cavitating long bearing on ``M`` nodes."""
    x, problem = assemble_nodal_system(cfg, N, M, forcing)
    u, report = projected_sor(problem, omega=omega, tol=tol, maxit=maxit, record_trace=record_trace)
    if not report.converged:
        log.warning(
            "projected SOR stopped after %d sweeps, last change %.3e", report.iterations, report.final_change
        )
    P = np.concatenate([[0.0], u, [0.0]])
    return CavitationProfile(x, P, report, problem)


def explicit_small_eccentricity(a: float, x, y=None):
    """Closed-form small-eccentricity pressure.

    With ``y=None`` returns the film pressure ``sin(2x) / (2 (2 + coth 2a))``,
    otherwise the matrix pressure ``sinh(2y) sin(2x) / (2 sinh(2a) (2 + coth 2a))``.
    """
    if not a > 0.0:
        raise ValueError(f"layer thickness must be positive, got {a}")
    x = np.asarray(x, dtype=float)
    denom = 2.0 * (2.0 + 1.0 / math.tanh(2.0 * a))
    if y is None:
        return np.sin(2.0 * x) / denom
    return _sinh_ratio(2.0, np.asarray(y, dtype=float), a) * np.sin(2.0 * x) / denom


def nonporous_reference(x):
    """Solid-bearing pressure ``sin(2x) / 4``."""
    return 0.25 * np.sin(2.0 * np.asarray(x, dtype=float))


def half_sommerfeld(P):
    """Clip negative pressures to zero."""
    return np.maximum(np.asarray(P, dtype=float), 0.0)
