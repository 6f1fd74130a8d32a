"""One-dimensional cavitation: rupture point and pressure of the obstacle problem

    -u'' = f on (0, xi),  u(0) = u(xi) = u'(xi) = 0,  u = 0 on [xi, L]

for a forcing that is positive on the first half of ``[0, L]``, negative on
the second half and odd about ``L/2``. The rupture point solves
``F(xi) = int_0^xi z f(z) dz = 0`` and the pressure is

    u(x) = x int_0^xi f - int_0^x (x - z) f(z) dz.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, optimize

log = logging.getLogger(__name__)

_VALIDATION_SAMPLES = 1024


class ForcingFunction:
    """Validated forcing ``f`` on ``[0, L]``.

    The sign and antisymmetry conditions are checked at 1024 cell midpoints.
    A wrong sign or broken antisymmetry raises ``ValueError``; values within
    1e-14 of zero away from ``L/2`` only log a warning.
    """

    def __init__(self, f: Callable, L: float = math.pi, name: str | None = None):
        if not L > 0.0:
            raise ValueError(f"interval length must be positive, got {L}")
        self.L = float(L)
        self.name = name or getattr(f, "__name__", "f")
        probe = np.linspace(0.0, L, 5)
        try:
            out = np.asarray(f(probe), dtype=float)
            vectorized = out.shape == probe.shape
        except (TypeError, ValueError):
            vectorized = False
        self._f = f if vectorized else np.vectorize(f, otypes=[float])
        self._validate()

    def __call__(self, x):
        return self._f(x)

    def _validate(self):
        L = self.L
        x = (np.arange(_VALIDATION_SAMPLES) + 0.5) * (L / _VALIDATION_SAMPLES)
        fx = np.asarray(self(x), dtype=float)
        if not np.all(np.isfinite(fx)):
            raise ValueError("forcing returned non-finite values")
        left = x < 0.5 * L
        right = x > 0.5 * L
        near = np.abs(fx) < 1e-14
        if np.any(left & (fx < 0.0) & ~near) or np.any(right & (fx > 0.0) & ~near):
            raise ValueError("forcing must be positive on [0, L/2) and negative on (L/2, L]")
        if np.any(near):
            log.warning("forcing is within 1e-14 of zero at %d sample points", int(near.sum()))
        scale = float(np.max(np.abs(fx)))
        odd = np.asarray(self(L - x), dtype=float) + fx
        if np.max(np.abs(odd)) > 1e-10 * max(scale, 1.0):
            raise ValueError("forcing must satisfy f(L - x) = -f(x)")


def sine_forcing(L: float = math.pi) -> ForcingFunction:
    """``sin(2 pi x / L)``; equals ``sin(2x)`` on ``[0, pi]``."""
    k = 2.0 * math.pi / L
    return ForcingFunction(lambda x: np.sin(k * np.asarray(x, dtype=float)), L, name="sin")


def cosine_forcing(L: float = math.pi) -> ForcingFunction:
    """``cos(pi x / L)``; equals ``cos(x)`` on ``[0, pi]``."""
    k = math.pi / L
    return ForcingFunction(lambda x: np.cos(k * np.asarray(x, dtype=float)), L, name="cos")


def rupture_function(f: ForcingFunction, xi: float, tol: float = 1e-12) -> float:
    """``F(xi) = int_0^xi z f(z) dz``.

    ``tol`` is absolute for ``L <= 1`` and scales with ``L^2`` beyond.
    """
    tol = tol * max(1.0, f.L**2)
    val, _ = integrate.quad(lambda z: z * float(f(z)), 0.0, xi, epsabs=0.1 * tol, epsrel=1e-15, limit=200)
    return val


def cavitation_point(f: ForcingFunction, tol: float = 1e-12) -> float:
    """Rupture point ``xi`` in ``(L/2, L)`` with ``F(xi) = 0``."""
    L = f.L
    delta = 1e-12 * L
    lo, hi = 0.5 * L + delta, L - delta
    F_lo = rupture_function(f, lo, tol)
    F_hi = rupture_function(f, hi, tol)
    if not F_lo > 0.0 or not F_hi < 0.0:
        raise ValueError(f"no sign change of F on (L/2, L): F(L/2)={F_lo:.3e}, F(L)={F_hi:.3e}")
    xi = optimize.brentq(lambda s: rupture_function(f, s, tol), lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    if abs(rupture_function(f, xi, tol)) > tol * max(1.0, L**2):
        raise RuntimeError(f"rupture point found at {xi} but |F| exceeds {tol}")
    return xi


def _primitive(f: ForcingFunction, xi_bar: float) -> float:
    val, _ = integrate.quad(lambda z: float(f(z)), 0.0, xi_bar, epsabs=1e-14, epsrel=1e-13, limit=200)
    return val


def _raw_profile(f: ForcingFunction, xi_bar: float, x, G: float | None = None):
    # int_0^x (x - z) f(z) dz = x^2 int_0^1 (1 - t) f(x t) dt, integrated for all x at once
    G = _primitive(f, xi_bar) if G is None else G
    x = np.asarray(x, dtype=float)
    flat = np.atleast_1d(x).ravel()
    inner, err = integrate.quad_vec(
        lambda t: (1.0 - t) * f(flat * t), 0.0, 1.0, epsabs=1e-15, epsrel=1e-14, norm="max"
    )
    u = flat * G - flat**2 * inner
    return u.reshape(x.shape)


def _raw_slope(f: ForcingFunction, xi_bar: float, x, G: float | None = None):
    G = _primitive(f, xi_bar) if G is None else G
    x = np.asarray(x, dtype=float)
    flat = np.atleast_1d(x).ravel()
    inner, _ = integrate.quad_vec(lambda t: f(flat * t), 0.0, 1.0, epsabs=1e-15, epsrel=1e-14, norm="max")
    return (G - flat * inner).reshape(x.shape)


def pressure_profile(f: ForcingFunction, xi_bar: float, x):
    """Film pressure ``u(x)`` for ``x < xi_bar``, zero from ``xi_bar`` on."""
    x = np.asarray(x, dtype=float)
    if np.any((x < 0.0) | (x > f.L)):
        raise ValueError("evaluation point outside [0, L]")
    return np.where(x < xi_bar, _raw_profile(f, xi_bar, np.minimum(x, xi_bar)), 0.0)


@dataclass
class FreeBoundarySolution:
    """Rupture point plus the pressure profile extended by zero.

    ``profile`` and ``slope`` evaluate the closed-form ``u`` and ``u'``
    without the zero extension; calling the object applies it.
    """

    xi_bar: float
    L: float
    profile: Callable
    slope: Callable
    x: np.ndarray = field(repr=False)
    u: np.ndarray = field(repr=False)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < self.xi_bar, self.profile(np.minimum(x, self.xi_bar)), 0.0)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < self.xi_bar, self.slope(np.minimum(x, self.xi_bar)), 0.0)


def solve_free_boundary(f: ForcingFunction, samples: int = 1025, tol: float = 1e-12) -> FreeBoundarySolution:
    xi_bar = cavitation_point(f, tol)
    G = _primitive(f, xi_bar)
    x = np.linspace(0.0, f.L, samples)
    sol = FreeBoundarySolution(
        xi_bar=xi_bar,
        L=f.L,
        profile=lambda s: _raw_profile(f, xi_bar, s, G),
        slope=lambda s: _raw_slope(f, xi_bar, s, G),
        x=x,
        u=np.zeros_like(x),
    )
    sol.u = sol(x)
    return sol


@dataclass
class OverdeterminedReport:
    interior: float
    left: float
    right: float
    right_slope: float
    grid: int

    def passed(self, tol: float) -> bool:
        return max(self.interior, self.left, self.right, self.right_slope) <= tol


def verify_overdetermined(sol: FreeBoundarySolution, f: ForcingFunction, grid: int = 10_001) -> OverdeterminedReport:
    """Residuals of ``-u'' = f``, ``u(0) = 0``, ``u(xi) = 0`` and ``u'(xi) = 0``.

    ``u''`` by central differences on ``grid`` points of ``[0, xi]``; ``u'(xi)``
    by the second-order one-sided difference with step ``xi * 1e-5``.
    """
    xi = sol.xi_bar
    x = np.linspace(0.0, xi, grid)
    dx = x[1] - x[0]
    u = sol.profile(x)
    upp = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / dx**2
    interior = float(np.max(np.abs(upp + f(x[1:-1]))))
    h = xi * 1e-5
    ub = sol.profile(np.array([xi - 2.0 * h, xi - h, xi]))
    slope = (3.0 * ub[2] - 4.0 * ub[1] + ub[0]) / (2.0 * h)
    return OverdeterminedReport(
        interior=interior,
        left=float(abs(sol.profile(np.array([0.0]))[0])),
        right=float(abs(ub[2])),
        right_slope=float(abs(slope)),
        grid=grid,
    )


def _gauss_cells(breaks, order=10):
    t, w = np.polynomial.legendre.leggauss(order)
    lo, hi = breaks[:-1], breaks[1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    return (mid[:, None] + half[:, None] * t).ravel(), (half[:, None] * w).ravel()


def vi_margin(sol: FreeBoundarySolution, f: ForcingFunction, v: Callable, dv: Callable, breaks=()) -> float:
    """``int u'(v - u)' - int f (v - u)`` over ``[0, L]``.

    ``v`` and its derivative ``dv`` are vectorized callables, smooth between
    the points in ``breaks``. A non-negative margin means the inequality
    holds for this ``v``.
    """
    pts = np.unique(np.concatenate([np.linspace(0.0, sol.L, 65), [sol.xi_bar], np.asarray(breaks, dtype=float)]))
    pts = pts[(pts >= 0.0) & (pts <= sol.L)]
    xq, wq = _gauss_cells(pts)
    du = sol.derivative(xq)
    u = sol(xq)
    return float(np.sum(wq * du * (dv(xq) - du)) - np.sum(wq * f(xq) * (v(xq) - u)))


def piecewise_linear(nodes, values):
    """``(v, dv)`` callables of the interpolant through ``(nodes, values)``."""
    nodes = np.asarray(nodes, dtype=float)
    values = np.asarray(values, dtype=float)
    slopes = np.diff(values) / np.diff(nodes)

    def v(x):
        return np.interp(x, nodes, values)

    def dv(x):
        # Gauss points never hit a node, so the cell lookup is unambiguous
        cell = np.clip(np.searchsorted(nodes, x, side="right") - 1, 0, nodes.size - 2)
        return slopes[cell]

    return v, dv


@dataclass
class VIReport:
    passed: bool
    min_margin: float
    trials: int
    failures: list = field(default_factory=list)


def vi_equivalence_check(
    sol: FreeBoundarySolution,
    f: ForcingFunction,
    trials: int = 100,
    nodes: int = 65,
    tol: float = 1e-10,
    seed: int = 0,
) -> VIReport:
    """Test the variational inequality against random non-negative profiles.

    Trial functions are piecewise linear on ``nodes`` uniform points with
    zero end values; they cycle through unstructured random profiles,
    perturbations of the solution, and profiles supported right of ``xi``.
    """
    rng = np.random.default_rng(seed)
    grid = np.linspace(0.0, sol.L, nodes)
    ubar = sol(grid)
    margins = []
    failures = []
    for k in range(trials):
        kind = k % 3
        if kind == 0:
            vals = rng.uniform(0.0, 2.0 * max(ubar.max(), 1e-3), nodes)
        elif kind == 1:
            vals = np.maximum(ubar + rng.normal(0.0, 0.1 * max(ubar.max(), 1e-3), nodes), 0.0)
        else:
            vals = np.where(grid > sol.xi_bar, rng.uniform(0.0, 1.0, nodes), 0.0)
        vals[0] = vals[-1] = 0.0
        v, dv = piecewise_linear(grid, vals)
        m = vi_margin(sol, f, v, dv, breaks=grid)
        margins.append(m)
        if m < -tol:
            failures.append((m, vals))
    return VIReport(
        passed=not failures,
        min_margin=float(min(margins)) if margins else math.inf,
        trials=trials,
        failures=failures,
    )
