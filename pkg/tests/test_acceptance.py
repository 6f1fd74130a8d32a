"""Acceptance suite: one PASS/FAIL line per criterion (run with ``-s`` to see them)."""

import math
import time

import numpy as np
import pytest
import scipy.sparse as sp

from porobearing.coupled3d import (
    CylindricalGrid,
    assemble_coupled_system,
    coercivity_constant,
    functional_J,
    h100_norm,
    interior_laplacian_residual,
    obstacle_problem,
    solve_bilateral,
    solve_unilateral,
)
from porobearing.freeboundary import cavitation_point, sine_forcing, solve_free_boundary
from porobearing.geometry import BearingGeometry, LongBearingConfig
from porobearing.obstacle import ObstacleProblem, complementarity_check, projected_sor
from porobearing.spectral import (
    SineSeries,
    dirichlet_solve,
    dtn_symbol,
    explicit_small_eccentricity,
    half_sommerfeld,
    nonporous_reference,
    small_eccentricity_system,
    solve_long_bearing,
    solve_long_bearing_cavitation,
)

PI = math.pi
XI_SIN2X = 2.246704729
# 1 / (2 (2 + coth 2)) to 21 digits
B2_A1 = 0.164619094816829416683

GEOM = BearingGeometry(R1=0.5, R2=1.0, L=1.0, c=1.0, eps=0.5, mu=1.0, U=1.0, Phi=1.0 / 12.0)
THIN = BearingGeometry(R1=0.8, R2=1.0, L=2.0, c=0.7, eps=0.3, mu=2.0, U=1.5, Phi=0.01)


def verdict(number, title, ok, detail):
    print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} -- {detail}")
    assert ok, detail


def test_criterion_1_cavitation_point():
    f = sine_forcing()
    cavitation_point(f)  # warm-up
    times = []
    for _ in range(5):
        t0 = time.perf_counter()
        xi = cavitation_point(f)
        times.append(time.perf_counter() - t0)
    elapsed = float(np.median(times))
    err = abs(xi - XI_SIN2X)
    verdict(1, "cavitation point", err < 1e-8 and elapsed < 0.010, f"xi={xi:.12f} err={err:.2e} time={elapsed * 1e3:.2f} ms")


def test_criterion_2_explicit_long_bearing():
    a = 1.0
    series = solve_long_bearing(small_eccentricity_system(a, N=64))
    b = series.coeffs
    b2_err = abs(b[1] - B2_A1)
    others = float(np.max(np.abs(np.delete(b, 1))))
    rng = np.random.default_rng(2)
    x = rng.uniform(0.0, PI, 100)
    y = rng.uniform(0.0, a, 100)
    field_err = float(np.max(np.abs(dirichlet_solve(series, a, x, y) - explicit_small_eccentricity(a, x, y))))
    ok = b2_err < 1e-12 and others < 1e-12 and field_err < 1e-10
    verdict(2, "explicit long-bearing solution", ok, f"|b2 err|={b2_err:.1e} max other={others:.1e} field err={field_err:.1e}")


def test_criterion_3_dirichlet_single_mode():
    a = 1.0
    series = SineSeries([0.0, 1.0])
    rng = np.random.default_rng(3)
    x = np.concatenate([rng.uniform(0.0, PI, 200), np.linspace(0, PI, 9)])
    y = np.concatenate([rng.uniform(0.0, a, 200), np.linspace(0, a, 9)])
    exact = np.sinh(2 * y) * np.sin(2 * x) / np.sinh(2 * a)
    err = float(np.max(np.abs(dirichlet_solve(series, a, x, y) - exact)))
    verdict(3, "Dirichlet solve of sin(2x)", err < 1e-13, f"max err={err:.1e} at {x.size} probes")


def test_criterion_4_porous_below_solid():
    x = np.linspace(0.0, PI, 130)[1:-1]
    x = x[np.abs(np.sin(2 * x)) > 1e-12]
    quarter = []
    below = True
    for a in (0.25, 1.0, 4.0):
        P = solve_long_bearing(small_eccentricity_system(a, N=32))
        below &= bool(np.all(np.abs(P(x)) < np.abs(nonporous_reference(x))))
        quarter.append(float(P(PI / 4)))
    increasing = quarter[0] < quarter[1] < quarter[2]
    verdict(4, "porous below solid", below and increasing, f"P(pi/4) for a=0.25,1,4: {', '.join(f'{q:.6f}' for q in quarter)}")


def test_criterion_5_vi_free_boundary_equivalence():
    sol = solve_free_boundary(sine_forcing())
    parts = []
    ok = True
    for M in (128, 256, 512):
        x = np.linspace(0.0, PI, M)
        h = x[1] - x[0]
        A = sp.diags([2.0, -1.0, -1.0], [0, -1, 1], shape=(M - 2, M - 2)) / h
        p = ObstacleProblem(A, h * np.sin(2 * x[1:-1]), np.ones(M - 2, dtype=bool))
        u, rep = projected_sor(p, tol=1e-12)
        err = float(np.max(np.abs(u - sol(x[1:-1]))))
        last = x[1:-1][np.flatnonzero(u > 0.0)[-1]]
        cells = abs(last - sol.xi_bar) / h
        ok &= rep.converged and err <= 5.0 / M and cells <= 2.0
        parts.append(f"M={M}: err={err:.1e} (<= {5.0 / M:.1e}) fb offset={cells:.2f} cells")
    verdict(5, "VI / free-boundary equivalence", ok, "; ".join(parts))


def test_criterion_6_complementarity_certification():
    results = []
    for name, cfg, forcing in (
        ("long sin2x", LongBearingConfig(a=1.0, eps=0.0), lambda x: np.sin(2 * x)),
        ("long film eps=0.5", LongBearingConfig(a=0.5, eps=0.5), None),
    ):
        prof = solve_long_bearing_cavitation(cfg, N=64, M=256, forcing=forcing, record_trace=True)
        chk = complementarity_check(prof.problem, prof.P[1:-1], tol=1e-8)
        mono = bool(np.all(np.diff(prof.report.trace[:, 2]) <= 0.0))
        results.append((name, prof.report.converged and chk.passed and mono, chk.gap))
    for geom in (GEOM, THIN):
        for dims in ((5, 16, 5), (9, 32, 9)):
            sys = assemble_coupled_system(geom, CylindricalGrid.for_geometry(geom, *dims))
            fld = solve_unilateral(sys, record_trace=True)
            chk = complementarity_check(obstacle_problem(sys), sys.restrict(fld), tol=1e-8)
            mono = bool(np.all(np.diff(fld.report.trace[:, 2]) <= 0.0))
            results.append((f"3D {dims} c={geom.c}", chk.passed and mono, chk.gap))
    ok = all(r[1] for r in results)
    worst = max(r[2] for r in results)
    verdict(6, "complementarity certification", ok, f"{len(results)} unilateral solves, max gap={worst:.1e}, traces monotone")


def test_criterion_7_bilateral_3d_properties():
    rng = np.random.default_rng(7)
    notes = []

    # (a) zero load
    still = BearingGeometry(R1=0.5, R2=1.0, L=1.0, c=1.0, eps=0.5, mu=1.0, U=0.0, Phi=1.0 / 12.0)
    z = solve_bilateral(assemble_coupled_system(still, CylindricalGrid.for_geometry(still, 9, 32, 9)))
    ok_a = bool(np.all(z.values == 0.0))
    notes.append(f"(a) {'ok' if ok_a else 'nonzero'}")

    # (b) theta antisymmetry
    sys = assemble_coupled_system(GEOM, CylindricalGrid.for_geometry(GEOM, 17, 64, 17))
    P = solve_bilateral(sys, tol=1e-12).values
    nt = sys.grid.n_theta
    asym = float(np.max(np.abs(P + P[:, (-np.arange(nt)) % nt, :])) / np.max(np.abs(P)))
    ok_b = asym <= 1e-8
    notes.append(f"(b) asym={asym:.1e}")

    # (c) stride-2 interior residual at fixed physical probes of the 5x16x5 base grid
    grid = CylindricalGrid.for_geometry(GEOM, 5, 16, 5)
    res = []
    for lev in range(1, 4):
        grid = grid.refined()
        fld = solve_bilateral(assemble_coupled_system(GEOM, grid), tol=1e-12)
        m = 2**lev
        i0, j0, k0 = np.meshgrid([1, 2, 3], np.arange(16), [1, 2, 3], indexing="ij")
        res.append(float(np.max(np.abs(interior_laplacian_residual(fld, i0 * m, j0 * m, k0 * m, stride=2)))))
    orders = np.log2(np.array(res[:-1]) / np.array(res[1:]))
    ok_c = bool(res[0] > res[1] > res[2] and np.all(orders >= 1.8))
    notes.append(f"(c) orders={', '.join(f'{o:.2f}' for o in orders)}")

    # (d) J minimal among random competitors
    tsys = assemble_coupled_system(THIN, CylindricalGrid.for_geometry(THIN, 9, 32, 9))
    p = tsys.restrict(solve_bilateral(tsys, tol=1e-12))
    Jp = functional_J(tsys, p)
    scale = float(np.max(np.abs(p)))
    ok_d = all(
        functional_J(tsys, p + rng.normal(scale=scale * s, size=p.size)) >= Jp for s in np.geomspace(1e-3, 10, 100)
    )
    notes.append(f"(d) J={Jp:.4e}")

    # (e) coercivity witness
    worst = math.inf
    for s in (sys, tsys):
        lo = coercivity_constant(s.geom)
        for _ in range(500):
            v = rng.normal(size=s.n)
            worst = min(worst, (v @ (s.A @ v)) / (lo * h100_norm(s, v) ** 2))
    ok_e = worst >= 1.0
    notes.append(f"(e) min ratio={worst:.3f}")

    verdict(7, "3D bilateral properties", ok_a and ok_b and ok_c and ok_d and ok_e, "; ".join(notes))


def test_criterion_8_half_sommerfeld():
    a = 1.0
    x = np.linspace(0.0, PI, 128)
    clipped = half_sommerfeld(explicit_small_eccentricity(a, x))
    lobe = x <= PI / 2
    expected = np.where(lobe, np.sin(2 * x) / (2 * (2 + 1 / math.tanh(2 * a))), 0.0)
    ok = bool(np.array_equal(clipped, expected) and np.all(clipped[~lobe] == 0.0) and np.all(clipped[lobe] >= 0.0))
    verdict(8, "half-Sommerfeld profile", ok, f"{x.size} probes, {int(lobe.sum())} in the positive lobe")


def test_criterion_9_wirtinger_bound():
    rng = np.random.default_rng(9)
    worst = 0.0
    for _ in range(200):
        N = int(rng.integers(1, 200))
        a = float(rng.uniform(0.05, 5.0))
        b = rng.normal(size=N) / np.arange(1, N + 1) ** rng.uniform(0, 2)
        c = rng.normal(size=N)
        n = np.arange(1, N + 1)
        lhs = abs(np.sum(dtn_symbol(N, a) * b * c))
        rhs = (1 / math.tanh(a)) * math.sqrt(np.sum(n**2 * b**2)) * math.sqrt(np.sum(c**2))
        worst = max(worst, lhs / rhs)
    # N = 1 attains equality; allow rounding only
    verdict(9, "Wirtinger-backed continuity", worst <= 1.0 + 1e-12, f"max lhs/rhs over 200 pairs={worst:.4f}")
