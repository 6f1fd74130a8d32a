import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import integrate

from porobearing.geometry import LongBearingConfig
from porobearing.obstacle import complementarity_check
from porobearing.spectral import (
    SineSeries,
    assemble_nodal_system,
    assemble_spectral_system,
    dirichlet_solve,
    dtn_map,
    dtn_symbol,
    explicit_small_eccentricity,
    half_sommerfeld,
    nonporous_reference,
    sine_coefficients,
    small_eccentricity_system,
    solve_long_bearing,
    solve_long_bearing_cavitation,
)

PI = math.pi
# 1 / (2 (2 + coth 2)), 30-digit evaluation
B2_A1 = 0.164619094816829416683


def test_b2_oracle_matches_mpmath():
    mpmath.mp.dps = 30
    assert float(1 / (2 * (2 + mpmath.coth(2)))) == B2_A1


# sine coefficients


def test_coefficients_single_mode():
    b = sine_coefficients(lambda x: np.sin(2 * x), 8).coeffs
    expected = np.zeros(8)
    expected[1] = 1.0
    np.testing.assert_allclose(b, expected, atol=1e-14)


def test_coefficients_two_modes():
    b = sine_coefficients(lambda x: 0.5 * np.sin(x) + np.sin(3 * x), 6).coeffs
    np.testing.assert_allclose(b, [0.5, 0, 1, 0, 0, 0], atol=1e-14)


def test_coefficients_parabola():
    # x (pi - x) = sum over odd n of 8 / (pi n^3) sin(n x)
    b = sine_coefficients(lambda x: x * (PI - x), 20).coeffs
    n = np.arange(1, 21)
    expected = np.where(n % 2 == 1, 8.0 / (PI * n**3), 0.0)
    np.testing.assert_allclose(b, expected, atol=1e-13)
    # independent adaptive quadrature for two of them
    for k in (1, 7):
        ref = 2 / PI * integrate.quad(lambda x: np.sin(k * x) * x * (PI - x), 0, PI, epsabs=1e-15)[0]
        assert b[k - 1] == pytest.approx(ref, abs=1e-13)


def test_coefficients_from_samples():
    x = np.linspace(0, PI, 129)
    b = sine_coefficients(np.sin(2 * x) - 0.3 * np.sin(5 * x), 10).coeffs
    expected = np.zeros(10)
    expected[1], expected[4] = 1.0, -0.3
    np.testing.assert_allclose(b, expected, atol=1e-14)


def test_coefficients_sample_limit():
    with pytest.raises(ValueError, match="exceeds"):
        sine_coefficients(np.zeros(10), 9)


def test_coefficients_report_quadrature_error():
    s = sine_coefficients(lambda x: x * (PI - x), 20)
    assert 0.0 <= s.quad_error < 1e-12


def test_endpoint_warning(caplog):
    sine_coefficients(lambda x: np.ones_like(x), 4)
    assert "vanish" in caplog.text


def test_truncation_indicator():
    assert SineSeries([1.0, 0.0, -2e-3]).truncation == pytest.approx(2e-3)


def test_series_orthogonality():
    # mode-by-mode L2 identity: int_0^pi P^2 = (pi/2) sum b_n^2
    rng = np.random.default_rng(1)
    s = SineSeries(rng.normal(size=12))
    val = integrate.quad(lambda x: s(x) ** 2, 0, PI, limit=200)[0]
    assert val == pytest.approx(0.5 * PI * np.sum(s.coeffs**2), rel=1e-10)


# Dirichlet solve


@pytest.mark.parametrize("a", [0.5, 1.0, 3.0])
def test_dirichlet_single_mode_field(a):
    rng = np.random.default_rng(2)
    x = rng.uniform(0, PI, 200)
    y = rng.uniform(0, a, 200)
    p = dirichlet_solve(SineSeries([0.0, 1.0]), a, x, y)
    exact = np.sinh(2 * y) * np.sin(2 * x) / np.sinh(2 * a)
    assert np.max(np.abs(p - exact)) < 1e-13


def test_dirichlet_boundary_values():
    s = SineSeries([0.3, -0.2, 0.1, 0.05])
    x = np.linspace(0, PI, 33)
    np.testing.assert_allclose(dirichlet_solve(s, 1.2, x, 0.0), 0.0, atol=1e-15)
    np.testing.assert_allclose(dirichlet_solve(s, 1.2, x, 1.2), s(x), atol=1e-14)
    np.testing.assert_allclose(dirichlet_solve(s, 1.2, 0.0, np.linspace(0, 1.2, 9)), 0.0, atol=1e-15)


def test_dirichlet_no_overflow_for_high_modes():
    s = SineSeries(np.r_[np.zeros(399), 1.0])
    p = dirichlet_solve(s, 5.0, PI / 3, np.array([0.0, 2.5, 5.0]))
    assert np.all(np.isfinite(p))
    assert p[-1] == pytest.approx(math.sin(400 * PI / 3), abs=1e-12)


def test_dirichlet_outside_domain():
    with pytest.raises(ValueError, match="outside"):
        dirichlet_solve(SineSeries([1.0]), 1.0, 0.5, 1.5)


def test_dirichlet_field_is_harmonic():
    s = SineSeries([0.4, -0.25, 0.1])
    a = 1.0
    errs = []
    for h in (0.02, 0.01):
        x0, y0 = 1.1, 0.45
        c = dirichlet_solve(s, a, x0, y0)
        lap = (
            dirichlet_solve(s, a, x0 + h, y0)
            + dirichlet_solve(s, a, x0 - h, y0)
            + dirichlet_solve(s, a, x0, y0 + h)
            + dirichlet_solve(s, a, x0, y0 - h)
            - 4 * c
        ) / h**2
        errs.append(abs(lap))
    assert errs[1] < 1e-4
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


# Dirichlet-to-Neumann map


def test_dtn_symbol_values():
    assert dtn_symbol(2, 1.0)[1] == pytest.approx(2.07462944145509619, rel=1e-15)
    assert dtn_symbol(1, 1.0)[0] == pytest.approx(1.31303528549933130, rel=1e-15)


def test_dtn_large_argument_limit():
    lam = dtn_symbol(200, 0.5)
    n = np.arange(1, 201)
    big = n * 0.5 >= 30
    np.testing.assert_allclose(lam[big], n[big], rtol=1e-15)


def test_dtn_matches_field_derivative():
    s = SineSeries([0.7, 0.0, -0.4])
    a, h = 0.8, 1e-5
    x = np.linspace(0.2, 3.0, 7)
    fd = (3 * s(x) - 4 * dirichlet_solve(s, a, x, a - h) + dirichlet_solve(s, a, x, a - 2 * h)) / (2 * h)
    np.testing.assert_allclose(dtn_map(s, a)(x), fd, atol=1e-8)


@settings(max_examples=50, deadline=None)
@given(
    b=arrays(float, 12, elements=st.floats(-10, 10)),
    c=arrays(float, 12, elements=st.floats(-10, 10)),
    s=st.floats(-5, 5),
    a=st.floats(0.05, 5.0),
)
def test_dtn_linear_and_positive(b, c, s, a):
    lam = dtn_symbol(12, a)
    np.testing.assert_allclose(lam * (b + s * c), lam * b + s * (lam * c), atol=1e-9)
    assert np.sum(lam * b * b) >= 0.0
    assert np.all(lam > 0)


# Galerkin system


def test_unit_film_matrix_is_diagonal():
    sys = small_eccentricity_system(1.0, N=10)
    n = np.arange(1, 11)
    expected = 0.5 * PI * (n**2 + n / np.tanh(n))
    np.testing.assert_allclose(np.diag(sys.matrix), expected, rtol=1e-14)
    off = sys.matrix - np.diag(np.diag(sys.matrix))
    assert np.max(np.abs(off)) < 1e-12
    rhs = np.zeros(10)
    rhs[1] = 0.5 * PI
    np.testing.assert_allclose(sys.rhs, rhs, atol=1e-14)


def test_zero_forcing_gives_zero():
    cfg = LongBearingConfig(a=1.0, eps=0.3)
    sys = assemble_spectral_system(cfg, N=16, forcing=lambda x: np.zeros_like(x))
    np.testing.assert_array_equal(sys.rhs, 0.0)
    assert np.all(solve_long_bearing(sys).coeffs == 0.0)


@pytest.mark.parametrize("eps", [0.0, 0.4, 0.8])
def test_galerkin_matrix_spd(eps):
    sys = assemble_spectral_system(LongBearingConfig(a=0.7, eps=eps), N=24)
    np.testing.assert_allclose(sys.matrix, sys.matrix.T, atol=0)
    lo = np.linalg.eigvalsh(sys.matrix).min()
    # coercivity: b.Ab >= (pi/2) (1-eps)^3 sum n^2 b_n^2 >= (pi/2) (1-eps)^3 |b|^2
    assert lo >= 0.5 * PI * (1 - eps) ** 3 * (1 - 1e-12)


def test_galerkin_coercive_on_random_vectors(rng):
    eps = 0.5
    sys = assemble_spectral_system(LongBearingConfig(a=2.0, eps=eps), N=20)
    n = np.arange(1, 21)
    for _ in range(200):
        b = rng.normal(size=20)
        assert b @ sys.matrix @ b >= 0.5 * PI * (1 - eps) ** 3 * np.sum(n**2 * b**2) * (1 - 1e-12)


@pytest.mark.parametrize("N", [2, 3, 16, 64])
def test_small_eccentricity_b2(N):
    b = solve_long_bearing(small_eccentricity_system(1.0, N)).coeffs
    assert b[1] == pytest.approx(B2_A1, abs=1e-12)
    assert np.max(np.abs(np.delete(b, 1))) < 1e-12


def test_galerkin_converges_with_N():
    cfg = LongBearingConfig(a=1.0, eps=0.6)
    x = np.linspace(0, PI, 41)
    ref = solve_long_bearing(assemble_spectral_system(cfg, N=96))(x)
    errs = [np.max(np.abs(solve_long_bearing(assemble_spectral_system(cfg, N=N))(x) - ref)) for N in (8, 16, 32)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-6


def test_film_forcing_load_sign():
    # f = k3 h' = -2 eps sin 2x pushes pressure negative on the left half
    P = solve_long_bearing(assemble_spectral_system(LongBearingConfig(a=1.0, eps=0.2), N=32))
    assert P(PI / 4) < 0 < P(3 * PI / 4)


# closed forms


def test_explicit_solution_examples():
    assert explicit_small_eccentricity(1.0, PI / 4) == pytest.approx(B2_A1, abs=1e-15)
    assert nonporous_reference(PI / 4) == 0.25
    y = np.array([0.0, 0.5, 1.0])
    expected = np.sinh(2 * y) / (2 * math.sinh(2.0) * (2 + 1 / math.tanh(2.0)))
    np.testing.assert_allclose(explicit_small_eccentricity(1.0, PI / 4, y), expected, rtol=1e-14)


@settings(max_examples=50, deadline=None)
@given(a1=st.floats(0.01, 10.0), a2=st.floats(0.01, 10.0), x=st.floats(0.01, PI / 2 - 0.01))
def test_explicit_monotone_in_thickness(a1, a2, x):
    lo, hi = sorted((a1, a2))
    p_lo = explicit_small_eccentricity(lo, x)
    p_hi = explicit_small_eccentricity(hi, x)
    assert p_lo <= p_hi
    assert 0 < p_hi < nonporous_reference(x)


def test_half_sommerfeld_profile():
    x = np.linspace(0, PI, 128)
    P = half_sommerfeld(explicit_small_eccentricity(1.0, x))
    left = x <= PI / 2
    np.testing.assert_array_equal(P[left], explicit_small_eccentricity(1.0, x[left]))
    assert np.all(P[~left] == 0.0)


def test_nonporous_solve_matches_reference():
    cfg = LongBearingConfig(a=1.0, eps=0.0)
    sys = assemble_spectral_system(cfg, N=8, forcing=lambda x: np.sin(2 * x), porous=False)
    P = solve_long_bearing(sys)
    x = np.linspace(0, PI, 17)
    np.testing.assert_allclose(P(x), nonporous_reference(x), atol=1e-14)


# cavitating solve


def test_cavitation_negative_forcing_vanishes():
    prof = solve_long_bearing_cavitation(
        LongBearingConfig(a=1.0, eps=0.0), N=16, M=64, forcing=lambda x: -np.ones_like(x)
    )
    assert np.all(prof.P == 0.0)
    assert math.isnan(prof.rupture_point)


def test_cavitation_inactive_constraint_matches_bilateral():
    cfg = LongBearingConfig(a=1.0, eps=0.0)
    f = lambda x: np.sin(x)  # noqa: E731
    x, problem = assemble_nodal_system(cfg, N=62, M=64, forcing=f)
    prof = solve_long_bearing_cavitation(cfg, N=62, M=64, forcing=f, tol=1e-13)
    direct = np.linalg.solve(problem.A, problem.b)
    assert np.all(direct > 0)
    np.testing.assert_allclose(prof.P[1:-1], direct, atol=1e-10)


def test_nodal_system_matches_spectral_solution():
    cfg = LongBearingConfig(a=1.0, eps=0.0)
    x, problem = assemble_nodal_system(cfg, N=254, M=256, forcing=lambda x: np.sin(2 * x))
    u = np.linalg.solve(problem.A, problem.b)
    err = np.max(np.abs(u - explicit_small_eccentricity(1.0, x[1:-1])))
    assert err < 1e-4


def test_cavitation_profile_sin2x():
    cfg = LongBearingConfig(a=1.0, eps=0.0)
    prof = solve_long_bearing_cavitation(cfg, N=64, M=256, forcing=lambda x: np.sin(2 * x), record_trace=True)
    assert prof.report.converged
    assert np.all(prof.P >= 0.0)
    lo, hi = prof.support
    assert lo < 0.05
    assert PI / 2 < hi < PI
    # right of the rupture point the pressure is identically zero
    assert np.all(prof.P[prof.x > hi] == 0.0)
    assert complementarity_check(prof.problem, prof.P[1:-1], tol=1e-8).passed
    assert np.all(np.diff(prof.report.trace[:, 2]) <= 0.0)
    # the cavitated profile exceeds the clipped bilateral one in the pressurized zone
    assert prof.P[np.searchsorted(prof.x, PI / 4)] > explicit_small_eccentricity(1.0, PI / 4)
