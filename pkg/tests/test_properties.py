import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from nanopa.forward_em import LSEProblem, green_kernel, plane_wave, solve_lse
from nanopa.invert_em import InternalData, InversionError, k_abs_from_material, localize_radius, point_source_pressure, recover_k_abs_dimer, split_eps_sigma
from nanopa.mesh import cached_disc_mesh
from nanopa.model import dumps_scenario, loads_scenario
from nanopa.specfun import PolygonCell, quad_log_singular

fast = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
slow = settings(max_examples=8, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
coord = st.floats(-0.3, 1.3, allow_nan=False)
SQUARE = PolygonCell(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]))


@fast
@given(coord, coord, st.floats(-3, 3), st.floats(-3, 3))
def test_log_quadrature_is_linear(x, y, alpha, beta):
    f = lambda u, v: u * v + 1.0
    g = lambda u, v: np.cos(u) - v**2
    combo = lambda u, v: alpha * f(u, v) + beta * g(u, v)
    lhs = quad_log_singular(combo, SQUARE, (x, y))
    rhs = alpha * quad_log_singular(f, SQUARE, (x, y)) + beta * quad_log_singular(g, SQUARE, (x, y))
    assert lhs == pytest.approx(rhs, abs=1e-11 * (1 + abs(alpha) + abs(beta)))


@fast
@given(st.floats(0.1, 5), st.floats(1e-3, 10), st.floats(0, 2 * math.pi))
def test_kernel_symmetric_in_points(k, r, theta):
    x = np.array([0.0, 0.0])
    y = r * np.array([math.cos(theta), math.sin(theta)])
    assert green_kernel(k, np.hypot(*(x - y))) == green_kernel(k, np.hypot(*(y - x)))


@slow
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(0, 2 * math.pi))
def test_forward_is_linear_in_incident(alpha, beta, theta):
    ref = cached_disc_mesh(256)
    d1, d2 = (1.0, 0.0), (math.cos(theta), math.sin(theta))
    solve = lambda inc: solve_lse(LSEProblem(1.0, 5.0, ref, np.zeros((1, 2)), 0.5, inc)).coefficients
    both = solve(lambda p: alpha * plane_wave(1.0, d1, p) + beta * plane_wave(1.0, d2, p))
    parts = alpha * solve(lambda p: plane_wave(1.0, d1, p)) + beta * solve(lambda p: plane_wave(1.0, d2, p))
    assert np.allclose(both, parts, atol=1e-11 * (1 + abs(alpha) + abs(beta)))


@fast
@given(st.floats(0.2, 5), st.floats(0.0, 5), st.floats(0.5, 3), st.sampled_from(["wavenumber", "squared"]))
def test_split_round_trip(eps_r, sigma, omega1, convention):
    omega2 = 2 * omega1
    k1 = k_abs_from_material(eps_r, sigma, omega1, convention=convention)
    k2 = k_abs_from_material(eps_r, sigma, omega2, convention=convention)
    res = split_eps_sigma(k1, omega1, k2, omega2, convention=convention)
    assert res.eps_r == pytest.approx(eps_r, rel=1e-8)
    assert res.sigma == pytest.approx(sigma, abs=1e-6 * (1 + eps_r * omega2))


@fast
@given(st.floats(0.1, 3), st.floats(3.2, 6), st.floats(0.1, 3), st.floats(-5, 5).filter(lambda v: abs(v) > 1e-3))
def test_localization_symmetric_and_exact(radius, t1, gap, amp):
    t2 = t1 + gap
    p1, p2 = point_source_pressure([t1, t2], radius, amplitude=amp)
    r12 = localize_radius(t1, p1, t2, p2)
    assert r12 == pytest.approx(localize_radius(t2, p2, t1, p1), rel=1e-12)
    assert r12 == pytest.approx(radius, rel=1e-7)


@fast
@given(st.floats(0.5, 3), st.floats(0.5, 3), st.floats(0.1, 3), st.floats(1e-3, 1e3))
def test_dimer_formula_scale_invariant_in_energy(e_one, e_dimer, c, scale):
    d = 0.2
    try:
        a = recover_k_abs_dimer(InternalData(e_one, e_dimer).energy_ratio, c, d).k_abs
    except InversionError:
        with pytest.raises(InversionError):
            recover_k_abs_dimer(InternalData(scale * e_one, scale * e_dimer).energy_ratio, c, d)
        return
    b = recover_k_abs_dimer(InternalData(scale * e_one, scale * e_dimer).energy_ratio, c, d).k_abs
    assert b == pytest.approx(a, rel=1e-10)


@fast
@given(
    r=st.floats(0, 0.9), theta=st.floats(0, 2 * math.pi), a=st.floats(1e-5, 1e-2), h=st.floats(0.5, 0.9), n_cells=st.sampled_from([256, 512, 1024])
)
def test_scenario_round_trip(one_particle, r, theta, a, h, n_cells):
    x, y = r * math.cos(theta), r * math.sin(theta)
    sc = replace(
        one_particle.with_particles([replace(one_particle.particles[0], center=(x, y), radius=a)]),
        wave=replace(one_particle.wave, h=h),
        numerics=replace(one_particle.numerics, n_cells=n_cells),
    )
    text = dumps_scenario(sc)
    assert dumps_scenario(loads_scenario(text)) == text
