import math

import numpy as np
import pytest

from nanopa.forward_em import (
    InvertibilityError,
    LSEProblem,
    assemble_foldy_lax,
    background_field,
    dimer_modal_system,
    green_kernel,
    plane_wave,
    regular_kernel,
    solve_foldy_lax,
    solve_lse,
)
from nanopa.model import BackgroundMedium, IncidentWave, Nanoparticle, Scenario
from nanopa.resonance import disc_spectrum, galerkin_spectrum, kernel_constant, resonance_frequency, scattering_coefficient
from tests.oracles.mie import interior_field


def test_plane_wave_origin_and_decay():
    sc = Scenario(medium=BackgroundMedium(eps_r=1.0, sigma=0.4), wave=IncidentWave(mode="explicit", omega=1.0))
    assert background_field(sc.with_omega(1.0), [[0.0, 0.0]])[0] == pytest.approx(1.0)
    x = np.array([[0.7, 0.3]])
    k = sc.medium.wavenumber(1.0)
    assert abs(background_field(sc, x)[0]) == pytest.approx(math.exp(-k.imag * 0.7), rel=1e-14)


def test_plane_wave_discrete_helmholtz_residual():
    k, h = 1.3, 1e-3
    d = (0.6, 0.8)
    x0 = np.array([0.2, -0.1])
    pts = x0 + h * np.array([[0, 0], [1, 0], [-1, 0], [0, 1], [0, -1]])
    u = plane_wave(k, d, pts)
    lap = (u[1] + u[2] + u[3] + u[4] - 4 * u[0]) / h**2
    assert abs(lap + k * k * u[0]) <= 1e-6


def test_kernel_reciprocity_and_expansion():
    k = 1.7 + 0.05j
    rng = np.random.default_rng(3)
    x, y = rng.uniform(-1, 1, (2, 50, 2))
    r_xy = np.linalg.norm(x - y, axis=1)
    r_yx = np.linalg.norm(y - x, axis=1)
    assert np.allclose(green_kernel(k, r_xy), green_kernel(k, r_yx), rtol=1e-12)
    r = np.logspace(-8, math.log10(0.1 / abs(k)), 30)
    diff = np.abs(green_kernel(k, r) - (-np.log(r) / (2 * np.pi) + kernel_constant(k)))
    assert np.all(diff <= 1.0 * r * np.abs(np.log(r)))


def test_regular_kernel_limit_and_continuity():
    k = 0.9
    assert regular_kernel(k, 0.0)[0] == pytest.approx(kernel_constant(k), abs=1e-14)
    below, above = regular_kernel(k, [2.0 / k * (1 - 1e-12), 2.0 / k * (1 + 1e-12)])
    assert abs(below - above) <= 1e-10


def mie_problem(mesh, k=1.0, tau=5.0, radius=0.5):
    return LSEProblem(k, k * k * tau, mesh, np.zeros((1, 2)), radius, lambda p: plane_wave(k, (1, 0), p))


def test_zero_contrast_returns_incident(mesh256):
    prob = LSEProblem(1.0, 0.0, mesh256, np.zeros((1, 2)), 0.5, lambda p: plane_wave(1.0, (1, 0), p))
    sol = solve_lse(prob)
    assert np.allclose(sol.coefficients, sol.incident_coefficients, atol=1e-15)


def test_lse_against_cylinder_series_coarse(mesh256):
    sol = solve_lse(mie_problem(mesh256))
    phys = mesh256.placed((0, 0), 0.5)
    exact = phys.cell_averages(lambda x, y: interior_field(1.0, 5.0, 0.5, x, y))
    err = np.sqrt(np.sum(phys.areas * np.abs(sol.cell_averages(0) - exact) ** 2) / np.sum(phys.areas * np.abs(exact) ** 2))
    assert err <= 5e-3
    assert sol.residual <= 1e-8


def test_exterior_representation_against_series(mesh256):
    # scattered field outside: sum b_n H_n(k r) e^{i n theta}; compared through the series at r = 0.8
    from scipy import special as sp

    from tests.oracles.mie import interior_coefficients

    k, tau, a = 1.0, 5.0, 0.5
    sol = solve_lse(mie_problem(mesh256))
    k1 = k * math.sqrt(1 + tau)
    pts = np.array([[0.8, 0.0], [0.0, -0.9], [-1.2, 0.4]])
    r, th = np.hypot(*pts.T), np.arctan2(pts[:, 1], pts[:, 0])
    exact = plane_wave(k, (1, 0), pts)
    for n, c in interior_coefficients(k, k1, a).items():
        b = (c * sp.jv(n, k1 * a) - 1j**n * sp.jv(n, k * a)) / sp.hankel1(n, k * a)
        exact = exact + b * sp.hankel1(n, k * r) * np.exp(1j * n * th)
    assert np.max(np.abs(sol.evaluate(pts) - exact)) <= 5e-3 * np.max(np.abs(exact))


def test_fourier_coefficients_orthonormal(mesh256):
    spec = galerkin_spectrum(mesh256, 1e-3, n_modes=5)
    prob = LSEProblem(1.0, 0.0, mesh256, np.zeros((1, 2)), 1e-3, lambda p: np.zeros(p.shape[:-1]))
    sol = solve_lse(prob)
    # substitute an eigenvector as the field
    for n in range(3):
        fake = type(sol)(prob, spec.eigenfunctions[:, n][None, :].astype(complex), sol.incident_coefficients, 0.0, 1.0)
        coeffs = [fake.fourier_coefficient(spec, m) for m in range(5)]
        assert np.allclose(coeffs, np.eye(5)[n], atol=1e-8)


def test_fourier_coefficient_needs_same_mesh(mesh256, mesh512):
    spec = galerkin_spectrum(mesh512, 1e-3, n_modes=3)
    sol = solve_lse(mie_problem(mesh256))
    with pytest.raises(ValueError):
        sol.fourier_coefficient(spec, 0)


def test_near_resonance_amplification_bound(mesh256):
    a, h = 1e-3, 0.5
    spec = galerkin_spectrum(mesh256, a, n_modes=20)
    tau = 1 / (a * a * abs(math.log(a)))
    om = resonance_frequency(spec, tau, h=h).omega_plus
    sol = solve_lse(LSEProblem(om, om * om * tau, mesh256, np.array([[0.1, 0.2]]), a, lambda p: plane_wave(om, (1, 0), p)))
    amp = math.sqrt(sol.energy() / sol.incident_energy())
    assert amp <= abs(math.log(a)) ** h * 2


def test_foldy_lax_trivial_cases():
    sys1 = assemble_foldy_lax([[0.0, 0.0]], 0.3, 1.0, [0.7 + 0.1j], 2.0)
    assert solve_foldy_lax(sys1).q == pytest.approx([0.7 + 0.1j])
    sys2 = assemble_foldy_lax([[0.0, 0.0], [0.5, 0.0]], 1e-14, 1.0, [1.0, 2.0], 2.0)
    assert np.allclose(solve_foldy_lax(sys2).q, [1.0, 2.0], atol=1e-12)


def test_foldy_lax_neumann_matches_direct():
    rng = np.random.default_rng(7)
    for _ in range(5):
        centers = rng.uniform(-0.5, 0.5, (2, 2))
        system = assemble_foldy_lax(centers, 0.2 + 0.05j, 1.1, rng.normal(size=2) + 1j * rng.normal(size=2), 3.0)
        direct = solve_foldy_lax(system).q
        neumann = solve_foldy_lax(system, method="neumann")
        assert np.allclose(direct, neumann.q, rtol=1e-12, atol=1e-14)
    first = solve_foldy_lax(system, order=1)
    assert first.method == "neumann-order-1"
    assert np.allclose(first.q, system.rhs + system.matrix @ system.rhs)


def test_foldy_lax_refuses_large_coupling():
    with pytest.raises(InvertibilityError, match="distance"):
        assemble_foldy_lax([[0.0, 0.0], [1e-8, 0.0]], 3.0, 1.0, [1.0, 1.0], 1.0)
    with pytest.warns(RuntimeWarning):
        system = assemble_foldy_lax([[0.0, 0.0], [1e-8, 0.0]], 3.0, 1.0, [1.0, 1.0], 1.0, override=True)
    assert np.all(np.isfinite(solve_foldy_lax(system).q))


def test_dimer_closed_form_two_by_two():
    a, h = 1e-4, 0.5
    spec = disc_spectrum(a)
    tau = 1 / (a * a * abs(math.log(a)))
    om = resonance_frequency(spec, tau, h=h).omega_minus
    c = scattering_coefficient(spec, tau, om, wavenumber=om).value
    d = a ** (abs(math.log(a)) ** -h)
    system = assemble_foldy_lax([[0.0, 0.0], [d, 0.0]], c, om, [1.0, 1.0], om * om * tau)
    q = solve_foldy_lax(system).q
    phi0 = -math.log(d) / (2 * math.pi)
    cs = system.c_star[0]
    closed = 1 / (1 - (phi0 + kernel_constant(om)) * cs)
    assert abs(q[0] - closed) <= 5 * d * abs(closed)


def test_dimer_modal_determinant():
    a = 1e-4
    spec = disc_spectrum(a)
    tau = 1 / (a * a * abs(math.log(a)))
    om = resonance_frequency(spec, tau, h=0.5).omega_plus
    dm = dimer_modal_system(spec, om * om * tau, 0.2, [1.0, 1.0])
    assert dm.det == pytest.approx(np.linalg.det(dm.matrix))
    assert np.allclose(dm.matrix @ dm.solution, dm.rhs)


def test_dimer_mirror_symmetry(mesh256):
    a, h = 1e-3, 0.5
    spec = galerkin_spectrum(mesh256, a, n_modes=10)
    tau = 1 / (a * a * abs(math.log(a)))
    om = resonance_frequency(spec, tau, h=h).omega_plus
    d = a ** (abs(math.log(a)) ** -h)
    # pair placed symmetrically about the incident direction (the x axis)
    centers = np.array([[0.0, d / 2], [0.0, -d / 2]])
    sol = solve_lse(LSEProblem(om, om * om * tau, mesh256, centers, a, lambda p: plane_wave(om, (1, 0), p)))
    c1, c2 = abs(sol.fourier_coefficient(spec, 0, 0)), abs(sol.fourier_coefficient(spec, 0, 1))
    assert c1 == pytest.approx(c2, rel=1e-8)


def test_mesh_too_coarse_rejected():
    from nanopa.mesh import disc_mesh

    with pytest.raises(ValueError):
        solve_lse(mie_problem(disc_mesh(8)))
