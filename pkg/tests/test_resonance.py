import math

import numpy as np
import pytest

from nanopa.mesh import cached_disc_mesh, ellipse_mesh
from nanopa.resonance import (
    GAMMA,
    SpectralData,
    disc_radial_equation,
    disc_roots,
    disc_spectrum,
    galerkin_spectrum,
    hypotheses_flags,
    kernel_constant,
    matrix_scattering_coefficient,
    resonance_frequency,
    resonance_table,
    scattering_coefficient,
)
from nanopa.specfun import EULER_GAMMA, bessel_j
from tests.oracles.frozen import load

A_SWEEP = (1e-2, 1e-3, 1e-4, 1e-5)


def scaled_tau(a: float) -> float:
    return 1.0 / (a * a * abs(math.log(a)))


def test_gamma_constant():
    assert GAMMA == pytest.approx(0.25j + (math.log(2) - 0.5772156649015329) / (2 * math.pi), abs=1e-14)
    assert GAMMA.real == pytest.approx(0.018451, abs=1e-6)


def test_kernel_constant_uses_principal_log():
    k = 2.0 + 0.3j
    assert kernel_constant(k) == pytest.approx(-np.log(k) / (2 * np.pi) + GAMMA)


@pytest.mark.parametrize("a", ["0.5", "0.001", "1e-05"])
def test_radial_roots_match_frozen(a):
    roots = disc_roots(0, float(a), 3)
    assert np.allclose(roots, load()["disc_roots_k0"][a], rtol=1e-12)
    f = disc_radial_equation(0, float(a))
    assert np.all(np.abs(f(roots)) <= 1e-10)


def test_higher_order_roots_are_bessel_zeros():
    assert np.allclose(disc_roots(1, 1e-3, 3), load()["j0_zeros"][:3], rtol=1e-13)
    assert np.allclose(disc_roots(2, 1e-3, 3), load()["j1_zeros"], rtol=1e-13)


def test_radial_roots_interlace_bessel_zeros():
    mu = disc_roots(0, 1e-3, 4)
    j0, j1 = load()["j0_zeros"], load()["j1_zeros"]
    assert mu[0] < j0[0]
    for j in range(1, 4):
        assert j1[j - 1] < mu[j] < j0[j]


def test_disc_means():
    spec = disc_spectrum(1e-3)
    for n, (k, j) in enumerate(spec.labels):
        if k >= 1:
            assert abs(spec.means[n]) <= 1e-8
    # unnormalized mean 2 pi J1(mu)/mu against a mesh integral of J0(mu r)
    mu = disc_roots(0, 1e-3, 1)[0]
    mesh = cached_disc_mesh(512)
    integral = float(np.sum(mesh.areas * mesh.cell_averages(lambda x, y: bessel_j(0, mu * np.hypot(x, y)))))
    assert integral == pytest.approx(2 * np.pi * bessel_j(1, mu) / mu, rel=1e-4)


def test_lambda_tilde_relation():
    spec = disc_spectrum(1e-4)
    lam = spec.eigenvalues
    a = spec.a
    assert np.allclose(lam, a * a * (spec.eigenvalues_tilde + abs(math.log(a)) / (2 * math.pi) * spec.means**2), rtol=1e-12)


def test_scaling_law_over_radii():
    ratios = [disc_spectrum(a).eigenvalues[0] / (a * a * abs(math.log(a))) for a in A_SWEEP]
    assert (max(ratios) - min(ratios)) / min(ratios) <= 0.15
    assert all(0.1 <= disc_spectrum(a).means[0] ** 2 <= 10 for a in A_SWEEP)


def test_galerkin_matches_disc_and_is_orthonormal():
    mesh = cached_disc_mesh(512)
    g = galerkin_spectrum(mesh, 1e-3, n_modes=30)
    d = disc_spectrum(1e-3)
    assert np.abs(g.eigenfunctions.T @ g.eigenfunctions - np.eye(30)).max() <= 1e-8
    assert g.scaled_eigenvalues[0] == pytest.approx(d.scaled_eigenvalues[0], rel=0.02)
    assert g.eigenvalues_tilde[0] == pytest.approx(d.eigenvalues_tilde[0], rel=0.02)
    # relation between tilde and physical eigenvalues holds on the discrete pairs
    a = g.a
    assert np.allclose(g.eigenvalues_tilde, g.scaled_eigenvalues + math.log(a) / (2 * math.pi) * g.means**2, atol=1e-10)


def test_ellipse_has_smaller_first_eigenvalue():
    mesh = cached_disc_mesh(512)
    disc = galerkin_spectrum(mesh, 1e-3, 3)
    ell = galerkin_spectrum(ellipse_mesh(512, 1.6), 1e-3, 3)
    assert ell.eigenvalues[0] <= disc.eigenvalues[0] * 1.02


def test_invalid_radius():
    with pytest.raises(ValueError):
        disc_spectrum(1.5)
    with pytest.raises(ValueError):
        disc_spectrum(1e-3, k_max=-1)


def synthetic_spec(a: float, lam_scaled: float, mean: float = 1.0) -> SpectralData:
    return SpectralData("test", a, np.array([lam_scaled]), np.array([lam_scaled]), np.array([mean]))


def test_resonance_at_unit_frequency():
    a = 1e-3
    spec = synthetic_spec(a, abs(math.log(a)))
    fr = resonance_frequency(spec, scaled_tau(a), h=0.5)
    assert fr.omega_n0 == pytest.approx(1.0, rel=1e-14)
    assert fr.omega_plus**2 == pytest.approx(1 + abs(math.log(a)) ** -0.5, rel=1e-14)
    assert fr.omega_plus**2 == pytest.approx(1.3805, abs=1e-4)


@pytest.mark.parametrize("h", [0.3, 0.5, 0.75])
def test_detuned_residuals(h):
    a = 1e-4
    spec = disc_spectrum(a)
    fr = resonance_frequency(spec, scaled_tau(a), h=h)
    assert fr.residual_plus == pytest.approx(-abs(math.log(a)) ** -h, rel=1e-12)
    assert fr.residual_minus == pytest.approx(abs(math.log(a)) ** -h, rel=1e-12)


def test_complex_tau_residual_imaginary_part():
    a = 1e-3
    spec = disc_spectrum(a)
    tau = scaled_tau(a) + 1j
    fr = resonance_frequency(spec, tau, h=0.5)
    expected = -fr.omega_plus**2 * spec.eigenvalues[0]
    assert fr.residual_plus.imag == pytest.approx(expected, rel=1e-12)


def test_resonance_errors():
    a = 1e-3
    spec = disc_spectrum(a)
    with pytest.raises(ValueError):
        resonance_frequency(spec, -1.0)
    with pytest.raises(ValueError):
        resonance_frequency(spec, scaled_tau(a), n0=1)  # zero-mean mode
    with pytest.raises(ValueError):
        resonance_frequency(synthetic_spec(a, -1.0), scaled_tau(a))


def test_resonance_table_flags():
    spec = disc_spectrum(1e-3)
    table = resonance_table(spec, scaled_tau(1e-3))
    rows = list(table.rows())
    assert rows[0]["hypotheses_ok"] and not rows[1]["hypotheses_ok"]
    assert all(r["omega_n"] > 0 for r in rows)
    assert np.array_equal(hypotheses_flags(spec), table.mode_flags)


def test_scattering_coefficient_vanishes_with_contrast():
    spec = disc_spectrum(1e-3)
    assert abs(scattering_coefficient(spec, 1e-12, 1.0).value) <= 1e-15


@pytest.mark.parametrize("a", [1e-3, 1e-4, 1e-5])
@pytest.mark.parametrize("sign", [1, -1])
def test_scattering_coefficient_order(a, sign):
    h = 0.5
    spec = disc_spectrum(a)
    fr = resonance_frequency(spec, scaled_tau(a), h=h)
    c = scattering_coefficient(spec, scaled_tau(a), fr.detuned(sign)).value
    assert 0.1 <= abs(c) * abs(math.log(a)) ** (1 - h) <= 10


def test_leading_term_against_series():
    a, h = 1e-4, 0.5
    spec = disc_spectrum(a, n_modes_per_order=6)
    fr = resonance_frequency(spec, scaled_tau(a), h=h)
    c = scattering_coefficient(spec, scaled_tau(a), fr.omega_plus)
    lead = scattering_coefficient(spec, scaled_tau(a), fr.omega_plus, path="leading")
    assert abs(lead.value - c.value) / abs(c.value) <= 5 * abs(math.log(a)) ** -h
    assert lead.remainder == pytest.approx(abs(c.value - c.leading))


def test_series_agrees_with_matrix_resolvent():
    a = 1e-3
    mesh = cached_disc_mesh(254)
    spec = galerkin_spectrum(mesh, a)
    tau = scaled_tau(a)
    fr = resonance_frequency(spec, tau, h=0.5)
    series = scattering_coefficient(spec, tau, fr.omega_plus).value
    direct = matrix_scattering_coefficient(spec, tau, fr.omega_plus)
    assert series == pytest.approx(direct, rel=1e-10)


def test_renormalized_coefficient():
    spec = disc_spectrum(1e-3)
    k = 1.1
    c = scattering_coefficient(spec, scaled_tau(1e-3), 1.1, wavenumber=k)
    assert c.star == pytest.approx(c.value / (1 - kernel_constant(k) * c.value))


def test_on_resonance_raises():
    a = 1e-3
    spec = disc_spectrum(a)
    fr = resonance_frequency(spec, scaled_tau(a))
    with pytest.raises(ZeroDivisionError):
        scattering_coefficient(spec, scaled_tau(a), fr.omega_n0)
    with pytest.raises(ValueError):
        scattering_coefficient(spec, scaled_tau(a), fr.omega_plus, path="bogus")


def test_euler_constant():
    assert EULER_GAMMA == pytest.approx(0.5772156649015329, abs=1e-16)
