import math
import warnings

import numpy as np
import pytest
from scipy.special import j0

from nanopa.acoustic import (
    AcousticError,
    CellSource,
    InitialPressureMap,
    PressureRecord,
    RectangleBasis,
    ResolutionWarning,
    SmoothSource,
    TruncationWarning,
    circular_mean,
    circular_means_from_pressure,
    dimer_pressure_combination,
    dimer_pressure_model,
    filon_sine,
    forward_pressure_poisson,
    invert_case1,
    invert_case2,
    one_particle_pressure_from_u0,
    one_particle_pressure_model,
)
from nanopa.mesh import cached_disc_mesh
from nanopa.model import DiscRegion

SIG = 0.1


def gaussian(cx=0.0, cy=0.0, sig=SIG):
    return lambda x, y: np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2 * sig**2))


def ring(n, radius=1.0):
    ang = 2 * np.pi * np.arange(n) / n
    return radius * np.stack([np.cos(ang), np.sin(ang)], axis=1)


def radial_gaussian_pressure(r, t, sig=SIG):
    """p(r, t) = int_0^inf k H^(k) J0(k r) cos(k t) dk for a centred Gaussian (Hankel transform)."""
    k = np.linspace(0.0, 12.0 / sig, 20001)
    spectrum = k * sig**2 * np.exp(-0.5 * (k * sig) ** 2)
    return np.array([np.trapezoid(spectrum * j0(k * r) * np.cos(k * tt), k) for tt in np.atleast_1d(t)])


def test_zero_source_gives_zero_pressure():
    rec = forward_pressure_poisson(SmoothSource(lambda x, y: np.zeros(np.shape(x)), (0, 0), 0.8), ring(4), np.linspace(0, 2, 11))
    assert np.all(rec.values == 0)


def test_poisson_against_hankel_transform():
    t = np.linspace(0.6, 1.4, 41)
    rec = forward_pressure_poisson(SmoothSource(gaussian(), (0, 0), 0.8), [[1.0, 0.0]], t)
    exact = radial_gaussian_pressure(1.0, t)
    assert np.max(np.abs(rec.values[0] - exact)) <= 1e-3 * np.max(np.abs(exact))


def test_initial_conditions():
    f = gaussian(0.05, -0.02)
    x = (0.1, 0.03)
    eps = 1e-3
    rec = forward_pressure_poisson(SmoothSource(f, (0.05, -0.02), 0.8), [x], [0.0, eps, 2 * eps])
    p0, p1, p2 = rec.values[0]
    assert p0 == pytest.approx(f(*x), rel=1e-3)
    dpdt = (-3 * p0 + 4 * p1 - p2) / (2 * eps)
    assert abs(dpdt) <= 0.01 * abs(p0) / SIG


def test_wave_equation_residual():
    src = SmoothSource(gaussian(), (0, 0), 0.8)
    h, t0 = 2e-3, 0.6
    x0 = np.array([0.5, 0.2])
    pts = x0 + h * np.array([[0, 0], [1, 0], [-1, 0], [0, 1], [0, -1]])
    rec = forward_pressure_poisson(src, pts, [t0 - h, t0, t0 + h])
    p = rec.values
    ptt = (p[0, 0] - 2 * p[0, 1] + p[0, 2]) / h**2
    lap = (p[1, 1] + p[2, 1] + p[3, 1] + p[4, 1] - 4 * p[0, 1]) / h**2
    assert abs(ptt - lap) <= 0.02 * abs(ptt)


def test_point_source_leading_term():
    a, z = 1e-3, np.array([0.3, -0.2])
    mesh = cached_disc_mesh(254).placed(z, a)
    src = CellSource((mesh,), (np.ones(mesh.n_cells),))
    x = np.array([1.0, 0.0])
    t = np.array([1.2, 2.0, 3.5])
    rec = forward_pressure_poisson(src, [x], t)
    R = float(np.hypot(*(x - z)))
    leading = -t * src.total / (t * t - R * R) ** 1.5 / (2 * np.pi)
    assert np.allclose(rec.values[0], leading, rtol=1e-5)
    assert np.allclose(one_particle_pressure_model(t, R, 1.0, src.total / 2), 2 * np.pi * leading, rtol=1e-5)


def test_cell_source_inside_light_cone_rejected():
    mesh = cached_disc_mesh(254).placed((0.3, 0.0), 1e-3)
    with pytest.raises(AcousticError):
        forward_pressure_poisson(CellSource((mesh,), (np.ones(mesh.n_cells),)), [[1.0, 0.0]], [0.5])


def test_forward_input_errors():
    src = SmoothSource(gaussian(), (0, 0), 0.8)
    with pytest.raises(AcousticError):
        forward_pressure_poisson(src, [[1.0, 0.0]], [-1.0])
    with pytest.raises(AcousticError):
        forward_pressure_poisson(src, [[0.5, 0.0]], [1.0], region=DiscRegion())
    with pytest.raises(AcousticError):
        forward_pressure_poisson(src, [[1.0, 0.0]], [1.0], c_s=0.0)


def test_forward_is_linear():
    f, g = gaussian(0.1, 0.0), gaussian(-0.2, 0.3, 0.08)
    t = np.linspace(0.5, 1.5, 7)
    sens = ring(3)
    pf = forward_pressure_poisson(SmoothSource(f, (0, 0), 0.8), sens, t).values
    pg = forward_pressure_poisson(SmoothSource(g, (0, 0), 0.8), sens, t).values
    both = forward_pressure_poisson(SmoothSource(lambda x, y: 2 * f(x, y) - g(x, y), (0, 0), 0.8), sens, t).values
    assert np.allclose(both, 2 * pf - pg, atol=1e-12)
    summed = forward_pressure_poisson([SmoothSource(f, (0, 0), 0.8), SmoothSource(g, (0, 0), 0.8)], sens, t).values
    assert np.allclose(summed, pf + pg, atol=1e-12)


def test_record_normalization_and_csv_round_trip():
    rec = PressureRecord(ring(2), [0.5, 1.0, 1.5], [[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]], c_s=1.5, normalized=False, constant=0.25)
    norm = rec.with_normalization(True)
    assert np.allclose(norm.values, rec.values / 0.25)
    assert np.allclose(norm.physical(), rec.values)
    back = PressureRecord.from_csv(rec.to_csv())
    assert np.array_equal(back.values, rec.values) and np.array_equal(back.sensors, rec.sensors)
    assert (back.c_s, back.normalized, back.constant) == (1.5, False, 0.25)
    with pytest.raises(ValueError):
        PressureRecord.from_csv(rec.to_csv().replace("schema_version=1", "schema_version=9"))


def test_record_combination_rules():
    a = PressureRecord(ring(1), [1.0, 2.0], [[1.0, 2.0]], constant=2.0)
    b = PressureRecord(ring(1), [1.0, 2.0], [[3.0, 5.0]], constant=2.0)
    assert np.allclose((a + b).values, [[2.0, 3.5]])
    assert np.allclose((b - a).values, [[1.0, 1.5]])
    with pytest.raises(ValueError):
        a + PressureRecord(ring(1), [1.0, 3.0], [[1.0, 2.0]])
    with pytest.raises(ValueError):
        PressureRecord(ring(1), [1.0], [[1.0, 2.0]])
    with pytest.raises(ValueError):
        PressureRecord(ring(1), [1.0], [[np.nan]])


def test_asymptotic_models():
    assert one_particle_pressure_model(3.0, 2.0, 0.0, 1.0) == 0.0
    im_tau = 0.37
    # unit coefficient at both detuned frequencies
    assert one_particle_pressure_model(3.0, 2.0, im_tau, 1.0) == pytest.approx(-6 * im_tau / 5**1.5)
    assert one_particle_pressure_model(3.0, 2.0, im_tau, 1.0, 0.0) == pytest.approx(-3 * im_tau / 5**1.5)
    with pytest.raises(AcousticError):
        one_particle_pressure_model(1.0, 2.0, im_tau, 1.0)
    v = one_particle_pressure_from_u0(3.0, 2.0, im_tau, 0.7, 0.1, [0.5, -0.5])
    assert v == pytest.approx(-3 * im_tau * 2 * 0.49 * 0.01 / 0.25 / 5**1.5)
    w = 1.3
    comb = dimer_pressure_combination(2.0, 1.0, 0.5, w)
    assert comb == pytest.approx(1.5 + (1 - w * w) / (1 + w * w) * 0.5)
    assert dimer_pressure_model(3.0, 2.0, 1.0, 1.0, 1.0) == pytest.approx(-2 * 3 / 5**1.5)


def test_circular_means_recover_known_bump():
    f = gaussian(0.0, 0.0, 0.05)
    t = np.linspace(0.002, 2.0, 1000)
    x = np.array([[1.0, 0.0]])
    rec = forward_pressure_poisson(SmoothSource(f, (0, 0), 0.4), x, t)
    radii = np.linspace(0.0, 2.0, 401)
    means = circular_means_from_pressure(rec, radii, 1.0)[0]
    direct = circular_mean(f, x[0], radii)
    assert radii[np.argmax(means)] == pytest.approx(1.0, abs=radii[1])
    assert abs(means[0]) <= 1e-6
    assert np.max(np.abs(means - direct)) <= 1e-3 * np.max(direct)
    twice = PressureRecord(rec.sensors, rec.times, 2 * rec.values)
    assert np.allclose(circular_means_from_pressure(twice, radii, 1.0)[0], 2 * means)
    with pytest.raises(AcousticError):
        circular_means_from_pressure(rec, [2.5], 1.0)


def test_case1_zero_and_guards():
    t = np.linspace(0.01, 2.0, 200)
    sensors = ring(32)
    zero = PressureRecord(sensors, t, np.zeros((32, t.size)))
    recon = invert_case1(zero, (0, 0), 1.0, n_radii=257, n_rho=513)
    assert np.all(recon.values == 0)
    with pytest.warns(ResolutionWarning):
        invert_case1(PressureRecord(ring(8), t, np.zeros((8, t.size))), (0, 0), 1.0, n_radii=129, n_rho=257)
    with pytest.raises(AcousticError):
        invert_case1(PressureRecord(ring(32, 0.9), t, np.zeros((32, t.size))), (0, 0), 1.0)


def test_initial_pressure_map_interpolation():
    x = np.linspace(-1, 1, 81)
    m = InitialPressureMap.from_function(gaussian(0.1, 0.0, 0.2), x, x, inside=lambda u, v: u * u + v * v <= 1)
    src = m.as_source((0, 0), 1.0)
    assert src(np.array([0.1]), np.array([0.0]))[0] == pytest.approx(1.0, abs=1e-3)
    assert m.relative_l2_error(m) == 0.0


def test_rectangle_basis_orthonormal_and_projection():
    basis = RectangleBasis((0.0, 0.0), (1.0, 2.0), 4, 3)
    g, w = np.polynomial.legendre.leggauss(40)
    x, y = (g + 1) / 2, (g + 1)
    xx, yy = np.meshgrid(x, y, indexing="ij")
    vals = basis.evaluate(xx, yy)
    gram = np.einsum("kij,lij,i,j->kl", vals, vals, w / 2, w)
    assert np.allclose(gram, np.eye(12), atol=1e-12)
    coeffs = np.arange(12) / 7.0
    f = lambda u, v: np.tensordot(coeffs, basis.evaluate(u, v), axes=1)
    assert np.allclose(basis.project(f, n_quad=40), coeffs, atol=1e-12)


def test_boundary_normal_derivatives():
    basis = RectangleBasis((0.0, 0.0), (1.0, 1.0), 3, 3)
    pts, wts, dn = basis.boundary_nodes(12)
    assert wts.sum() == pytest.approx(4.0)
    h = 1e-6
    centre = np.array([0.5, 0.5])
    for p, col in zip(pts[::7], dn.T[::7]):
        normal = np.where(np.isclose(p, 0) | np.isclose(p, 1), np.sign(p - centre), 0.0)
        inner = p - h * normal
        fd = -basis.evaluate(*inner) / h  # psi vanishes on the boundary
        assert np.allclose(col, fd, atol=1e-4 * max(1.0, np.max(np.abs(col))))


def test_filon_exact_for_linear_data():
    t = np.linspace(0.0, 3.0, 31)
    s = np.array([0.5, 4.0, 40.0])
    g = np.tile(2 * t + 1, (3, 1))
    exact = [(np.sin(w * 3) * 2 / w**2 - 7 * np.cos(w * 3) / w + 1 / w) for w in s]
    assert np.allclose(filon_sine(g, t, s), exact, rtol=1e-12)


def test_case2_zero_and_guards():
    basis = RectangleBasis((0.0, 0.0), (1.0, 1.0), 4, 4)
    pts, wts, dn = basis.boundary_nodes(20)
    t = np.linspace(0.0, 8.0, 401)
    res = invert_case2(PressureRecord(pts, t, np.zeros((len(pts), t.size))), basis, wts, dn)
    assert np.all(res.coefficients == 0)
    with pytest.raises(AcousticError):
        invert_case2(PressureRecord(pts, t + 0.1, np.zeros((len(pts), t.size))), basis, wts, dn)
    with pytest.raises(AcousticError):
        invert_case2(PressureRecord(pts, t**2, np.zeros((len(pts), t.size))), basis, wts, dn)
    short = np.linspace(0.0, 2.0, 101)
    with pytest.warns(TruncationWarning):
        invert_case2(PressureRecord(pts, short, np.zeros((len(pts), short.size))), basis, wts, dn)
