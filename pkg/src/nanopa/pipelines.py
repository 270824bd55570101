"""End-to-end runs built from a Scenario: spectra, fields, pressures, inversions."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import acoustic, invert_em
from .forward_em import (
    FieldSolution,
    assemble_foldy_lax,
    lse_problem,
    solve_foldy_lax,
    solve_lse,
)
from .mesh import cached_disc_mesh, ellipse_mesh
from .model import (
    DiscRegion,
    RectRegion,
    Scenario,
    contrast_tau,
    dimer_distance,
    validate,
)
from .resonance import (
    ResonanceFrequencies,
    SpectralData,
    disc_spectrum,
    galerkin_spectrum,
    resonance_frequency,
    resonance_table,
    scattering_coefficient,
)

OMEGA_PROBE = 1.0  # Re(tau) does not depend on omega; any probe frequency will do


def reference_mesh(scenario: Scenario):
    shape = scenario.particles[0].shape
    n = scenario.numerics.n_cells
    if shape == "disc":
        return cached_disc_mesh(n)
    return ellipse_mesh(n, float(shape.split(":", 1)[1]))


def particle_spectrum(scenario: Scenario) -> SpectralData:
    """Galerkin spectrum on the mesh shared with the field solver."""
    if not scenario.particles:
        raise ValueError("scenario has no particles")
    a = scenario.particles[0].radius
    return galerkin_spectrum(reference_mesh(scenario), a, n_modes=scenario.numerics.n_modes)


def frequencies(scenario: Scenario, spec: SpectralData) -> ResonanceFrequencies:
    w = scenario.wave
    tau = contrast_tau(scenario, 0, OMEGA_PROBE)
    return resonance_frequency(spec, tau, n0=w.n0, h=w.h, mu0=scenario.medium.mu0)


def resolve(scenario: Scenario, spec: SpectralData | None = None, sign: int | None = None) -> Scenario:
    """Scenario with the incident frequency fixed; detuned modes use ``sign`` or the wave's own."""
    if scenario.wave.mode == "explicit":
        return scenario
    spec = particle_spectrum(scenario) if spec is None else spec
    fr = frequencies(scenario, spec)
    return scenario.with_omega(fr.detuned(scenario.wave.sign if sign is None else sign))


def solve_fields(scenario: Scenario) -> FieldSolution:
    return solve_lse(lse_problem(scenario, reference_mesh(scenario)))


def true_u0_abs(scenario: Scenario, index: int = 0) -> float:
    """|u0(z)| of the plane wave at particle ``index``."""
    k = scenario.wavenumber
    d = np.asarray(scenario.wave.direction)
    z = np.asarray(scenario.particles[index].center)
    return float(abs(np.exp(1j * k * (d @ z))))


# ---------------------------------------------------------------------------
# Resonance table


def resonance_rows(scenario: Scenario, analytic: bool = True):
    a = scenario.particles[0].radius
    spec = disc_spectrum(a) if analytic and scenario.particles[0].shape == "disc" else particle_spectrum(scenario)
    tau = contrast_tau(scenario, 0, OMEGA_PROBE)
    return list(resonance_table(spec, tau, scenario.medium.mu0).rows())


# ---------------------------------------------------------------------------
# Pressures from particle fields


def particle_heating(scenario: Scenario, field: FieldSolution) -> acoustic.CellSource:
    """Cell-wise H = (omega beta0 / c_p) Im(eps_p) |v|^2 on every particle."""
    if scenario.medium.sigma != 0:
        raise ValueError("tissue heating (medium.sigma > 0) is not simulated; use sigma = 0 for pressure runs")
    omega = scenario.omega
    im_eps = float(np.imag(contrast_tau(scenario, 0, omega) + scenario.medium.permittivity(omega)))
    const = scenario.medium.heating_constant(omega)
    meshes = tuple(field.problem.physical_meshes())
    values = tuple(const * im_eps * np.abs(field.cell_averages(m)) ** 2 for m in range(len(meshes)))
    return acoustic.CellSource(meshes, values)


def particle_pressure(scenario: Scenario, field: FieldSolution, sensors, times) -> acoustic.PressureRecord:
    """Normalized-or-physical pressure record of the particle heating."""
    src = particle_heating(scenario, field)
    m = scenario.medium
    return acoustic.forward_pressure_poisson(
        src,
        sensors,
        times,
        c_s=m.c_s,
        region=m.domain,
        constant=m.pressure_constant(scenario.omega),
        normalized=m.normalize_pressure,
    )


def bump_function(bumps):
    def func(x, y):
        out = np.zeros(np.broadcast(x, y).shape)
        for b in bumps:
            out = out + b.amplitude * np.exp(-((x - b.center[0]) ** 2 + (y - b.center[1]) ** 2) / (2 * b.width**2))
        return out

    return func


def phantom_source(scenario: Scenario) -> acoustic.SmoothSource:
    if not scenario.phantom:
        raise ValueError("scenario has no phantom")
    dom = scenario.medium.domain
    if isinstance(dom, DiscRegion):
        center, radius = dom.center, dom.radius
    else:
        center = tuple(0.5 * (np.asarray(dom.lower) + np.asarray(dom.upper)))
        radius = 0.5 * dom.diameter
    return acoustic.SmoothSource(bump_function(scenario.phantom), center, radius)


def rectangle_basis(scenario: Scenario, n_modes: int = 50) -> acoustic.RectangleBasis:
    dom = scenario.medium.domain
    return acoustic.RectangleBasis(dom.lower, dom.upper, n_modes, n_modes, scenario.medium.c_s)


def phantom_pressure(scenario: Scenario, n_per_edge: int = 160) -> acoustic.PressureRecord:
    """Boundary traces of the phantom; rectangles use the Gauss edge nodes of the eigenbasis."""
    dom = scenario.medium.domain
    times = np.asarray(scenario.sensors.times)
    if isinstance(dom, RectRegion):
        sensors = rectangle_basis(scenario).boundary_nodes(n_per_edge)[0]
        times = np.concatenate([[0.0], times]) if times[0] > 0 else times
    else:
        sensors = np.asarray(scenario.sensors.points)
    return acoustic.forward_pressure_poisson(phantom_source(scenario), sensors, times, c_s=scenario.medium.c_s, region=dom)


def invert_acoustic(scenario: Scenario, record: acoustic.PressureRecord, grid_n: int = 101):
    """Reconstructed initial pressure on a tensor grid over Omega."""
    dom = scenario.medium.domain
    if isinstance(dom, DiscRegion):
        grid = np.linspace(-dom.radius, dom.radius, grid_n)
        return acoustic.invert_case1(record, dom.center, dom.radius, grid=grid)
    basis = rectangle_basis(scenario)
    n_per_edge = record.sensors.shape[0] // 4
    _, weights, normals = basis.boundary_nodes(n_per_edge)
    res = acoustic.invert_case2(record, basis, weights, normals)
    x = np.linspace(dom.lower[0], dom.upper[0], grid_n)
    y = np.linspace(dom.lower[1], dom.upper[1], grid_n)
    return acoustic.InitialPressureMap(x, y, res.evaluate(x, y), None, "case2")


def phantom_map(scenario: Scenario, like: acoustic.InitialPressureMap) -> acoustic.InitialPressureMap:
    func = bump_function(scenario.phantom)
    vals = func(*np.meshgrid(like.x, like.y, indexing="ij"))
    if like.inside is not None:
        vals = np.where(like.inside, vals, 0.0)
    return acoustic.InitialPressureMap(like.x, like.y, vals, like.inside, "truth")


# ---------------------------------------------------------------------------
# Inversions


@dataclass
class PipelineResult:
    """Named (truth, recovered) pairs plus free-form diagnostics."""

    quantities: dict
    diagnostics: dict

    def rows(self):
        for name in sorted(self.quantities):
            truth, value = self.quantities[name]
            err = abs(value - truth) / abs(truth) if truth else abs(value)
            yield {"quantity": name, "truth": truth, "recovered": value, "relative_error": err}


def single_particle(scenario: Scenario) -> Scenario:
    return scenario.with_particles(scenario.particles[:1])


def one_particle_inversion(scenario: Scenario, spec: SpectralData | None = None) -> PipelineResult:
    """LSE forward, then |u0(z)| from int_D |u_1|^2."""
    base = single_particle(scenario)
    spec = particle_spectrum(base) if spec is None else spec
    sc = resolve(base, spec)
    field = solve_fields(sc)
    tau = contrast_tau(sc, 0)
    energy = field.energy(0)
    u0 = invert_em.recover_u0_abs_one_particle(energy, spec, tau, sc.omega, sc.medium.mu0, sc.wave.n0)
    corrected = invert_em.recover_u0_abs_kernel_corrected(energy, spec, tau, sc.omega, sc.wavenumber, sc.medium.mu0, sc.wave.n0)
    truth = true_u0_abs(sc)
    return PipelineResult(
        {"u0_abs": (truth, u0)},
        {"omega": sc.omega, "energy_one": energy, "u0_abs_kernel_corrected": corrected, "residual": field.residual, "condition": field.condition},
    )


def dimer_inversion(scenario: Scenario, spec: SpectralData | None = None) -> PipelineResult:
    """|k|(z) from the one-particle and dimer energies."""
    if len(scenario.particles) != 2:
        raise ValueError("dimer inversion needs exactly two particles")
    spec = particle_spectrum(scenario) if spec is None else spec
    sc = resolve(scenario, spec)
    one = solve_fields(single_particle(sc))
    two = solve_fields(sc)
    tau = contrast_tau(sc, 0)
    k = sc.wavenumber
    coeff = scattering_coefficient(spec, tau, sc.omega, sc.medium.mu0, sc.wave.n0, wavenumber=k)
    z1, z2 = (np.asarray(p.center) for p in sc.particles)
    d = float(np.hypot(*(z2 - z1)))
    energy_dimer = 0.5 * (two.energy(0) + two.energy(1))
    ratio = one.energy(0) / energy_dimer
    res = invert_em.recover_k_abs_dimer(ratio, coeff.value, d, h=sc.wave.h)
    diag = {
        "omega": sc.omega,
        "C_re": coeff.value.real,
        "C_im": coeff.value.imag,
        "phi0": res.phi0,
        "ratio": ratio,
        "distance": d,
    }
    try:
        diag["k_abs_identity"] = invert_em.recover_k_abs_dimer_identity(ratio, coeff.value, d, arg_k=float(np.angle(k)))
    except invert_em.InversionError as exc:
        diag["k_abs_identity_error"] = str(exc)
    return PipelineResult({"k_abs": (float(abs(k)), res.k_abs)}, diag)


def localization(scenario: Scenario, spec: SpectralData | None = None, sensor_indices=(0, 1)) -> PipelineResult:
    """Particle position and |u0(z)| from p+ + p- at two sensors and two times."""
    base = single_particle(scenario)
    spec = particle_spectrum(base) if spec is None else spec
    times = np.asarray(scenario.sensors.times[:2])
    if times.size < 2:
        raise ValueError("localization needs two sensor times")
    sensors = np.asarray(scenario.sensors.points)[list(sensor_indices)]
    dom = scenario.medium.domain
    if np.any(scenario.medium.c_s * times <= dom.diameter):
        raise ValueError("localization needs c_s t > diam(Omega) at both times")
    invert_em.check_regime(scenario.wave.h, scenario.wave.s)
    records, omegas = [], []
    for sign in (1, -1):
        sc = resolve(base, spec, sign)
        field = solve_fields(sc)
        records.append(particle_pressure(sc, field, sensors, times))
        omegas.append(sc.omega)
    p_sum = records[0] + records[1]  # tissue absorbs nothing, so p0 = 0
    vals = p_sum.normalized_values()
    loc = invert_em.localize_from_pressure(
        sensors[0], vals[0], sensors[1], vals[1], times, c_s=scenario.medium.c_s, inside=lambda p: dom.contains_disc(p, 0.0)
    )
    z = np.asarray(base.particles[0].center)
    z_hat = np.asarray(loc.points[0])
    tau = contrast_tau(resolve(base, spec, 1), 0)
    u0 = invert_em.recover_u0_abs_from_pressure(
        vals[0][0], times[0], float(np.hypot(*(sensors[0] - z_hat))), spec, tau, omegas, base.medium.mu0, base.wave.n0, base.medium.c_s
    )
    truth_u0 = true_u0_abs(resolve(base, spec, 1))
    return PipelineResult(
        {"z_x": (float(z[0]), float(z_hat[0])), "z_y": (float(z[1]), float(z_hat[1])), "u0_abs_pressure": (truth_u0, u0)},
        {
            "position_error_over_diam": float(np.hypot(*(z_hat - z)) / dom.diameter),
            "radius_a": loc.radii[0],
            "radius_b": loc.radii[1],
            "ambiguous": loc.ambiguous,
        },
    )


def foldy_lax_comparison(scenario: Scenario, spec: SpectralData | None = None) -> PipelineResult:
    """Particle integrals from Foldy-Lax against the full LSE."""
    spec = particle_spectrum(scenario) if spec is None else spec
    sc = resolve(scenario, spec)
    field = solve_fields(sc)
    tau = contrast_tau(sc, 0)
    k = sc.wavenumber
    strength = sc.omega**2 * sc.medium.mu0 * tau
    coeff = scattering_coefficient(spec, tau, sc.omega, sc.medium.mu0, sc.wave.n0, wavenumber=k)
    centers = np.array([p.center for p in sc.particles])
    rhs = np.exp(1j * k * centers @ np.asarray(sc.wave.direction))
    system = assemble_foldy_lax(centers, coeff.value, k, rhs, strength, override=sc.numerics.foldy_lax_override)
    sol = solve_foldy_lax(system)
    lse = np.array([field.integral(m) for m in range(len(centers))])
    fl = sol.averages
    quantities = {f"integral_{m}": (float(abs(lse[m])), float(abs(fl[m]))) for m in range(len(centers))}
    return PipelineResult(
        quantities,
        {
            "omega": sc.omega,
            "norm_bound": system.norm_bound,
            "relative_discrepancy": float(np.max(np.abs(fl - lse)) / np.max(np.abs(lse))),
        },
    )


# ---------------------------------------------------------------------------
# Sweeps


def apply_sweep(scenario: Scenario, axis: str, value: float) -> Scenario:
    """Scenario with one parameter replaced; dimers keep their axis and follow d(a, h)."""
    if axis == "a":
        parts = list(scenario.particles)
        if not parts:
            raise ValueError("a-sweep needs particles")
        new = [replace(parts[0], radius=value)]
        if len(parts) > 1:
            z1 = np.asarray(parts[0].center)
            u = np.asarray(parts[1].center) - z1
            u = u / np.hypot(*u)
            new.append(replace(parts[1], radius=value, center=tuple(map(float, z1 + dimer_distance(value, scenario.wave.h) * u))))
        return validate(scenario.with_particles(new))
    if axis == "d":
        parts = list(scenario.particles)
        if len(parts) != 2:
            raise ValueError("d-sweep needs exactly two particles")
        z1 = np.asarray(parts[0].center)
        u = np.asarray(parts[1].center) - z1
        u = u / np.hypot(*u)
        return validate(scenario.with_particles([parts[0], replace(parts[1], center=tuple(map(float, z1 + value * u)))]))
    if axis in ("h", "s"):
        return validate(replace(scenario, wave=replace(scenario.wave, **{axis: value})))
    if axis == "mesh":
        return validate(replace(scenario, numerics=replace(scenario.numerics, n_cells=int(value))))
    raise ValueError(f"unknown sweep axis {axis!r}")


PIPELINES = ("forward-only", "acoustic-roundtrip", "full-inversion", "localization", "foldy-lax")


def run_pipeline(name: str, scenario: Scenario) -> PipelineResult:
    if name == "forward-only":
        base = single_particle(scenario)
        spec = particle_spectrum(base)
        sc = resolve(base, spec)
        field = solve_fields(sc)
        inc = math.sqrt(field.incident_energy(0))
        amp = math.sqrt(field.energy(0)) / inc
        bound = abs(math.log(sc.particles[0].radius)) ** sc.wave.h
        return PipelineResult({"amplification": (bound, amp)}, {"omega": sc.omega, "residual": field.residual})
    if name == "acoustic-roundtrip":
        record = phantom_pressure(scenario)
        recon = invert_acoustic(scenario, record)
        truth = phantom_map(scenario, recon)
        err = recon.relative_l2_error(truth)
        return PipelineResult({"l2_error": (0.0, err)}, {"n_sensors": record.sensors.shape[0]})
    if name == "full-inversion":
        out = one_particle_inversion(scenario)
        if len(scenario.particles) == 2:
            dimer = dimer_inversion(scenario)
            out.quantities.update(dimer.quantities)
            out.diagnostics.update({f"dimer_{k}": v for k, v in dimer.diagnostics.items()})
        return out
    if name == "localization":
        return localization(scenario)
    if name == "foldy-lax":
        return foldy_lax_comparison(scenario)
    raise ValueError(f"unknown pipeline {name!r}; choose from {PIPELINES}")
