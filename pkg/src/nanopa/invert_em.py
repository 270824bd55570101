"""Closed-form electromagnetic inversions from internal data and pressures.

Recovers |u0(z)| from one particle, |k|(z) from a one-particle plus dimer
pair, the permittivity / conductivity split from two resonances, and the
particle position from pressure ratios at two times.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .resonance import GAMMA, SpectralData, kernel_constant

DEGENERATE_TOL = 1e-12


class InversionError(ValueError):
    """Data inconsistent with the model the formula inverts."""


class RemainderWarning(UserWarning):
    """The remainder of an asymptotic formula is not small in this regime."""


@dataclass(frozen=True)
class InternalData:
    """Particle energies int_D |u|^2 and optional resonant coefficients."""

    energy_one: float | None = None  # int_D |u_1|^2, one particle
    energy_dimer: float | None = None  # int_D2 |v|^2, dimer
    coeff_sq_one: float | None = None  # |<u_1, e_n0>|^2
    coeff_sq_dimer: float | None = None
    source: str = "direct"
    error_order: str = ""

    def __post_init__(self):
        for name in ("energy_one", "energy_dimer", "coeff_sq_one", "coeff_sq_dimer"):
            v = getattr(self, name)
            if v is not None and not v >= 0:
                raise ValueError(f"{name} must be nonnegative, got {v}")

    @property
    def energy_ratio(self) -> float:
        """One-particle energy over dimer energy."""
        if not self.energy_one or not self.energy_dimer:
            raise InversionError("energy ratio needs both positive energies")
        return self.energy_one / self.energy_dimer


@dataclass
class InversionReport:
    z_hat: list = field(default_factory=list)
    u0_abs: float | None = None
    k_abs: float | None = None
    eps_r_hat: float | None = None
    sigma_hat: float | None = None
    diagnostics: dict = field(default_factory=dict)
    error_orders: dict = field(default_factory=dict)

    def rows(self):
        """Flat (quantity, value) pairs for CSV output."""
        out = []
        for i, z in enumerate(self.z_hat):
            out.append((f"z_hat_{i}_x", float(z[0])))
            out.append((f"z_hat_{i}_y", float(z[1])))
        for name in ("u0_abs", "k_abs", "eps_r_hat", "sigma_hat"):
            v = getattr(self, name)
            if v is not None:
                out.append((name, float(v)))
        for key in sorted(self.diagnostics):
            v = self.diagnostics[key]
            if isinstance(v, complex):
                out.append((f"{key}_re", v.real))
                out.append((f"{key}_im", v.imag))
            else:
                out.append((key, v))
        return out


def _mode_mean(spec: SpectralData, n0: int) -> float:
    mean = float(spec.physical_means[n0])
    if abs(mean) < DEGENERATE_TOL:
        raise InversionError(f"mode {n0} has vanishing mean {mean:.3e}; it cannot be used")
    return mean


def resonance_residual(spec: SpectralData, tau: complex, omega: float, mu0: float = 1.0, n0: int = 0) -> complex:
    """1 - omega^2 mu0 tau lambda_n0."""
    return complex(1 - omega**2 * mu0 * tau * spec.eigenvalues[n0])


# ---------------------------------------------------------------------------
# One particle


def recover_u0_abs_one_particle(energy: float, spec: SpectralData, tau: complex, omega: float, mu0: float = 1.0, n0: int = 0) -> float:
    """|u0(z)| = |1 - omega^2 mu0 tau lambda| sqrt(int_D |u_1|^2) / |int_D e_n0|."""
    if energy < 0:
        raise InversionError("energy must be nonnegative")
    mean = _mode_mean(spec, n0)
    return abs(resonance_residual(spec, tau, omega, mu0, n0)) * math.sqrt(energy) / abs(mean)


def recover_u0_abs_kernel_corrected(
    energy: float, spec: SpectralData, tau: complex, omega: float, wavenumber: complex, mu0: float = 1.0, n0: int = 0
) -> float:
    """One-particle recovery keeping the kernel constant in the resonant denominator."""
    mean = _mode_mean(spec, n0)
    strength = omega**2 * mu0 * tau
    psi = abs(resonance_residual(spec, tau, omega, mu0, n0) - strength * kernel_constant(wavenumber) * mean**2) ** 2
    return math.sqrt(psi * energy) / abs(mean)


# ---------------------------------------------------------------------------
# Dimer: |k| from the energy ratio


@dataclass(frozen=True)
class DimerKResult:
    log_k: float
    k_abs: float
    c_used: float
    c_discarded_imag: float
    phi0: float
    ratio: float
    p_factor: float
    correction: float


def recover_k_abs_dimer(ratio: float, c_value: complex, distance: float, h: float | None = None) -> DimerKResult:
    """log|k| = 2pi Re(Gamma) - (pi/C)(A - P^2)/(A - 2P) with P = 1 - C Phi0.

    ``ratio`` is A = int_D |u_1|^2 / int_D2 |v|^2 (one particle over dimer).
    C enters through its real part.
    """
    if not ratio > 0:
        raise InversionError(f"energy ratio must be positive, got {ratio}")
    if distance <= 0:
        raise InversionError("distance must be positive")
    if h is not None and h <= 0.5:
        warnings.warn(f"h = {h} <= 1/2: the remainder of the dimer formula is not small", RemainderWarning, stacklevel=2)
    c = float(np.real(c_value))
    if abs(c) < DEGENERATE_TOL:
        raise InversionError("scattering coefficient vanishes; the dimer formula is 0/0")
    phi0 = -math.log(distance) / (2 * math.pi)
    p = 1 - c * phi0
    denom = ratio - 2 * p
    if abs(denom) < DEGENERATE_TOL:
        raise InversionError(f"degenerate data: A - 2(1 - C Phi0) = {denom:.3e}")
    correction = (ratio - p * p) / denom
    log_k = 2 * math.pi * GAMMA.real - math.pi / c * correction
    return DimerKResult(
        log_k=log_k,
        k_abs=math.exp(log_k),
        c_used=c,
        c_discarded_imag=float(np.imag(c_value)),
        phi0=phi0,
        ratio=ratio,
        p_factor=p,
        correction=correction,
    )


def dimer_ratio_identity(c_value: complex, distance: float, wavenumber: complex) -> float:
    """Point-scatterer ratio |1 - C(Phi0 + 2X)|^2 / |1 - C X|^2 of one-particle to dimer energy."""
    x = kernel_constant(wavenumber)
    phi0 = -math.log(distance) / (2 * math.pi)
    return abs(1 - c_value * (phi0 + 2 * x)) ** 2 / abs(1 - c_value * x) ** 2


def recover_k_abs_dimer_identity(
    ratio: float, c_value: complex, distance: float, arg_k: float = 0.0, bracket=(-30.0, 30.0)
) -> float:
    """Solve the point-scatterer ratio identity for |k| given arg(k)."""

    def f(log_k):
        return dimer_ratio_identity(c_value, distance, np.exp(log_k + 1j * arg_k)) - ratio

    grid = np.linspace(*bracket, 601)
    vals = np.array([f(g) for g in grid])
    sign = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0)[0]
    if sign.size == 0:
        raise InversionError("ratio identity has no root in the search bracket")
    # the physical branch is the one closest to log|k| = 0
    roots = [brentq(f, grid[i], grid[i + 1], xtol=1e-14) for i in sign]
    return float(np.exp(min(roots, key=abs)))


def leading_dimer_ratio(c_value: float, distance: float, wavenumber: complex) -> float:
    """Energy ratio predicted by the leading identity (1 - C Phi0)^2 / |1 - C X|^2."""
    x = kernel_constant(wavenumber)
    phi0 = -math.log(distance) / (2 * math.pi)
    return (1 - c_value * phi0) ** 2 / abs(1 - c_value * x) ** 2


# ---------------------------------------------------------------------------
# Two resonances


@dataclass(frozen=True)
class SplitResult:
    eps_r: float
    sigma: float
    eps_r_sq: float
    sigma_sq: float


def k_abs_from_material(eps_r: float, sigma: float, omega: float, mu0: float = 1.0, convention: str = "wavenumber") -> float:
    """|k| for permittivity eps_r + i sigma / omega.

    ``wavenumber``: |k| = omega sqrt(mu0 |eps|).  ``squared``: |k| = omega^2 mu0 |eps|.
    """
    modulus = math.hypot(eps_r, sigma / omega)
    if convention == "wavenumber":
        return omega * math.sqrt(mu0 * modulus)
    if convention == "squared":
        return omega**2 * mu0 * modulus
    raise ValueError(f"unknown convention {convention!r}")


def split_eps_sigma(k1: float, omega1: float, k2: float, omega2: float, mu0: float = 1.0, convention: str = "wavenumber") -> SplitResult:
    """(eps_r, sigma) from |k| at two frequencies via eps_r^2 + sigma^2/omega^2 = |eps|^2."""
    if k1 <= 0 or k2 <= 0:
        raise InversionError("|k| values must be positive")
    if omega1 <= 0 or omega2 <= 0 or omega1 == omega2:
        raise InversionError("need two distinct positive frequencies")
    if convention == "wavenumber":
        q1, q2 = (k1**2 / (omega1**2 * mu0)) ** 2, (k2**2 / (omega2**2 * mu0)) ** 2
    elif convention == "squared":
        q1, q2 = (k1 / (omega1**2 * mu0)) ** 2, (k2 / (omega2**2 * mu0)) ** 2
    else:
        raise ValueError(f"unknown convention {convention!r}")
    sigma_sq = (q1 - q2) / (1 / omega1**2 - 1 / omega2**2)
    eps_sq = q1 - sigma_sq / omega1**2
    scale = max(abs(q1), abs(q2))
    if sigma_sq < -1e-12 * scale * max(omega1, omega2) ** 2 or eps_sq < -1e-12 * scale:
        raise InversionError(f"inconsistent data: eps_r^2 = {eps_sq:.6g}, sigma^2 = {sigma_sq:.6g}")
    eps_sq, sigma_sq = max(eps_sq, 0.0), max(sigma_sq, 0.0)
    return SplitResult(eps_r=math.sqrt(eps_sq), sigma=math.sqrt(sigma_sq), eps_r_sq=eps_sq, sigma_sq=sigma_sq)


# ---------------------------------------------------------------------------
# Localization


def point_source_pressure(t, radius, amplitude: float = 1.0):
    """Leading-order model amplitude * t / (t^2 - R^2)^(3/2) (times in length units)."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= radius):
        raise InversionError("time inside the light cone of the source")
    return amplitude * t / (t * t - radius * radius) ** 1.5


def localize_radius(t1: float, p1: float, t2: float, p2: float) -> float:
    """|x - z| from the pressure at two times, inverting t / (t^2 - R^2)^(3/2)."""
    if t1 == t2:
        raise InversionError("need two distinct times")
    if p1 == 0 or p2 == 0 or np.sign(p1) != np.sign(p2):
        raise InversionError("pressures must be nonzero with a common sign")
    if t1 > t2:
        t1, p1, t2, p2 = t2, p2, t1, p1
    g1 = abs(t2 * p1) ** (2.0 / 3.0)
    g2 = abs(t1 * p2) ** (2.0 / 3.0)
    if not g1 > g2:
        raise InversionError("pressure ratio violates the monotone decay of the model in t")
    radicand = (t1 * t1 * g1 - t2 * t2 * g2) / (g1 - g2)
    if radicand < 0:
        raise InversionError(f"negative radicand {radicand:.6g}: inconsistent measurements")
    return math.sqrt(radicand)


@dataclass(frozen=True)
class Localization:
    points: tuple  # candidate centres
    radii: tuple
    ambiguous: bool


def intersect_circles(x1, r1: float, x2, r2: float, inside=None) -> Localization:
    """Intersection of two circles; interior points (per ``inside``) preferred."""
    x1, x2 = np.asarray(x1, float), np.asarray(x2, float)
    delta = x2 - x1
    dist = float(np.hypot(*delta))
    if dist == 0:
        raise InversionError("sensors coincide")
    if dist > r1 + r2:
        raise InversionError(f"circles do not meet: gap {dist - r1 - r2:.6g}")
    if dist < abs(r1 - r2):
        raise InversionError(f"one circle lies inside the other: gap {abs(r1 - r2) - dist:.6g}")
    along = (r1 * r1 - r2 * r2 + dist * dist) / (2 * dist)
    half = math.sqrt(max(r1 * r1 - along * along, 0.0))
    unit = delta / dist
    normal = np.array([-unit[1], unit[0]])
    base = x1 + along * unit
    cands = [base + half * normal, base - half * normal] if half > 0 else [base]
    if inside is not None:
        interior = [c for c in cands if inside(c)]
        if interior:
            cands = interior
    return Localization(points=tuple(tuple(map(float, c)) for c in cands), radii=(r1, r2), ambiguous=len(cands) > 1)


def localize_from_pressure(sensor_a, pressures_a, sensor_b, pressures_b, times, c_s: float = 1.0, inside=None) -> Localization:
    """Particle position from two sensors, each sampled at the same two times."""
    t1, t2 = (c_s * float(t) for t in times)
    r_a = localize_radius(t1, pressures_a[0], t2, pressures_a[1])
    r_b = localize_radius(t1, pressures_b[0], t2, pressures_b[1])
    return intersect_circles(sensor_a, r_a, sensor_b, r_b, inside=inside)


# ---------------------------------------------------------------------------
# |u0| from pressure


def check_regime(h: float, s: float) -> None:
    """Enforce 0 <= s < min(h, 1 - h)."""
    if not 0 <= s < min(h, 1 - h):
        raise InversionError(f"s = {s} outside [0, min(h, 1-h)) = [0, {min(h, 1 - h)})")


def recover_u0_abs_from_pressure(
    p_sum: float,
    t: float,
    radius: float,
    spec: SpectralData,
    tau: complex,
    omegas,
    mu0: float = 1.0,
    n0: int = 0,
    c_s: float = 1.0,
) -> float:
    """|u0(z)| from the normalized combination p+ + p- - 2 p0 at one (t, x).

    ``omegas`` are the two detuned frequencies; each contributes its own
    resonant gain.  Pressures carry no physical prefactor (normalized).
    """
    if np.imag(tau) == 0:
        raise InversionError("Im(tau) = 0 gives no photoacoustic signal")
    ct = c_s * t
    if ct <= radius:
        raise InversionError("time inside the light cone of the particle")
    mean = _mode_mean(spec, n0)
    gain = sum(1.0 / abs(resonance_residual(spec, tau, w, mu0, n0)) ** 2 for w in omegas)
    value = -p_sum * (ct * ct - radius * radius) ** 1.5 / (ct * np.imag(tau) * mean**2 * gain)
    if value <= 0:
        raise InversionError(f"nonpositive |u0|^2 = {value:.6g}: inconsistent measurement")
    return math.sqrt(value)
