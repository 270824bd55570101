"""Scenario description: medium, nanoparticles, incident wave, sensors.

Scenario files are TOML with sections [medium], [[particles]], [wave],
[sensors] and [numerics]; see docs/scenario_schema.md.  Every value object is
frozen, and ``load_scenario(save_scenario(s))`` reproduces ``s`` exactly.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Union

import numpy as np
import tomli
import tomli_w

SCHEMA_VERSION = 1
MODERATE_SIGMA = 1.0


class ScenarioError(ValueError):
    """Schema or invariant violation; ``problems`` lists every diagnostic."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


# ---------------------------------------------------------------------------
# Regions


@dataclass(frozen=True)
class DiscRegion:
    center: tuple[float, float] = (0.0, 0.0)
    radius: float = 1.0
    kind: str = field(default="disc", init=False)

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    def contains_disc(self, center, radius: float) -> bool:
        return math.dist(center, self.center) + radius <= self.radius

    def on_boundary(self, point, rel: float = 1e-10) -> bool:
        return abs(math.dist(point, self.center) - self.radius) <= rel * self.radius

    def boundary_points(self, n: int) -> np.ndarray:
        theta = 2 * np.pi * np.arange(n) / n
        return np.stack([self.center[0] + self.radius * np.cos(theta), self.center[1] + self.radius * np.sin(theta)], axis=1)


@dataclass(frozen=True)
class RectRegion:
    lower: tuple[float, float] = (0.0, 0.0)
    upper: tuple[float, float] = (1.0, 1.0)
    kind: str = field(default="rectangle", init=False)

    @property
    def widths(self) -> tuple[float, float]:
        return (self.upper[0] - self.lower[0], self.upper[1] - self.lower[1])

    @property
    def diameter(self) -> float:
        return math.hypot(*self.widths)

    def contains_disc(self, center, radius: float) -> bool:
        return all(self.lower[i] + radius <= center[i] <= self.upper[i] - radius for i in range(2))

    def on_boundary(self, point, rel: float = 1e-10) -> bool:
        tol = rel * self.diameter
        inside = all(self.lower[i] - tol <= point[i] <= self.upper[i] + tol for i in range(2))
        edge = any(abs(point[i] - b[i]) <= tol for i in range(2) for b in (self.lower, self.upper))
        return inside and edge


Region = Union[DiscRegion, RectRegion]


# ---------------------------------------------------------------------------
# Physical objects


@dataclass(frozen=True)
class BackgroundMedium:
    """Homogeneous tissue filling Omega; eps = eps_r + i sigma / omega."""

    eps_r: float = 1.0
    sigma: float = 0.0
    eps_vac: float = 1.0
    mu0: float = 1.0
    c_s: float = 1.0
    beta0: float = 1.0
    c_p: float = 1.0
    domain: Region = DiscRegion()
    normalize_pressure: bool = False

    def permittivity(self, omega: float) -> complex:
        if omega is None or omega == 0:
            raise ValueError("omega must be nonzero to form sigma / omega")
        return complex(self.eps_r, self.sigma / omega)

    def wavenumber(self, omega: float) -> complex:
        """k = omega sqrt(eps mu0) on the branch with Im k >= 0."""
        return complex(omega * np.sqrt(self.permittivity(omega) * self.mu0 + 0j))

    def heating_constant(self, omega: float) -> float:
        """Prefactor omega beta0 / c_p of the initial pressure."""
        return omega * self.beta0 / self.c_p

    def pressure_constant(self, omega: float) -> float:
        """omega beta0 / (2 pi c_p): the prefactor normalized pressures divide out."""
        return omega * self.beta0 / (2 * math.pi * self.c_p)


@dataclass(frozen=True)
class Nanoparticle:
    """Particle z + aB.  eps_rel: "auto" or a value; sigma: "moderate",
    "contrasted" or a value."""

    center: tuple[float, float]
    radius: float
    shape: str = "disc"
    eps_rel: Union[str, float] = "auto"
    sigma: Union[str, float] = "moderate"

    @property
    def log_radius(self) -> float:
        return abs(math.log(self.radius))


@dataclass(frozen=True)
class IncidentWave:
    """Plane wave exp(i k d.x).  mode "detuned" places omega at
    omega_n0^2 (1 + sign |log a|^-h); mode "explicit" uses omega as given."""

    direction: tuple[float, float] = (1.0, 0.0)
    mode: str = "detuned"
    omega: float | None = None
    n0: int = 0
    h: float = 0.5
    sign: int = 1
    s: float = 0.0


@dataclass(frozen=True)
class SensorLayout:
    points: tuple[tuple[float, float], ...] = ()
    times: tuple[float, ...] = ()


@dataclass(frozen=True)
class Bump:
    """Gaussian initial-pressure bump amplitude exp(-|x - center|^2 / (2 width^2))."""

    center: tuple[float, float]
    width: float
    amplitude: float = 1.0


@dataclass(frozen=True)
class Numerics:
    n_cells: int = 1024
    n_modes: int = 40
    foldy_lax_override: bool = False
    threads: int = 1


@dataclass(frozen=True)
class Scenario:
    medium: BackgroundMedium
    particles: tuple[Nanoparticle, ...] = ()
    wave: IncidentWave = IncidentWave()
    sensors: SensorLayout = SensorLayout()
    numerics: Numerics = Numerics()
    seed: int = 0
    phantom: tuple[Bump, ...] = ()

    @property
    def omega(self) -> float:
        if self.wave.omega is None:
            raise ValueError("omega is not resolved; resolve the detuned frequency first")
        return self.wave.omega

    def with_omega(self, omega: float) -> "Scenario":
        return replace(self, wave=replace(self.wave, omega=float(omega)))

    def with_particles(self, particles) -> "Scenario":
        return replace(self, particles=tuple(particles))

    @property
    def wavenumber(self) -> complex:
        return self.medium.wavenumber(self.omega)


# ---------------------------------------------------------------------------
# Contrast


def auto_eps_rel(medium: BackgroundMedium, radius: float) -> float:
    """Particle permittivity giving Re tau = 1 / (a^2 |log a|)."""
    return medium.eps_r + 1.0 / (radius**2 * abs(math.log(radius)))


def contrasted_sigma(medium: BackgroundMedium, radius: float, omega: float, h: float, s: float) -> float:
    """Particle conductivity giving Im tau = 1 / (a^2 |log a|^(1+h+s))."""
    return medium.sigma + omega / (radius**2 * abs(math.log(radius)) ** (1 + h + s))


def contrast_tau(scenario: Scenario, index: int, omega: float | None = None) -> complex:
    """tau = eps_p - eps_background for particle ``index`` at frequency omega."""
    if not 0 <= index < len(scenario.particles):
        raise IndexError(f"no particle {index}")
    omega = scenario.omega if omega is None else omega
    if omega == 0:
        raise ValueError("omega = 0 leaves sigma / omega undefined")
    p = scenario.particles[index]
    medium = scenario.medium
    eps_rel = auto_eps_rel(medium, p.radius) if p.eps_rel == "auto" else float(p.eps_rel)
    if p.sigma == "moderate":
        sigma = MODERATE_SIGMA
    elif p.sigma == "contrasted":
        sigma = contrasted_sigma(medium, p.radius, omega, scenario.wave.h, scenario.wave.s)
    else:
        sigma = float(p.sigma)
    return complex(eps_rel, sigma / omega) - medium.permittivity(omega)


def invertibility_distance(radius: float, h: float) -> float:
    """Smallest admissible pair distance exp(-|log a|^(1-h))."""
    return math.exp(-(abs(math.log(radius)) ** (1 - h)))


def dimer_distance(radius: float, h: float, kappa: float = 1.0) -> float:
    """Dimer separation kappa a^(|log a|^-h)."""
    return kappa * radius ** (abs(math.log(radius)) ** (-h))


# ---------------------------------------------------------------------------
# Validation


def validate(scenario: Scenario) -> Scenario:
    problems = []
    m = scenario.medium
    if m.eps_r <= 0:
        problems.append(f"medium.eps_r must be > 0, got {m.eps_r}")
    if m.sigma < 0:
        problems.append(f"medium.sigma must be >= 0, got {m.sigma}")
    for name in ("mu0", "c_s", "eps_vac"):
        if getattr(m, name) <= 0:
            problems.append(f"medium.{name} must be > 0, got {getattr(m, name)}")
    dom = m.domain
    if isinstance(dom, DiscRegion) and dom.radius <= 0:
        problems.append("domain: disc radius must be > 0 (Omega bounded)")
    if isinstance(dom, RectRegion) and min(dom.widths) <= 0:
        problems.append("domain: rectangle must have positive widths")

    w = scenario.wave
    if abs(math.hypot(*w.direction) - 1.0) > 1e-12:
        problems.append(f"wave.direction must be a unit vector, |d| = {math.hypot(*w.direction)}")
    if w.mode not in ("detuned", "explicit"):
        problems.append(f"wave.mode must be 'detuned' or 'explicit', got {w.mode!r}")
    if w.mode == "explicit" and (w.omega is None or w.omega <= 0):
        problems.append("wave.omega must be > 0 in explicit mode")
    if w.mode == "detuned":
        if not 0 < w.h < 1:
            problems.append(f"wave.h must lie in (0, 1), got {w.h}")
        if w.sign not in (-1, 1):
            problems.append(f"wave.sign must be +1 or -1, got {w.sign}")
    if w.s < 0:
        problems.append(f"wave.s must be >= 0, got {w.s}")

    for i, p in enumerate(scenario.particles):
        if p.radius <= 0:
            problems.append(f"particles[{i}].radius must be > 0")
            continue
        if p.radius > dom.diameter / 100:
            problems.append(
                f"particles[{i}]: radius {p.radius} exceeds diam(Omega)/100 = {dom.diameter / 100} (small-particle invariant)"
            )
        if not dom.contains_disc(p.center, p.radius):
            problems.append(f"particles[{i}]: disc(z, a) with z={p.center}, a={p.radius} is not contained in Omega")
        if not (p.shape == "disc" or p.shape.startswith("ellipse:")):
            problems.append(f"particles[{i}].shape must be 'disc' or 'ellipse:<aspect>', got {p.shape!r}")
        if isinstance(p.eps_rel, str) and p.eps_rel != "auto":
            problems.append(f"particles[{i}].eps_rel must be 'auto' or a number")
        if isinstance(p.sigma, str) and p.sigma not in ("moderate", "contrasted"):
            problems.append(f"particles[{i}].sigma must be 'moderate', 'contrasted' or a number")
    if scenario.particles:
        first = scenario.particles[0]
        for i, p in enumerate(scenario.particles[1:], start=1):
            if (p.radius, p.shape, p.eps_rel, p.sigma) != (first.radius, first.shape, first.eps_rel, first.sigma):
                problems.append(f"particles[{i}]: all particles must share radius, shape and material parameters")
        if len(scenario.particles) > 1 and first.radius < 1:
            d_min = invertibility_distance(first.radius, w.h)
            for i in range(len(scenario.particles)):
                for j in range(i + 1, len(scenario.particles)):
                    d = math.dist(scenario.particles[i].center, scenario.particles[j].center)
                    if d < d_min * (1 - 1e-9):
                        problems.append(
                            f"particles[{i}], particles[{j}]: distance {d:.6g} below the invertibility bound "
                            f"exp(-|log a|^(1-h)) = {d_min:.6g}"
                        )

    pts = scenario.sensors.points
    for i, x in enumerate(pts):
        if not dom.on_boundary(x):
            problems.append(f"sensors.points[{i}] = {x} is not on the boundary of Omega")
    times = np.asarray(scenario.sensors.times, dtype=float)
    if times.size and (np.any(times <= 0) or np.any(np.diff(times) <= 0)):
        problems.append("sensors.times must be positive and strictly increasing")

    for i, b in enumerate(scenario.phantom):
        if b.width <= 0:
            problems.append(f"phantom[{i}].width must be > 0")
        if isinstance(dom, DiscRegion) and math.dist(b.center, dom.center) + 4 * b.width > dom.radius:
            problems.append(f"phantom[{i}]: bump is not supported inside Omega (4 widths from the boundary)")
        if isinstance(dom, RectRegion) and not all(
            lo + 4 * b.width <= c <= hi - 4 * b.width for c, lo, hi in zip(b.center, dom.lower, dom.upper)
        ):
            problems.append(f"phantom[{i}]: bump is not supported inside Omega (4 widths from the boundary)")

    n = scenario.numerics
    if n.n_cells < 16:
        problems.append(f"numerics.n_cells must be >= 16, got {n.n_cells}")
    if n.threads < 1:
        problems.append("numerics.threads must be >= 1")
    if problems:
        raise ScenarioError(problems)
    return scenario


# ---------------------------------------------------------------------------
# TOML serialization


def _region_from(data: dict) -> Region:
    kind = data.get("shape", "disc")
    if kind == "disc":
        return DiscRegion(center=tuple(map(float, data.get("center", (0.0, 0.0)))), radius=float(data.get("radius", 1.0)))
    if kind == "rectangle":
        return RectRegion(lower=tuple(map(float, data["lower"])), upper=tuple(map(float, data["upper"])))
    raise ScenarioError([f"medium.omega.shape must be 'disc' or 'rectangle', got {kind!r}"])


def _region_to(region: Region) -> dict:
    if isinstance(region, DiscRegion):
        return {"shape": "disc", "center": list(region.center), "radius": region.radius}
    return {"shape": "rectangle", "lower": list(region.lower), "upper": list(region.upper)}


def _scalar_rule(value, names: tuple[str, ...], where: str):
    if isinstance(value, str):
        if value not in names:
            raise ScenarioError([f"{where} must be one of {names} or a number, got {value!r}"])
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError([f"{where} must be one of {names} or a number"])
    return float(value)


def _take(section: dict, cls, where: str, convert: dict) -> dict:
    allowed = {f for f in cls.__dataclass_fields__ if cls.__dataclass_fields__[f].init}
    unknown = set(section) - allowed - set(convert.get("_extra", ()))
    if unknown:
        raise ScenarioError([f"{where}: unknown field(s) {sorted(unknown)}"])
    out = {}
    for key, value in section.items():
        if key in convert:
            try:
                out[key] = convert[key](value)
            except (TypeError, ValueError) as exc:
                raise ScenarioError([f"{where}.{key}: {exc}"]) from None
        else:
            out[key] = value
    return out


def scenario_from_dict(data: dict) -> Scenario:
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ScenarioError([f"schema_version must be {SCHEMA_VERSION}, got {version!r}"])
    known = {"schema_version", "seed", "medium", "particles", "wave", "sensors", "numerics", "phantom"}
    unknown = set(data) - known
    if unknown:
        raise ScenarioError([f"unknown top-level field(s) {sorted(unknown)}"])
    medium_raw = dict(data.get("medium", {}))
    region = _region_from(medium_raw.pop("omega", {}))
    medium = BackgroundMedium(
        domain=region,
        **_take(medium_raw, BackgroundMedium, "medium", {k: float for k in ("eps_r", "sigma", "eps_vac", "mu0", "c_s", "beta0", "c_p")} | {"normalize_pressure": bool}),
    )
    particles = []
    for i, raw in enumerate(data.get("particles", [])):
        where = f"particles[{i}]"
        fields = _take(
            raw,
            Nanoparticle,
            where,
            {
                "center": lambda v: tuple(map(float, v)),
                "radius": float,
                "shape": str,
                "eps_rel": lambda v, w=where: _scalar_rule(v, ("auto",), w + ".eps_rel"),
                "sigma": lambda v, w=where: _scalar_rule(v, ("moderate", "contrasted"), w + ".sigma"),
            },
        )
        missing = {"center", "radius"} - set(fields)
        if missing:
            raise ScenarioError([f"{where}: missing field(s) {sorted(missing)}"])
        particles.append(Nanoparticle(**fields))
    wave = IncidentWave(
        **_take(
            data.get("wave", {}),
            IncidentWave,
            "wave",
            {
                "direction": lambda v: tuple(map(float, v)),
                "mode": str,
                "omega": float,
                "n0": int,
                "h": float,
                "sign": int,
                "s": float,
            },
        )
    )
    sensors = _sensors_from(data.get("sensors", {}), region)
    numerics = Numerics(**_take(data.get("numerics", {}), Numerics, "numerics", {"n_cells": int, "n_modes": int, "foldy_lax_override": bool, "threads": int}))
    phantom = []
    for i, raw in enumerate(data.get("phantom", [])):
        fields = _take(raw, Bump, f"phantom[{i}]", {"center": lambda v: tuple(map(float, v)), "width": float, "amplitude": float})
        missing = {"center", "width"} - set(fields)
        if missing:
            raise ScenarioError([f"phantom[{i}]: missing field(s) {sorted(missing)}"])
        phantom.append(Bump(**fields))
    scenario = Scenario(
        medium=medium,
        particles=tuple(particles),
        wave=wave,
        sensors=sensors,
        numerics=numerics,
        seed=int(data.get("seed", 0)),
        phantom=tuple(phantom),
    )
    return validate(scenario)


def _sensors_from(raw: dict, region: Region) -> SensorLayout:
    unknown = set(raw) - {"points", "count", "times", "t_start", "t_stop", "n_times"}
    if unknown:
        raise ScenarioError([f"sensors: unknown field(s) {sorted(unknown)}"])
    if "points" in raw:
        points = tuple(tuple(map(float, p)) for p in raw["points"])
    elif "count" in raw:
        if not isinstance(region, DiscRegion):
            raise ScenarioError(["sensors.count needs a disc Omega; give explicit points otherwise"])
        points = tuple(map(tuple, region.boundary_points(int(raw["count"])).tolist()))
    else:
        points = ()
    if "times" in raw:
        times = tuple(map(float, raw["times"]))
    elif "n_times" in raw:
        times = tuple(np.linspace(float(raw["t_start"]), float(raw["t_stop"]), int(raw["n_times"])).tolist())
    else:
        times = ()
    return SensorLayout(points=points, times=times)


def scenario_to_dict(scenario: Scenario) -> dict:
    medium = {k: v for k, v in asdict(scenario.medium).items() if k != "domain"}
    medium["omega"] = _region_to(scenario.medium.domain)
    wave = {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(scenario.wave).items() if v is not None}
    particles = [{k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(p).items()} for p in scenario.particles]
    sensors = {"points": [list(p) for p in scenario.sensors.points], "times": list(scenario.sensors.times)}
    return {
        "schema_version": SCHEMA_VERSION,
        "seed": scenario.seed,
        "medium": medium,
        "particles": particles,
        "wave": wave,
        "sensors": sensors,
        "numerics": asdict(scenario.numerics),
        "phantom": [{"center": list(b.center), "width": b.width, "amplitude": b.amplitude} for b in scenario.phantom],
    }


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        data = tomli.loads(path.read_text(encoding="utf-8"))
    except tomli.TOMLDecodeError as exc:
        raise ScenarioError([f"{path}: {exc}"]) from None
    return scenario_from_dict(data)


def save_scenario(scenario: Scenario, path) -> None:
    Path(path).write_text(tomli_w.dumps(scenario_to_dict(scenario)), encoding="utf-8")


def dumps_scenario(scenario: Scenario) -> str:
    return tomli_w.dumps(scenario_to_dict(scenario))


def loads_scenario(text: str) -> Scenario:
    return scenario_from_dict(tomli.loads(text))
