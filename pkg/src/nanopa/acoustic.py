"""Photoacoustic forward model and the two acoustic inversions.

Forward: the 2D Poisson formula for the wave equation with initial pressure
H and zero initial velocity.  Inversions: circular means by Abel inversion
followed by filtered backprojection on a disc, and a Dirichlet eigenbasis
series on a rectangle.  Asymptotic pressure models for small particles
are also provided.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline, RegularGridInterpolator

from .mesh import CellMesh

SCHEMA_VERSION = 1
_THETA_NODES = 192


class AcousticError(ValueError):
    pass


class ResolutionWarning(UserWarning):
    pass


class TruncationWarning(UserWarning):
    pass


# ---------------------------------------------------------------------------
# Sources


@dataclass(frozen=True, eq=False)
class SmoothSource:
    """Initial pressure given as a vectorized function H(x, y).

    ``center`` and ``radius`` bound the support; ``n_angles`` and ``n_rho``
    set the circle quadrature and the radial grid of circular means.
    """

    func: object
    center: tuple = (0.0, 0.0)
    radius: float = 1.0
    n_angles: int = 512
    n_rho: int = 600

    def __call__(self, x, y):
        return self.func(x, y)


@dataclass(frozen=True, eq=False)
class CellSource:
    """Cell-wise constant initial pressure on one or more particle meshes."""

    meshes: tuple
    values: tuple  # per mesh, (N,) arrays

    def __post_init__(self):
        if len(self.meshes) != len(self.values):
            raise ValueError("one value array per mesh")

    @property
    def total(self) -> float:
        return float(sum(np.sum(v * m.areas) for m, v in zip(self.meshes, self.values)))


@dataclass(frozen=True, eq=False)
class InitialPressureMap:
    """Initial pressure sampled on a tensor grid; zero outside ``inside``."""

    x: np.ndarray
    y: np.ndarray
    values: np.ndarray  # (len(x), len(y))
    inside: np.ndarray | None = None
    label: str = ""

    @classmethod
    def from_function(cls, func, x, y, inside=None, label: str = "") -> "InitialPressureMap":
        xx, yy = np.meshgrid(x, y, indexing="ij")
        vals = np.asarray(func(xx, yy), dtype=float)
        mask = None if inside is None else inside(xx, yy)
        if mask is not None:
            vals = np.where(mask, vals, 0.0)
        return cls(np.asarray(x, float), np.asarray(y, float), vals, mask, label)

    def interpolator(self):
        return RegularGridInterpolator((self.x, self.y), self.values, method="cubic", bounds_error=False, fill_value=0.0)

    def as_source(self, center, radius: float, n_angles: int = 512) -> SmoothSource:
        interp = self.interpolator()

        def func(x, y):
            pts = np.stack([np.ravel(x), np.ravel(y)], axis=1)
            return interp(pts).reshape(np.shape(x))

        return SmoothSource(func, tuple(center), radius, n_angles)

    def relative_l2_error(self, other: "InitialPressureMap") -> float:
        mask = np.ones_like(self.values, bool) if self.inside is None else self.inside
        diff = (self.values - other.values)[mask]
        return float(np.linalg.norm(diff) / np.linalg.norm(other.values[mask]))


# ---------------------------------------------------------------------------
# Pressure records


@dataclass(frozen=True, eq=False)
class PressureRecord:
    """Pressure traces p(x_i, t_j).

    When ``normalized`` is set the values are the physical pressure divided
    by ``constant`` (omega beta0 / (2 pi c_p)).
    """

    sensors: np.ndarray  # (S, 2)
    times: np.ndarray  # (T,)
    values: np.ndarray  # (S, T)
    c_s: float = 1.0
    normalized: bool = False
    constant: float = 1.0
    provenance: str = "poisson"

    def __post_init__(self):
        object.__setattr__(self, "sensors", np.atleast_2d(np.asarray(self.sensors, float)))
        object.__setattr__(self, "times", np.asarray(self.times, float))
        object.__setattr__(self, "values", np.atleast_2d(np.asarray(self.values, float)))
        if self.values.shape != (self.sensors.shape[0], self.times.size):
            raise ValueError(f"values shape {self.values.shape} does not match sensors x times")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("pressure values must be finite")

    def physical(self) -> np.ndarray:
        return self.values * self.constant if self.normalized else self.values

    def normalized_values(self) -> np.ndarray:
        return self.values if self.normalized else self.values / self.constant

    def with_normalization(self, normalized: bool) -> "PressureRecord":
        vals = self.normalized_values() if normalized else self.physical()
        return PressureRecord(self.sensors, self.times, vals, self.c_s, normalized, self.constant, self.provenance)

    def __add__(self, other: "PressureRecord") -> "PressureRecord":
        return self.combine(other, 1.0, 1.0)

    def __sub__(self, other: "PressureRecord") -> "PressureRecord":
        return self.combine(other, 1.0, -1.0)

    def combine(self, other: "PressureRecord", alpha: float, beta: float) -> "PressureRecord":
        """alpha * self + beta * other on normalized values."""
        if not (np.array_equal(self.sensors, other.sensors) and np.array_equal(self.times, other.times)):
            raise ValueError("records must share sensors and times")
        vals = alpha * self.normalized_values() + beta * other.normalized_values()
        return PressureRecord(self.sensors, self.times, vals, self.c_s, True, 1.0, "combination")

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# schema_version={SCHEMA_VERSION}\n")
        buf.write(f"# normalized={'true' if self.normalized else 'false'}\n")
        buf.write(f"# c_s={self.c_s!r}\n")
        buf.write(f"# constant={self.constant!r}\n")
        buf.write(f"# provenance={self.provenance}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["sensor_index", "x", "y", "t", "p"])
        for i, (x, y) in enumerate(self.sensors):
            for j, t in enumerate(self.times):
                w.writerow([i, repr(float(x)), repr(float(y)), repr(float(t)), repr(float(self.values[i, j]))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "PressureRecord":
        meta, rows = {}, []
        for line in text.splitlines():
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                meta[key.strip()] = val.strip()
            elif line.strip():
                rows.append(line)
        if int(meta.get("schema_version", -1)) != SCHEMA_VERSION:
            raise ValueError(f"unsupported pressure record schema {meta.get('schema_version')}")
        reader = csv.DictReader(rows)
        data: dict[int, dict] = {}
        times: list[float] = []
        for r in reader:
            i = int(r["sensor_index"])
            entry = data.setdefault(i, {"xy": (float(r["x"]), float(r["y"])), "p": []})
            entry["p"].append(float(r["p"]))
            if i == 0:
                times.append(float(r["t"]))
        idx = sorted(data)
        return cls(
            sensors=np.array([data[i]["xy"] for i in idx]),
            times=np.array(times),
            values=np.array([data[i]["p"] for i in idx]),
            c_s=float(meta["c_s"]),
            normalized=meta["normalized"] == "true",
            constant=float(meta["constant"]),
            provenance=meta.get("provenance", ""),
        )


# ---------------------------------------------------------------------------
# Forward: Poisson formula


def circular_mean(func, point, rho, n_angles: int = 512) -> np.ndarray:
    """Mean of func over circles |y - point| = rho (trapezoid rule in angle)."""
    rho = np.asarray(rho, float)
    phi = 2 * np.pi * np.arange(n_angles) / n_angles
    xs = point[0] + rho[..., None] * np.cos(phi)
    ys = point[1] + rho[..., None] * np.sin(phi)
    return np.mean(func(xs, ys), axis=-1)


def _theta_rule(n: int = _THETA_NODES):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.25 * np.pi * (x + 1), 0.25 * np.pi * w


def _radial_profile(source: SmoothSource, point):
    point = np.asarray(point, float)
    reach = float(np.hypot(*(point - np.asarray(source.center)))) + source.radius
    rho = np.linspace(0.0, reach * 1.02, source.n_rho)
    means = circular_mean(source, point, rho, source.n_angles)
    # M is even in rho, so the clamped end condition M'(0) = 0 is exact
    return CubicSpline(rho, means, bc_type=((1, 0.0), (1, 0.0))), rho[-1]


def _poisson_smooth(source: SmoothSource, point, times, c_s: float) -> np.ndarray:
    spline, reach = _radial_profile(source, point)
    deriv = spline.derivative()
    theta, w = _theta_rule()
    sin = np.sin(theta)
    r = c_s * np.asarray(times, float)
    rho = r[:, None] * sin[None, :]
    inside = rho <= reach
    m = np.where(inside, spline(np.minimum(rho, reach)), 0.0)
    dm = np.where(inside, deriv(np.minimum(rho, reach)), 0.0)
    return (m * sin + r[:, None] * dm * sin**2) @ w


def _poisson_cells(source: CellSource, point, times, c_s: float) -> np.ndarray:
    r = c_s * np.asarray(times, float)
    out = np.zeros_like(r)
    for mesh, vals in zip(source.meshes, source.values):
        d2 = np.sum((mesh.quad_points - point) ** 2, axis=2)
        if np.any(r[:, None] ** 2 <= d2.max()):
            raise AcousticError("wavefront crosses a source cell; cell sources need c_s t > max |x - y|")
        weights = (mesh.quad_weights * vals[:, None]).ravel()
        out += ((r[:, None] ** 2 - d2.ravel()[None, :]) ** -1.5) @ weights
    return -r * out / (2 * np.pi)


def forward_pressure_poisson(
    source,
    sensors,
    times,
    c_s: float = 1.0,
    region=None,
    constant: float = 1.0,
    normalized: bool = False,
) -> PressureRecord:
    """p(x,t) = (1/(2 pi c)) d/dt int_{|x-y|<ct} H(y) / sqrt(c^2 t^2 - |x-y|^2) dy.

    Smooth sources: r = ct sin(theta) turns the integral into
    int_0^{pi/2} [sin M(r sin) + r sin^2 M'(r sin)] dtheta with M the circular
    mean, computed on a radial grid and splined.  Cell sources: the analytic
    t-derivative of the cell integrals.  With ``normalized`` the values are
    divided by ``constant``.
    """
    sensors = np.atleast_2d(np.asarray(sensors, float))
    times = np.asarray(times, float)
    if np.any(times < 0):
        raise AcousticError("times must be nonnegative")
    if c_s <= 0:
        raise AcousticError("c_s must be positive")
    if region is not None:
        off = [i for i, x in enumerate(sensors) if not region.on_boundary(x)]
        if off:
            raise AcousticError(f"sensors {off[:5]} are not on the boundary")
    sources = source if isinstance(source, (list, tuple)) else [source]
    values = np.zeros((len(sensors), times.size))
    for src in sources:
        for i, x in enumerate(sensors):
            if isinstance(src, CellSource):
                values[i] += _poisson_cells(src, x, times, c_s)
            elif isinstance(src, SmoothSource):
                values[i] += _poisson_smooth(src, x, times, c_s)
            else:
                raise TypeError(f"unsupported source {type(src).__name__}")
    if normalized:
        values = values / constant
    return PressureRecord(sensors, times, values, c_s, normalized, constant, "poisson")


# ---------------------------------------------------------------------------
# Asymptotic pressure models (normalized units, times scaled by c_s)


def _cone_factor(t, distance, c_s):
    ct = c_s * np.asarray(t, float)
    if np.any(ct <= distance):
        raise AcousticError("evaluation outside the light cone of the particle")
    return ct / (ct * ct - distance * distance) ** 1.5


def one_particle_pressure_model(t, distance: float, im_tau: float, coeff_sq_plus: float, coeff_sq_minus: float | None = None, c_s: float = 1.0):
    """Leading term of p+ + p- - 2 p0: -t Im(tau) (|<u+,e>|^2 + |<u-,e>|^2) / (t^2 - R^2)^(3/2)."""
    total = coeff_sq_plus + (coeff_sq_plus if coeff_sq_minus is None else coeff_sq_minus)
    return -im_tau * total * _cone_factor(t, distance, c_s)


def one_particle_pressure_from_u0(t, distance, im_tau, u0_abs, mean, residuals, c_s: float = 1.0):
    """Leading term written through |u0(z)|: each resonance adds |u0|^2 (int e)^2 / |residual|^2."""
    coeffs = [u0_abs**2 * mean**2 / abs(r) ** 2 for r in residuals]
    if len(coeffs) == 1:
        coeffs = coeffs * 2
    return one_particle_pressure_model(t, distance, im_tau, coeffs[0], coeffs[1], c_s)


def dimer_pressure_combination(p_plus, p_minus, p_zero, omega_n0: float):
    """(p+ - p0) + ((1 - w^2) / (1 + w^2)) (p- - p0)."""
    ratio = (1 - omega_n0**2) / (1 + omega_n0**2)
    return (np.asarray(p_plus) - p_zero) + ratio * (np.asarray(p_minus) - p_zero)


def dimer_pressure_model(t, distance: float, im_tau: float, coeff_sq: float, omega_n0: float, c_s: float = 1.0):
    """Leading term of the dimer combination: -t 4 Im(tau) / (1 + w^2) |<u2,e>|^2 / (t^2 - R^2)^(3/2)."""
    return -4 * im_tau / (1 + omega_n0**2) * coeff_sq * _cone_factor(t, distance, c_s)


# ---------------------------------------------------------------------------
# Case 1: disc, circular means and filtered backprojection


def circular_means_from_pressure(record: PressureRecord, radii, region_radius: float, n_theta: int = 256) -> np.ndarray:
    """M(H)(x_i, r) = (2/pi) int_0^{pi/2} p(x_i, r sin(theta) / c) dtheta.

    Traces are taken as zero before the first sample (support away from the
    sensors) and splined in time.
    """
    radii = np.asarray(radii, float)
    if np.any(radii > 2 * region_radius * (1 + 1e-12)):
        raise AcousticError("radii beyond the disc diameter")
    if np.any(radii < 0):
        raise AcousticError("radii must be nonnegative")
    p = record.physical()
    t = record.times
    theta, w = _theta_rule(n_theta)
    sin = np.sin(theta)
    tq = radii[:, None] * sin[None, :] / record.c_s
    if tq.max() > t[-1] * (1 + 1e-12):
        raise AcousticError("record too short for the requested radii")
    out = np.empty((p.shape[0], radii.size))
    for i in range(p.shape[0]):
        tt, pp = t, p[i]
        if t[0] > 0:
            tt, pp = np.concatenate([[0.0], t]), np.concatenate([[0.0], pp])
        spline = CubicSpline(tt, pp)
        out[i] = (2 / np.pi) * (spline(tq) @ w)
    return out


def _d1_fourth_order(values: np.ndarray, step: float, left: str) -> np.ndarray:
    """4th-order centred first derivative along the last axis.

    ``left`` is the extension at index 0 ("even" or "odd"); the right end is
    padded with zeros (data vanish beyond the last radius).
    """
    if left == "even":
        pad_l = values[..., 2:0:-1]
    else:
        pad_l = -values[..., 2:0:-1]
    pad_r = np.zeros(values.shape[:-1] + (2,))
    ext = np.concatenate([pad_l, values, pad_r], axis=-1)
    return (ext[..., :-4] - 8 * ext[..., 1:-3] + 8 * ext[..., 3:-1] - ext[..., 4:]) / (12 * step)


def _xlog(u):
    u = np.asarray(u, float)
    out = np.zeros_like(u)
    nz = u != 0
    out[nz] = u[nz] * np.log(np.abs(u[nz]))
    return out


def _u2log(u):
    u = np.asarray(u, float)
    out = np.zeros_like(u)
    nz = u != 0
    out[nz] = u[nz] ** 2 * np.log(np.abs(u[nz]))
    return out


def _log_moments(lo, hi, c):
    """int_lo^hi log|r - c| dr and int_lo^hi r log|r - c| dr."""
    def f0(u):
        return _xlog(u) - u

    def f1(u):
        return 0.5 * _u2log(u) - 0.25 * u * u

    u_lo, u_hi = lo - c, hi - c
    i0 = f0(u_hi) - f0(u_lo)
    i1 = f1(u_hi) - f1(u_lo) + c * i0
    return i0, i1


def log_product_weights(r_grid: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Weights L with (L D)(rho) = int D(r) log|r^2 - rho^2| dr for piecewise-linear D."""
    r = np.asarray(r_grid, float)
    lo, hi = r[:-1][None, :], r[1:][None, :]
    step = hi - lo
    c = np.asarray(rho, float)[:, None]
    i0a, i1a = _log_moments(lo, hi, c)
    i0b, i1b = _log_moments(lo, hi, -c)
    i0, i1 = i0a + i0b, i1a + i1b
    left = (hi * i0 - i1) / step
    right = (i1 - lo * i0) / step
    weights = np.zeros((c.shape[0], r.size))
    weights[:, :-1] += left
    weights[:, 1:] += right
    return weights


def backprojection_kernel(means: np.ndarray, radii: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """F(rho) = int (d/dr r d/dr M) log|r^2 - rho^2| dr for each sensor row."""
    step = radii[1] - radii[0]
    if not np.allclose(np.diff(radii), step) or radii[0] != 0:
        raise AcousticError("radii must be a uniform grid starting at 0")
    dm = _d1_fourth_order(means, step, left="even")
    g = radii * dm
    d = _d1_fourth_order(g, step, left="even")
    return d @ log_product_weights(radii, rho).T


def invert_case1(
    record: PressureRecord,
    center,
    radius: float,
    grid=None,
    n_radii: int = 1025,
    n_rho: int = 2049,
) -> InitialPressureMap:
    """Reconstruct H on a disc from boundary traces (Abel step plus backprojection)."""
    n_sensors = record.sensors.shape[0]
    if n_sensors < 32:
        warnings.warn(f"only {n_sensors} sensors; reconstruction will be under-resolved", ResolutionWarning, stacklevel=2)
    center = np.asarray(center, float)
    dist = np.hypot(*(record.sensors - center).T)
    if not np.allclose(dist, radius, rtol=1e-8):
        raise AcousticError("case 1 needs sensors on a circle around the disc centre")
    radii = np.linspace(0.0, 2 * radius, n_radii)
    means = circular_means_from_pressure(record, radii, radius)
    rho = np.linspace(0.0, 2 * radius, n_rho)
    kernel = backprojection_kernel(means, radii, rho)
    if grid is None:
        grid = np.linspace(-radius, radius, 101)
    x = center[0] + np.asarray(grid)
    y = center[1] + np.asarray(grid)
    xx, yy = np.meshgrid(x, y, indexing="ij")
    inside = (xx - center[0]) ** 2 + (yy - center[1]) ** 2 <= radius**2
    recon = np.zeros_like(xx)
    for i, s in enumerate(record.sensors):
        dist = np.hypot(xx - s[0], yy - s[1])
        recon += np.interp(dist, rho, kernel[i])
    # quadrature over the sensor circle: (1 / (2 pi R)) * (2 pi R / S) per sensor
    recon = np.where(inside, recon / n_sensors, 0.0)
    return InitialPressureMap(x, y, recon, inside, "case1")


# ---------------------------------------------------------------------------
# Case 2: rectangle with the Dirichlet sine basis


@dataclass(frozen=True)
class RectangleBasis:
    """Orthonormal Dirichlet eigenfunctions of -c^2 Laplacian on a rectangle."""

    lower: tuple
    upper: tuple
    n_x: int
    n_y: int
    c_s: float = 1.0
    _indices: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        mm, nn = np.meshgrid(np.arange(1, self.n_x + 1), np.arange(1, self.n_y + 1), indexing="ij")
        object.__setattr__(self, "_indices", np.stack([mm.ravel(), nn.ravel()], axis=1))

    @property
    def widths(self):
        return self.upper[0] - self.lower[0], self.upper[1] - self.lower[1]

    @property
    def indices(self) -> np.ndarray:
        return self._indices

    @property
    def frequencies(self) -> np.ndarray:
        """s_k with s_k^2 the eigenvalue of -c^2 Laplacian."""
        lx, ly = self.widths
        m, n = self._indices.T
        return self.c_s * np.pi * np.sqrt((m / lx) ** 2 + (n / ly) ** 2)

    def _norm(self):
        lx, ly = self.widths
        return 2.0 / math.sqrt(lx * ly)

    def evaluate(self, x, y) -> np.ndarray:
        """(K, ...) values of every psi_k at the points."""
        lx, ly = self.widths
        m, n = self._indices.T
        sx = np.sin(np.multiply.outer(m * np.pi / lx, np.asarray(x) - self.lower[0]))
        sy = np.sin(np.multiply.outer(n * np.pi / ly, np.asarray(y) - self.lower[1]))
        return self._norm() * sx * sy

    def synthesize(self, coeffs, x, y) -> np.ndarray:
        xx, yy = np.meshgrid(x, y, indexing="ij")
        return np.tensordot(coeffs, self.evaluate(xx, yy), axes=1)

    def project(self, func, n_quad: int = 256) -> np.ndarray:
        """Coefficients <func, psi_k> by tensor Gauss-Legendre quadrature."""
        g, w = np.polynomial.legendre.leggauss(n_quad)
        lx, ly = self.widths
        x = self.lower[0] + lx * (g + 1) / 2
        y = self.lower[1] + ly * (g + 1) / 2
        wx, wy = w * lx / 2, w * ly / 2
        xx, yy = np.meshgrid(x, y, indexing="ij")
        f = func(xx, yy) * np.outer(wx, wy)
        lxm = self._indices[:, 0]
        lyn = self._indices[:, 1]
        sx = np.sin(np.outer(np.arange(1, self.n_x + 1) * np.pi / lx, x - self.lower[0]))
        sy = np.sin(np.outer(np.arange(1, self.n_y + 1) * np.pi / ly, y - self.lower[1]))
        table = self._norm() * sx @ f @ sy.T
        return table[lxm - 1, lyn - 1]

    def boundary_nodes(self, n_per_edge: int = 160):
        """Boundary quadrature points, weights and outward normal derivatives (K, P)."""
        g, w = np.polynomial.legendre.leggauss(n_per_edge)
        (x0, y0), (x1, y1) = self.lower, self.upper
        lx, ly = self.widths
        tx, ty = x0 + lx * (g + 1) / 2, y0 + ly * (g + 1) / 2
        wx, wy = w * lx / 2, w * ly / 2
        m, n = self._indices.T
        km, kn = m * np.pi / lx, n * np.pi / ly
        c = self._norm()
        sign_m, sign_n = (-1.0) ** m, (-1.0) ** n
        pts, wts, dn = [], [], []
        # left (x = x0, normal -x) and right (x = x1, normal +x)
        for xe, fac in ((x0, -np.ones_like(km)), (x1, sign_m)):
            pts.append(np.stack([np.full_like(ty, xe), ty], axis=1))
            wts.append(wy)
            dn.append(c * (fac * km)[:, None] * np.sin(np.outer(kn, ty - y0)))
        # bottom (y = y0, normal -y) and top (y = y1, normal +y)
        for ye, fac in ((y0, -np.ones_like(kn)), (y1, sign_n)):
            pts.append(np.stack([tx, np.full_like(tx, ye)], axis=1))
            wts.append(wx)
            dn.append(c * (fac * kn)[:, None] * np.sin(np.outer(km, tx - x0)))
        return np.concatenate(pts), np.concatenate(wts), np.concatenate(dn, axis=1)


def _second_derivative_even(values: np.ndarray, step: float) -> np.ndarray:
    """Centred second differences; traces are even in t, one-sided at the far end."""
    ext = np.concatenate([values[..., 1:2], values], axis=-1)
    out = np.empty_like(values)
    out[..., :-1] = (ext[..., :-2] - 2 * ext[..., 1:-1] + ext[..., 2:]) / step**2
    out[..., -1] = (2 * values[..., -1] - 5 * values[..., -2] + 4 * values[..., -3] - values[..., -4]) / step**2
    return out


def filon_sine(values: np.ndarray, times: np.ndarray, freqs: np.ndarray) -> np.ndarray:
    """int sin(s t) g(t) dt over the record for piecewise-linear g, exact per interval.

    values: (K, T) samples of g_k; freqs: (K,).
    """
    t0, t1 = times[:-1], times[1:]
    h = t1 - t0
    s = freqs[:, None]
    c0, c1 = np.cos(s * t0), np.cos(s * t1)
    s0, s1 = np.sin(s * t0), np.sin(s * t1)
    # int_{t0}^{t1} sin(s t) dt and int (t - t0) sin(s t) dt
    j0 = (c0 - c1) / s
    j1 = -h * c1 / s + (s1 - s0) / s**2
    g0, g1 = values[:, :-1], values[:, 1:]
    slope = (g1 - g0) / h
    return np.sum(g0 * j0 + slope * j1, axis=1)


@dataclass(frozen=True)
class Case2Result:
    coefficients: np.ndarray  # recovered H_k
    basis: RectangleBasis
    tail_bound: float

    def evaluate(self, x, y) -> np.ndarray:
        return self.basis.synthesize(self.coefficients, x, y)


def invert_case2(record: PressureRecord, basis: RectangleBasis, boundary_weights, normal_derivatives) -> Case2Result:
    """Eigenbasis coefficients of H from boundary traces on a rectangle.

    With p_k(t) = int_{dOmega} p d_nu psi_k (outward normal) and s_k^2 the
    eigenvalues of -c^2 Laplacian, H_k = -c^2 [p_k(0)/s_k^2 - s_k^-3 int sin(s_k t) p_k''(t) dt].
    ``record`` sensors are the boundary nodes matching the weights.
    """
    times = record.times
    if times[0] != 0:
        raise AcousticError("case 2 traces must start at t = 0")
    step = times[1] - times[0]
    if not np.allclose(np.diff(times), step):
        raise AcousticError("case 2 traces need a uniform time grid")
    lx, ly = basis.widths
    diam = math.hypot(lx, ly)
    p = record.physical()
    traces = (normal_derivatives * boundary_weights[None, :]) @ p  # (K, T)
    s = basis.frequencies
    second = _second_derivative_even(traces, step)
    integral = filon_sine(second, times, s)
    coeffs = -basis.c_s**2 * (traces[:, 0] / s**2 - integral / s**3)
    tail = float(np.max(basis.c_s**2 * np.abs(second[:, -1]) / s**4))
    if times[-1] < 4 * diam / basis.c_s:
        warnings.warn(
            f"record length {times[-1]:.3g} < 4 diam / c_s; estimated tail {tail:.2e}",
            TruncationWarning,
            stacklevel=2,
        )
    return Case2Result(coeffs, basis, tail)
