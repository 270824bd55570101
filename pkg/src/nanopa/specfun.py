"""Bessel functions, root isolation and log-singular cell quadrature.

Bessel functions are evaluated from their power series for |z| <= 12 and
from the Hankel asymptotic expansion beyond, so the package does not depend
on an external special-function library for its numerical core.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

EULER_GAMMA = 0.57721566490153286061
SERIES_RADIUS = 12.0
MAX_ORDER = 64

_SERIES_TERMS = 80
_ASYMPTOTIC_TERMS = 24


@dataclass(frozen=True)
class ComplexValue:
    re: float
    im: float

    def __post_init__(self):
        if not (math.isfinite(self.re) and math.isfinite(self.im)):
            raise ValueError("complex value must have finite components")

    @classmethod
    def of(cls, z: complex) -> "ComplexValue":
        z = complex(z)
        return cls(z.real, z.imag)

    @property
    def value(self) -> complex:
        return complex(self.re, self.im)

    @property
    def modulus(self) -> float:
        return abs(self.value)

    @property
    def argument(self) -> float:
        return math.atan2(self.im, self.re)


@dataclass(frozen=True)
class Bracket:
    lo: float
    hi: float
    f_lo: float
    f_hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError("bracket requires lo < hi")
        if self.f_lo * self.f_hi > 0:
            raise ValueError("bracket requires a sign change")


# ---------------------------------------------------------------------------
# Bessel functions


def _as_argument(x) -> np.ndarray:
    z = np.asarray(x)
    if not np.all(np.isfinite(z)):
        raise ValueError("Bessel argument must be finite")
    if np.iscomplexobj(z) and np.any(z.imag < 0):
        raise ValueError("complex arguments must satisfy Im(z) >= 0")
    return z


def _check_order(order: int) -> int:
    if int(order) != order:
        raise ValueError("Bessel order must be an integer")
    order = int(order)
    if order < -1:
        raise ValueError("Bessel order must be >= -1")
    if order > MAX_ORDER:
        raise ValueError(f"Bessel order above {MAX_ORDER} is not supported")
    return order


def _extended(z: np.ndarray) -> np.ndarray:
    # Terms of the series grow like e^{|z|}; past |z| ~ 4 the cancellation
    # costs digits that extended precision buys back.
    if z.size and np.max(np.abs(z)) > 4.0:
        return z.astype(np.clongdouble if np.iscomplexobj(z) else np.longdouble)
    return z


def _tolerance(z: np.ndarray) -> float:
    return 1e-20 if z.dtype in (np.longdouble, np.clongdouble) else 1e-17


def _j_series(n: int, z: np.ndarray) -> np.ndarray:
    dtype = z.dtype
    z = _extended(z)
    tol = _tolerance(z)
    half = z / 2.0
    q = -(half * half)
    term = half**n / math.factorial(n)
    total = term.copy()
    for m in range(1, _SERIES_TERMS):
        term = term * q / (m * (m + n))
        total = total + term
        if np.all(np.abs(term) <= tol * np.maximum(np.abs(total), 1e-300)):
            break
    return total.astype(dtype)


def _y01_series(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    dtype = z.dtype
    z = _extended(z)
    tol = _tolerance(z)
    half = z / 2.0
    q = -(half * half)
    gamma = np.longdouble("0.57721566490153286060651209")
    log_term = np.log(half) + gamma
    j0 = _j_series(0, z).astype(z.dtype)
    j1 = _j_series(1, z).astype(z.dtype)

    # Y0 = (2/pi)[(log(z/2)+gamma) J0 + sum_{m>=1} (-1)^{m+1} H_m (z/2)^{2m}/(m!)^2]
    term = np.ones_like(z)
    harmonic = 0.0
    tail0 = np.zeros_like(z)
    for m in range(1, _SERIES_TERMS):
        term = term * q / (m * m)
        harmonic += 1.0 / m
        tail0 = tail0 - harmonic * term
        if np.all(np.abs(term) * harmonic <= tol * np.maximum(np.abs(tail0), 1e-300)):
            break

    # Y1 = (2/pi) J1 log(z/2) - 2/(pi z)
    #      - (1/pi) sum_k (-1)^k [psi(k+1)+psi(k+2)] (z/2)^{2k+1}/(k!(k+1)!)
    term = half.copy()
    psi_k1 = -gamma
    psi_k2 = 1 - gamma
    tail1 = (psi_k1 + psi_k2) * term
    for k in range(1, _SERIES_TERMS):
        term = term * q / (k * (k + 1))
        psi_k1 += 1.0 / k
        psi_k2 += 1.0 / (k + 1)
        piece = (psi_k1 + psi_k2) * term
        tail1 = tail1 + piece
        if np.all(np.abs(piece) <= tol * np.maximum(np.abs(tail1), 1e-300)):
            break
    pi = np.longdouble(np.pi) if z.dtype in (np.longdouble, np.clongdouble) else np.pi
    y0 = (2.0 / pi) * (log_term * j0 + tail0)
    y1 = (2.0 / pi) * j1 * np.log(half) - 2.0 / (pi * z) - tail1 / pi
    return y0.astype(dtype), y1.astype(dtype)


def _hankel_asymptotic(nu: int, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Leading Hankel expansions of H^(1)_nu and H^(2)_nu for large |z|."""
    mu = 4.0 * nu * nu
    coeff = 1.0
    s1 = np.ones_like(z, dtype=complex)
    s2 = np.ones_like(z, dtype=complex)
    zpow = np.ones_like(z, dtype=complex)
    last = np.full(np.shape(z), np.inf)
    active = np.ones(np.shape(z), dtype=bool)
    for k in range(1, _ASYMPTOTIC_TERMS):
        coeff *= (mu - (2 * k - 1) ** 2) / (k * 8.0)
        zpow = zpow * z
        piece = coeff / zpow
        size = np.abs(piece)
        active &= size < last
        last = np.where(active, size, last)
        s1 = s1 + np.where(active, (1j**k) * piece, 0.0)
        s2 = s2 + np.where(active, ((-1j) ** k) * piece, 0.0)
    phase = z - (nu / 2.0 + 0.25) * np.pi
    amp = np.sqrt(2.0 / (np.pi * z))
    return amp * np.exp(1j * phase) * s1, amp * np.exp(-1j * phase) * s2


def _j01_y01(z: np.ndarray) -> tuple[np.ndarray, ...]:
    """J0, J1, Y0, Y1 on an arbitrary nonzero argument array."""
    complex_input = np.iscomplexobj(z)
    zc = z.astype(complex)
    small = np.abs(zc) <= SERIES_RADIUS
    out = [np.zeros_like(zc) for _ in range(4)]
    if np.any(small):
        zs = zc[small]
        y0, y1 = _y01_series(zs)
        out[0][small] = _j_series(0, zs)
        out[1][small] = _j_series(1, zs)
        out[2][small] = y0
        out[3][small] = y1
    if np.any(~small):
        zl = zc[~small]
        for nu in (0, 1):
            h1, h2 = _hankel_asymptotic(nu, zl)
            out[nu][~small] = 0.5 * (h1 + h2)
            out[2 + nu][~small] = (h1 - h2) / 2j
    if not complex_input:
        out = [o.real for o in out]
    return tuple(out)


def bessel_j(order: int, x) -> np.ndarray:
    """Bessel function J_order(x) for integer order in [-1, 64]."""
    n = _check_order(order)
    z = _as_argument(x)
    if n == -1:
        return -bessel_j(1, z)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    sign = 1.0
    if np.iscomplexobj(z):
        zc = z
    else:
        # J_n(-x) = (-1)^n J_n(x) keeps the asymptotic branch on Re z > 0
        zc = np.abs(z.astype(float))
        sign = np.where(z < 0, (-1.0) ** n, 1.0)
    result = np.empty_like(zc, dtype=zc.dtype)
    small = np.abs(zc) <= SERIES_RADIUS
    if np.any(small):
        result[small] = _j_series(n, zc[small])
    if np.any(~small):
        zl = zc[~small]
        j0, j1, _, _ = _j01_y01(zl)
        if n == 0:
            vals = j0
        elif n == 1:
            vals = j1
        else:
            vals = _j_by_recurrence(n, zl, j0, j1)
        result[~small] = vals
    result = result * sign
    return result[0] if scalar else result


def _j_by_recurrence(n: int, z, j0, j1):
    # Upward recurrence is stable while the order stays below |z|; beyond that
    # the series is used instead.
    prev, cur = j0, j1
    for m in range(1, n):
        prev, cur = cur, (2.0 * m / z) * cur - prev
    fallback = np.abs(z) < n
    if np.any(fallback):
        cur = np.where(fallback, _j_series(n, z), cur)
    return cur


def bessel_y(order: int, x) -> np.ndarray:
    """Bessel function of the second kind Y_order(x), x != 0."""
    n = _check_order(order)
    z = _as_argument(x)
    if n == -1:
        return -bessel_y(1, z)
    if np.any(z == 0):
        raise ValueError("Y_n is singular at zero")
    if not np.iscomplexobj(z) and np.any(z < 0):
        raise ValueError("Y_n of a negative real argument is not real; pass a complex argument")
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    if not np.iscomplexobj(z):
        z = z.astype(float)
    _, _, y0, y1 = _j01_y01(z)
    if n == 0:
        res = y0
    else:
        prev, cur = y0, y1
        for m in range(1, n):
            prev, cur = cur, (2.0 * m / z) * cur - prev
        res = cur
    return res[0] if scalar else res


def hankel1(order: int, z) -> np.ndarray:
    """Outgoing Hankel function H^(1)_order(z) = J + iY, Im(z) >= 0, z != 0."""
    z = _as_argument(z)
    if np.any(z == 0):
        raise ValueError("H^(1) is singular at z = 0")
    n = _check_order(order)
    if n in (0, 1) and (np.iscomplexobj(z) or np.all(z > 0)):
        scalar = z.ndim == 0
        j0, j1, y0, y1 = _j01_y01(np.atleast_1d(z))
        h = j0 + 1j * y0 if n == 0 else j1 + 1j * y1
        return h[0] if scalar else h
    return bessel_j(order, z) + 1j * bessel_y(order, z)


def hankel1_0(z) -> np.ndarray:
    return hankel1(0, z)


# ---------------------------------------------------------------------------
# Root isolation


@dataclass(frozen=True)
class Root:
    value: float
    residual: float
    tangent: bool = False


def find_roots(
    f: Callable[[float], float],
    interval: Sequence[float],
    n_max: int | None = None,
    resolution: float = 1e-3,
    flag_tangent: bool = False,
) -> list[float] | list[Root]:
    """All sign-change roots of f in [lo, hi], increasing.

    The interval is scanned on a uniform grid of spacing resolution*(hi-lo);
    every sign change is polished with Brent's method.  Candidates whose
    residual is large compared with the scan scale are sign changes across
    poles and are dropped.  With ``flag_tangent`` the result carries a
    per-root flag for vanishing derivative.
    """
    lo, hi = float(interval[0]), float(interval[1])
    if not (math.isfinite(lo) and math.isfinite(hi)) or not lo < hi:
        raise ValueError("interval must be finite with lo < hi")
    n_grid = max(int(math.ceil(1.0 / resolution)), 2) + 1
    grid = np.linspace(lo, hi, n_grid)
    try:
        values = np.asarray(f(grid), dtype=float)
        if values.shape != grid.shape:
            raise ValueError
    except Exception:
        values = np.array([float(f(t)) for t in grid])
    scale = float(np.max(np.abs(values[np.isfinite(values)]), initial=0.0)) or 1.0
    roots: list[Root] = []
    for i in range(n_grid - 1):
        a, b = grid[i], grid[i + 1]
        fa, fb = values[i], values[i + 1]
        if fa == 0.0:
            r = a
        elif fa * fb < 0:
            r = brentq(lambda t: float(f(t)), a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
        else:
            continue
        fr = abs(float(f(r)))
        if fr > 1e-12 * scale:
            continue
        if roots and abs(r - roots[-1].value) <= 1e-14 * max(1.0, abs(r)):
            continue
        delta = 1e-6 * (hi - lo)
        left, right = float(f(r - delta)), float(f(r + delta))
        roots.append(Root(r, fr, tangent=not left * right < 0))
        if n_max is not None and len(roots) >= n_max:
            break
    if flag_tangent:
        return roots
    return [r.value for r in roots]


# ---------------------------------------------------------------------------
# Cells and log-singular quadrature

_GL_T_NODES, _GL_T_WEIGHTS = np.polynomial.legendre.leggauss(40)
_GL_S_NODES, _GL_S_WEIGHTS = np.polynomial.legendre.leggauss(20)


@dataclass(frozen=True)
class PolygonCell:
    """Simple polygon given by counterclockwise vertices."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        object.__setattr__(self, "vertices", v)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise ValueError("polygon needs at least three 2D vertices")
        if abs(self.area) <= 1e-300:
            raise ValueError("degenerate (zero-area) cell")

    @property
    def area(self) -> float:
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    def pieces(self):
        v = self.vertices
        for a, b in zip(v, np.roll(v, -1, axis=0)):
            yield _Segment(a, b)


@dataclass(frozen=True)
class SectorCell:
    """Annular sector r0 <= |y - center| <= r1, theta0 <= arg <= theta1."""

    center: tuple[float, float]
    r0: float
    r1: float
    theta0: float
    theta1: float

    def __post_init__(self):
        if not (0 <= self.r0 < self.r1) or not self.theta0 < self.theta1 <= self.theta0 + 2 * np.pi + 1e-14:
            raise ValueError("degenerate (zero-area) cell")

    @property
    def area(self) -> float:
        return 0.5 * (self.r1**2 - self.r0**2) * (self.theta1 - self.theta0)

    def pieces(self):
        c = np.asarray(self.center, dtype=float)
        full = abs(self.theta1 - self.theta0 - 2 * np.pi) < 1e-14
        yield _Arc(c, self.r1, self.theta0, self.theta1)
        if not full:
            yield _Segment(c + self.r1 * _unit(self.theta1), c + self.r0 * _unit(self.theta1))
        if self.r0 > 0:
            yield _Arc(c, self.r0, self.theta1, self.theta0)
        if not full:
            yield _Segment(c + self.r0 * _unit(self.theta0), c + self.r1 * _unit(self.theta0))


def disc_cell(center=(0.0, 0.0), radius: float = 1.0) -> SectorCell:
    return SectorCell(tuple(center), 0.0, radius, 0.0, 2 * np.pi)


def _unit(theta):
    return np.array([np.cos(theta), np.sin(theta)])


class _Segment:
    def __init__(self, a, b):
        self.a = np.asarray(a, float)
        self.b = np.asarray(b, float)

    def point(self, t):
        return self.a[None, :] + t[:, None] * (self.b - self.a)[None, :]

    def tangent(self, t):
        return np.broadcast_to(self.b - self.a, (len(t), 2))

    def closest_parameter(self, x):
        d = self.b - self.a
        L2 = float(d @ d)
        if L2 == 0.0:
            return None
        return float(np.clip((x - self.a) @ d / L2, 0.0, 1.0))


class _Arc:
    def __init__(self, center, radius, theta0, theta1):
        self.c = np.asarray(center, float)
        self.r = float(radius)
        self.t0 = float(theta0)
        self.t1 = float(theta1)

    def _theta(self, t):
        return self.t0 + t * (self.t1 - self.t0)

    def point(self, t):
        th = self._theta(t)
        return self.c[None, :] + self.r * np.stack([np.cos(th), np.sin(th)], axis=1)

    def tangent(self, t):
        th = self._theta(t)
        w = self.r * (self.t1 - self.t0)
        return w * np.stack([-np.sin(th), np.cos(th)], axis=1)

    def closest_parameter(self, x):
        d = x - self.c
        if float(d @ d) == 0.0:
            return None
        phi = math.atan2(d[1], d[0])
        lo, hi = min(self.t0, self.t1), max(self.t0, self.t1)
        for shift in (0.0, 2 * np.pi, -2 * np.pi):
            p = phi + shift
            if lo <= p <= hi:
                return (p - self.t0) / (self.t1 - self.t0)
        return None


def _piece_breaks(piece, x) -> list[float]:
    """Sub-interval breakpoints geometrically graded toward the point of the
    piece closest to x, so the Gauss rule sees a smooth integrand."""
    t0 = piece.closest_parameter(x)
    breaks = {0.0, 1.0}
    if t0 is not None:
        breaks.add(t0)
        for k in range(1, 14):
            step = 2.0**-k
            for b in (t0 - step, t0 + step):
                if 0.0 < b < 1.0:
                    breaks.add(b)
    return sorted(breaks)


def quad_log_singular(
    g: Callable[[np.ndarray, np.ndarray], np.ndarray] | None,
    cell,
    x: Sequence[float],
) -> float:
    """Integral of log|x - y| g(y) over the cell.

    The cell is decomposed into the cone of segments joining x to its
    boundary.  Along each ray the integral of s log(s l) is taken analytically
    for the constant part g(x); the remainder g(y) - g(x), which vanishes at
    x, is integrated by Gauss-Legendre after the substitution s = sigma^2.
    The decomposition is signed, so x may lie anywhere in or on the cell.
    ``g=None`` stands for g = 1.
    """
    if abs(cell.area) <= 1e-300:
        raise ValueError("degenerate (zero-area) cell")
    x = np.asarray(x, dtype=float)
    g0 = 1.0 if g is None else float(np.asarray(g(x[:1], x[1:]))[0])
    sig = 0.5 * (_GL_S_NODES + 1.0)
    sig_w = 0.5 * _GL_S_WEIGHTS
    total = 0.0
    for piece in cell.pieces():
        breaks = _piece_breaks(piece, x)
        for lo, hi in zip(breaks[:-1], breaks[1:]):
            t = lo + (hi - lo) * 0.5 * (_GL_T_NODES + 1.0)
            wt = (hi - lo) * 0.5 * _GL_T_WEIGHTS
            c = piece.point(t)
            v = c - x[None, :]
            cross = v[:, 0] * piece.tangent(t)[:, 1] - v[:, 1] * piece.tangent(t)[:, 0]
            ell = np.hypot(v[:, 0], v[:, 1])
            with np.errstate(divide="ignore", invalid="ignore"):
                const = np.where(ell > 0, 0.5 * np.log(ell) - 0.25, 0.0)
            ray = g0 * const
            if g is not None:
                s = sig**2
                pts = x[None, None, :] + s[None, :, None] * v[:, None, :]
                gv = np.asarray(g(pts[..., 0], pts[..., 1]), dtype=float) - g0
                with np.errstate(divide="ignore", invalid="ignore"):
                    logs = np.where(ell[:, None] > 0, np.log(ell)[:, None] + 2 * np.log(sig)[None, :], 0.0)
                # s ds = 2 sigma^3 d sigma
                ray = ray + np.sum(logs * gv * 2 * sig[None, :] ** 3 * sig_w[None, :], axis=1)
            total += float(np.sum(wt * cross * ray))
    return total


# ---------------------------------------------------------------------------
# Closed-form log potential of polygons (vectorized)


def polygon_log_integral(points: np.ndarray, vertices: np.ndarray) -> np.ndarray:
    """U(x) = integral over polygon of log|x - y| dy, closed form.

    ``points`` has shape (..., 2) and ``vertices`` shape (..., V, 2); leading
    dimensions broadcast.  Polygons are counterclockwise; repeated vertices
    (zero-length edges) are allowed and contribute nothing.
    """
    a = vertices
    b = np.roll(vertices, -1, axis=-2)
    edge = b - a
    length = np.sqrt(np.sum(edge * edge, axis=-1))
    safe = np.where(length > 0, length, 1.0)
    tx, ty = edge[..., 0] / safe, edge[..., 1] / safe
    ax = a[..., 0] - points[..., None, 0]
    ay = a[..., 1] - points[..., None, 1]
    bx = b[..., 0] - points[..., None, 0]
    by = b[..., 1] - points[..., None, 1]
    # outward normal of a counterclockwise polygon is (ty, -tx)
    d = ax * ty - ay * tx
    s1 = ax * tx + ay * ty
    s2 = bx * tx + by * ty
    r1 = s1 * s1 + d * d
    r2 = s2 * s2 + d * d
    with np.errstate(divide="ignore", invalid="ignore"):
        g1 = np.where(r1 > 0, 0.5 * s1 * np.log(r1), 0.0) - s1
        g2 = np.where(r2 > 0, 0.5 * s2 * np.log(r2), 0.0) - s2
    angle = np.arctan2(d * (s2 - s1), s1 * s2 + d * d)
    line = g2 - g1 + d * angle
    contrib = np.where(length > 0, 0.25 * d * (2.0 * line - (s2 - s1)), 0.0)
    return np.sum(contrib, axis=-1)


def y0_series_parts(z) -> tuple[np.ndarray, np.ndarray]:
    """(J0(z), T(z)) with Y0(z) = (2/pi)[(log(z/2) + gamma) J0(z) + T(z)].

    T is the entire part of the Y0 series.  Splitting it off lets callers
    cancel the logarithm of |z| exactly.  Valid for |z| <= SERIES_RADIUS.
    """
    z = np.atleast_1d(np.asarray(z))
    if np.any(np.abs(z) > SERIES_RADIUS):
        raise ValueError("series split only valid for |z| <= 12")
    dtype = z.dtype if np.iscomplexobj(z) else float
    z = z.astype(dtype)
    j0 = _j_series(0, z)
    q = -(z / 2.0) ** 2
    term = np.ones_like(z)
    harmonic = 0.0
    tail = np.zeros_like(z)
    for m in range(1, _SERIES_TERMS):
        term = term * q / (m * m)
        harmonic += 1.0 / m
        tail = tail - harmonic * term
        if np.all(np.abs(term) * harmonic <= 1e-17 * np.maximum(np.abs(tail), 1e-300)):
            break
    return j0, tail
