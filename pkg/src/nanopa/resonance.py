"""Logarithmic-potential spectra of particle shapes, resonances and the
scattering coefficient.

Operator on D = z + aB:  A(u)(x) = -(1/2pi) int_D log|x-y| u(y) dy.
After scaling x = z + a xi its eigenvalues are a^2 times those of
K_a = LP - (log a / 2pi) |1><1| on L2(B), with LP the unit-scale operator.
For an L2(B)-normalized eigenfunction,
    lambda_tilde = <LP e, e> = lambda / a^2 + (log a / 2pi) (int_B e)^2.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh

from .mesh import CellMesh, log_potential_matrix
from .specfun import EULER_GAMMA, bessel_j, find_roots

log = logging.getLogger(__name__)

GAMMA = 0.25j + (np.log(2.0) - EULER_GAMMA) / (2 * np.pi)
MEAN_TOL = 1e-8
CLUSTER_TOL = 5e-3


@dataclass(frozen=True, eq=False)
class SpectralData:
    """Eigenpairs of K_a on the reference shape B, sorted by decreasing lambda."""

    shape: str
    a: float
    eigenvalues_tilde: np.ndarray  # <LP e, e>
    scaled_eigenvalues: np.ndarray  # lambda / a^2
    means: np.ndarray  # int_B e
    eigenfunctions: np.ndarray | None = None  # (n_cells, n_modes) orthonormal-basis coefficients
    mesh: CellMesh | None = None
    labels: tuple = ()  # (k, j) for discs

    @property
    def n_modes(self) -> int:
        return self.scaled_eigenvalues.size

    @property
    def eigenvalues(self) -> np.ndarray:
        """Physical eigenvalues lambda_n on D = aB."""
        return self.a**2 * self.scaled_eigenvalues

    @property
    def physical_means(self) -> np.ndarray:
        """int_D e_n for the L2(D)-normalized eigenfunction."""
        return self.a * self.means

    @property
    def reference_area(self) -> float:
        return float(self.mesh.total_area) if self.mesh is not None else np.pi

    def nonzero_mean_modes(self, tol: float = 1e-4) -> np.ndarray:
        return np.nonzero(self.means**2 >= tol)[0]

    def label(self, n: int) -> tuple:
        return self.labels[n] if self.labels else (None, n)


@dataclass(frozen=True)
class ResonanceTable:
    a: float
    lambda_n: np.ndarray
    omega_n: np.ndarray
    tau_used: complex
    mode_flags: np.ndarray
    lambda_tilde: np.ndarray
    mean_sq: np.ndarray
    labels: tuple = ()

    def rows(self):
        for n in range(self.lambda_n.size):
            k, j = self.labels[n] if self.labels else ("", n + 1)
            yield {
                "mode": n,
                "k": k,
                "j": j,
                "lambda_tilde": float(self.lambda_tilde[n]),
                "lambda": float(self.lambda_n[n]),
                "mean_sq": float(self.mean_sq[n]),
                "omega_n": float(self.omega_n[n]),
                "hypotheses_ok": bool(self.mode_flags[n]),
            }


# ---------------------------------------------------------------------------
# Disc spectrum


def disc_radial_equation(order: int, a: float):
    """Function whose positive roots mu give disc eigenvalues a^2 / mu^2."""
    if order == 0:
        log_a = np.log(a)
        return lambda mu: bessel_j(0, mu) + mu * log_a * bessel_j(1, mu)
    # k J_k + (mu/2)(J_{k-1} - J_{k+1}) reduces to mu J_{k-1}
    return lambda mu: bessel_j(order - 1, mu)


def _disc_norm_sq(order: int, mu: float) -> float:
    if order == 0:
        return float(np.pi * (bessel_j(0, mu) ** 2 + bessel_j(1, mu) ** 2))
    jk = bessel_j(order, mu)
    djk = 0.5 * (bessel_j(order - 1, mu) - bessel_j(order + 1, mu))
    return float(0.5 * np.pi * (djk**2 + (1 - order**2 / mu**2) * jk**2))


def disc_roots(order: int, a: float, n_roots: int) -> np.ndarray:
    """First n_roots positive roots of the radial equation of the given order."""
    f = disc_radial_equation(order, a)
    span = np.pi * (n_roots + order / 2 + 2)
    lo = 1e-9 if order == 0 else 1e-6
    roots = find_roots(f, (lo, span), resolution=2e-4)
    if order == 0 and 0 < a < 1 and (not roots or roots[0] >= 2.404825557695773):
        raise RuntimeError(f"no radial root below the first zero of J0 for a={a}")
    if len(roots) < n_roots:
        raise RuntimeError(f"found {len(roots)} of {n_roots} roots for order {order}")
    return np.array(roots[:n_roots])


def _disc_mode_on_mesh(order: int, mu: float, trig, mesh: CellMesh) -> np.ndarray:
    def f(x, y):
        r = np.hypot(x, y)
        return np.real(bessel_j(order, mu * np.minimum(r, 1.0))) * trig(order * np.arctan2(y, x))

    v = mesh.cell_averages(f) * mesh.sqrt_areas
    return v / np.linalg.norm(v)


def disc_spectrum(a: float, n_modes_per_order: int = 3, k_max: int = 2, mesh: CellMesh | None = None) -> SpectralData:
    """Analytic disc spectrum.  With a mesh, eigenfunctions are projected on it."""
    if not 0 < a <= 1:
        raise ValueError("disc radius must satisfy 0 < a <= 1")
    if k_max < 0:
        raise ValueError("k_max must be nonnegative")
    log_a = np.log(a)
    rows = []
    for k in range(k_max + 1):
        for j, mu in enumerate(disc_roots(k, a, n_modes_per_order), start=1):
            scaled = 1.0 / mu**2
            trigs = [np.cos] if k == 0 else [np.cos, np.sin]
            for trig in trigs:
                mean = 0.0
                if k == 0:
                    mean = 2 * np.pi * float(bessel_j(1, mu)) / mu / np.sqrt(_disc_norm_sq(0, mu))
                rows.append((scaled, mean, (k, j), mu, trig))
    rows.sort(key=lambda r: -r[0])
    scaled = np.array([r[0] for r in rows])
    means = np.array([r[1] for r in rows])
    tilde = scaled + log_a / (2 * np.pi) * means**2
    funcs = None
    if mesh is not None:
        funcs = np.stack([_disc_mode_on_mesh(r[2][0], r[3], r[4], mesh) for r in rows], axis=1)
    return SpectralData(
        shape="disc",
        a=a,
        eigenvalues_tilde=tilde,
        scaled_eigenvalues=scaled,
        means=means,
        eigenfunctions=funcs,
        mesh=mesh,
        labels=tuple(r[2] for r in rows),
    )


# ---------------------------------------------------------------------------
# Galerkin spectrum


def _concentrate_means(values, vectors, s, tol):
    """Rotate near-degenerate clusters so one vector carries the cluster mean."""
    n = values.size
    start = 0
    vectors = vectors.copy()
    while start < n:
        stop = start + 1
        while stop < n and abs(values[stop] - values[start]) <= tol * abs(values[start]):
            stop += 1
        if stop - start > 1:
            block = vectors[:, start:stop]
            m = block.T @ s
            if np.linalg.norm(m) > MEAN_TOL:
                # Householder reflection taking m to a multiple of e_1
                w = m.copy()
                w[0] += np.copysign(np.linalg.norm(m), m[0])
                w /= np.linalg.norm(w)
                vectors[:, start:stop] = block @ (np.eye(m.size) - 2 * np.outer(w, w))
        start = stop
    return vectors


def galerkin_spectrum(mesh: CellMesh, a: float = 1.0, n_modes: int | None = None) -> SpectralData:
    """Piecewise-constant Galerkin eigenpairs of K_a on the meshed shape."""
    if not 0 < a <= 1:
        raise ValueError("particle radius must satisfy 0 < a <= 1")
    lp = log_potential_matrix(mesh)
    scale = np.max(np.abs(lp))
    if np.max(np.abs(lp - lp.T)) > 1e-10 * scale:
        raise RuntimeError("assembled log-potential matrix is not symmetric")
    s = mesh.sqrt_areas
    kernel = lp - np.log(a) / (2 * np.pi) * np.outer(s, s)
    values, vectors = eigh(kernel)
    order = np.argsort(values)[::-1]
    values, vectors = values[order], vectors[:, order]
    if n_modes is not None:
        values, vectors = values[:n_modes], vectors[:, :n_modes]
    vectors = _concentrate_means(values, vectors, s, CLUSTER_TOL)
    means = vectors.T @ s
    for n in range(means.size):
        if means[n] < -MEAN_TOL:
            vectors[:, n] *= -1
            means[n] *= -1
    scaled = np.einsum("in,ij,jn->n", vectors, kernel, vectors)
    tilde = np.einsum("in,ij,jn->n", vectors, lp, vectors)
    return SpectralData(
        shape=mesh.label,
        a=a,
        eigenvalues_tilde=tilde,
        scaled_eigenvalues=scaled,
        means=means,
        eigenfunctions=vectors,
        mesh=mesh,
    )


# ---------------------------------------------------------------------------
# Resonances


def hypotheses_flags(spec: SpectralData) -> np.ndarray:
    log_abs = abs(np.log(spec.a))
    if log_abs == 0:
        return np.zeros(spec.n_modes, dtype=bool)
    ratio = spec.scaled_eigenvalues / log_abs
    return (spec.means**2 >= 1e-4) & (ratio >= 1e-3) & (ratio <= 1e3)


def resonance_table(spec: SpectralData, tau: complex, mu0: float = 1.0) -> ResonanceTable:
    lam = spec.eigenvalues
    with np.errstate(divide="ignore", invalid="ignore"):
        omega = np.where(lam > 0, 1.0 / np.sqrt(mu0 * np.real(tau) * lam), np.nan)
    return ResonanceTable(
        a=spec.a,
        lambda_n=lam,
        omega_n=omega,
        tau_used=complex(tau),
        mode_flags=hypotheses_flags(spec),
        lambda_tilde=spec.eigenvalues_tilde,
        mean_sq=spec.means**2,
        labels=spec.labels,
    )


@dataclass(frozen=True)
class ResonanceFrequencies:
    omega_n0: float
    omega_plus: float
    omega_minus: float
    residual_plus: complex  # 1 - omega_+^2 mu0 tau lambda_n0
    residual_minus: complex

    def detuned(self, sign: int) -> float:
        return self.omega_plus if sign > 0 else self.omega_minus


def resonance_frequency(spec: SpectralData, tau: complex, n0: int = 0, h: float = 0.5, mu0: float = 1.0, check_hypotheses: bool = True) -> ResonanceFrequencies:
    """Resonance omega_n0 from Re(tau) and the detuned pair omega_+-."""
    lam = float(spec.eigenvalues[n0])
    if lam <= 0:
        raise ValueError(f"eigenvalue of mode {n0} is not positive: {lam}")
    if np.real(tau) <= 0:
        raise ValueError("resonances need Re(tau) > 0")
    if check_hypotheses and not hypotheses_flags(spec)[n0]:
        raise ValueError(f"mode {n0} does not satisfy the resonance hypotheses")
    omega2 = 1.0 / (mu0 * np.real(tau) * lam)
    detune = abs(np.log(spec.a)) ** (-h)
    w_plus2, w_minus2 = omega2 * (1 + detune), omega2 * (1 - detune)
    return ResonanceFrequencies(
        omega_n0=float(np.sqrt(omega2)),
        omega_plus=float(np.sqrt(w_plus2)),
        omega_minus=float(np.sqrt(w_minus2)),
        residual_plus=complex(1 - w_plus2 * mu0 * tau * lam),
        residual_minus=complex(1 - w_minus2 * mu0 * tau * lam),
    )


def kernel_constant(k) -> complex:
    """-(1/2pi) log k + Gamma: the finite part of the kernel at coincidence."""
    return complex(-np.log(complex(k)) / (2 * np.pi) + GAMMA)


@dataclass(frozen=True)
class ScatteringCoefficient:
    value: complex  # C
    star: complex | None  # C* (needs the wavenumber)
    leading: complex  # single-mode term
    remainder: float  # |C - leading| from the series path
    tail_mass: float  # a^2 |B| - sum of retained (int_D e_n)^2
    path: str


def scattering_coefficient(
    spec: SpectralData,
    tau: complex,
    omega: float,
    mu0: float = 1.0,
    n0: int = 0,
    wavenumber: complex | None = None,
    path: str = "series",
) -> ScatteringCoefficient:
    """C = int_D w with w = [(omega^2 mu0 tau)^-1 - A]^-1 (1)."""
    strength = omega**2 * mu0 * tau
    denom = 1 - strength * spec.eigenvalues
    weights = spec.physical_means**2
    retained = np.abs(spec.means) >= MEAN_TOL
    small = retained & (np.abs(denom) < 1e-14)
    if np.any(small):
        raise ZeroDivisionError(f"omega sits on the resonance of mode {int(np.nonzero(small)[0][0])}")
    leading = strength * weights[n0] / denom[n0]
    series = strength * np.sum(weights[retained] / denom[retained])
    tail = spec.a**2 * spec.reference_area - float(np.sum(weights[retained]))
    if path == "series":
        value = series
    elif path == "leading":
        value = leading
    else:
        raise ValueError(f"unknown path {path!r}")
    star = None
    if wavenumber is not None:
        star = value / (1 - kernel_constant(wavenumber) * value)
    return ScatteringCoefficient(
        value=complex(value),
        star=None if star is None else complex(star),
        leading=complex(leading),
        remainder=float(abs(series - leading)),
        tail_mass=float(tail),
        path=path,
    )


def matrix_scattering_coefficient(spec: SpectralData, tau: complex, omega: float, mu0: float = 1.0) -> complex:
    """C from the discrete operator directly: strength s^T (I - strength A)^-1 s."""
    if spec.mesh is None:
        raise ValueError("needs a meshed spectrum")
    a = spec.a
    s = spec.mesh.sqrt_areas
    kernel = log_potential_matrix(spec.mesh) - np.log(a) / (2 * np.pi) * np.outer(s, s)
    strength = omega**2 * mu0 * tau
    system = np.eye(s.size) - strength * a**2 * kernel
    return complex(strength * a**2 * (s @ np.linalg.solve(system, s.astype(complex))))
