"""Electromagnetic forward solvers.

Lippmann-Schwinger equation on the particles D_m = z_m + aB,

    u(x) - omega^2 mu0 tau int_D G_k(x, y) u(y) dy = u0(x),
    G_k(x, y) = (i/4) H0(k|x - y|),

discretized by piecewise-constant Galerkin in the L2-orthonormal cell basis,
plus the Foldy-Lax point-scatterer system and the two-mode dimer system.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import lapack, lu_factor, lu_solve

from .mesh import CellMesh, log_potential_matrix
from .model import Scenario, contrast_tau
from .resonance import SpectralData, kernel_constant
from .specfun import EULER_GAMMA, hankel1_0, y0_series_parts

log = logging.getLogger(__name__)

CONDITION_LIMIT = 1e12
_SPLIT_RADIUS = 2.0


class InvertibilityError(RuntimeError):
    """Foldy-Lax coupling too strong for a guaranteed inverse."""


class NearResonanceWarning(RuntimeWarning):
    pass


# ---------------------------------------------------------------------------
# Kernels


def green_kernel(k: complex, r) -> np.ndarray:
    """(i/4) H0(k r) for r > 0."""
    r = np.asarray(r, dtype=float)
    return 0.25j * hankel1_0(complex(k) * r)


def regular_kernel(k: complex, r) -> np.ndarray:
    """G_k(r) + (1/2pi) log r, smooth in r >= 0, equal to -(1/2pi) log k + Gamma at 0."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    k = complex(k)
    out = np.empty(r.shape, dtype=complex)
    z = k * r
    near = np.abs(z) <= _SPLIT_RADIUS
    if np.any(near):
        j0, tail = y0_series_parts(z[near])
        rn = r[near]
        with np.errstate(divide="ignore", invalid="ignore"):
            log_term = np.where(rn > 0, np.log(rn) * (1 - j0), 0.0)
        out[near] = 0.25j * j0 - (np.log(k / 2) + EULER_GAMMA) * j0 / (2 * np.pi) - tail / (2 * np.pi) + log_term / (2 * np.pi)
    if np.any(~near):
        rf = r[~near]
        out[~near] = 0.25j * hankel1_0(k * rf) + np.log(rf) / (2 * np.pi)
    return out


def plane_wave(k: complex, direction, points) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    d = np.asarray(direction, dtype=float)
    return np.exp(1j * complex(k) * (points @ d))


def background_field(scenario: Scenario, points, omega: float | None = None) -> np.ndarray:
    """u0 = exp(i omega n0 d.x) with n0 = sqrt(eps mu0) of the homogeneous tissue."""
    omega = scenario.omega if omega is None else omega
    return plane_wave(scenario.medium.wavenumber(omega), scenario.wave.direction, points)


# ---------------------------------------------------------------------------
# Lippmann-Schwinger solver


@dataclass(frozen=True, eq=False)
class LSEProblem:
    """Identical particles of radius ``radius`` at ``centers`` sharing one reference mesh."""

    wavenumber: complex
    strength: complex  # omega^2 mu0 tau
    reference: CellMesh
    centers: np.ndarray
    radius: float
    incident: Callable[[np.ndarray], np.ndarray]

    @property
    def n_particles(self) -> int:
        return len(self.centers)

    def physical_meshes(self) -> list[CellMesh]:
        return [self.reference.placed(c, self.radius) for c in self.centers]


@dataclass(frozen=True, eq=False)
class FieldSolution:
    """Galerkin coefficients of the total field on each particle."""

    problem: LSEProblem
    coefficients: np.ndarray  # (M, N) orthonormal-basis coefficients
    incident_coefficients: np.ndarray  # (M, N)
    residual: float
    condition: float
    solver: str = "full-lse"

    @property
    def _basis_means(self) -> np.ndarray:
        # int_cell of a physical basis function = a sqrt(A_i)
        return self.problem.radius * self.problem.reference.sqrt_areas

    def integral(self, m: int = 0) -> complex:
        """int_{D_m} v."""
        return complex(self.coefficients[m] @ self._basis_means)

    def energy(self, m: int = 0) -> float:
        """int_{D_m} |v|^2."""
        return float(np.sum(np.abs(self.coefficients[m]) ** 2))

    def incident_energy(self, m: int = 0) -> float:
        return float(np.sum(np.abs(self.incident_coefficients[m]) ** 2))

    def cell_averages(self, m: int = 0) -> np.ndarray:
        return self.coefficients[m] / self._basis_means

    def fourier_coefficient(self, spec: SpectralData, n: int, m: int = 0, incident: bool = False) -> complex:
        """<v_m, e_n> in L2(D_m)."""
        check_same_mesh(spec, self.problem.reference)
        coeffs = self.incident_coefficients[m] if incident else self.coefficients[m]
        return complex(coeffs @ spec.eigenfunctions[:, n])

    def evaluate(self, points) -> np.ndarray:
        """Representation formula u0(x) + strength sum_m int_{D_m} G_k(x, y) v(y) dy."""
        prob = self.problem
        points = np.atleast_2d(np.asarray(points, dtype=float))
        total = prob.incident(points).astype(complex)
        for m, mesh in enumerate(prob.physical_meshes()):
            avg = self.cell_averages(m)
            qp = mesh.quad_points.reshape(-1, 2)
            qw = (mesh.quad_weights * avg[:, None]).reshape(-1)
            for start in range(0, points.shape[0], 256):
                block = points[start : start + 256]
                r = np.linalg.norm(block[:, None, :] - qp[None, :, :], axis=2)
                if np.any(r == 0):
                    raise ValueError("evaluation point coincides with a quadrature point; use cell averages inside D")
                total[start : start + 256] += prob.strength * (green_kernel(prob.wavenumber, r) @ qw)
        return total


def check_same_mesh(spec: SpectralData, mesh: CellMesh) -> None:
    if spec.mesh is None or spec.eigenfunctions is None:
        raise ValueError("spectral data carries no mesh eigenfunctions")
    same = spec.mesh is mesh or (
        spec.mesh.n_cells == mesh.n_cells and np.allclose(spec.mesh.vertices, mesh.vertices, rtol=0, atol=1e-12)
    )
    if not same:
        raise ValueError("spectral data and field live on different meshes")


def lse_matrix(problem: LSEProblem) -> np.ndarray:
    """Galerkin matrix of the integral operator int_D G_k(x, y) . dy."""
    ref = problem.reference
    a, k = problem.radius, problem.wavenumber
    n = ref.n_cells
    s = ref.sqrt_areas
    weight = a**2 * np.outer(s, s)
    lp = log_potential_matrix(ref)
    c_ref = ref.centroids
    gap = np.linalg.norm(c_ref[:, None, :] - c_ref[None, :, :], axis=2)
    self_block = a**2 * (lp - np.log(a) / (2 * np.pi) * np.outer(s, s))
    self_block = self_block + weight * regular_kernel(k, a * gap.ravel()).reshape(n, n)
    m_count = problem.n_particles
    matrix = np.empty((m_count * n, m_count * n), dtype=complex)
    cells = [np.asarray(z, dtype=float) + a * c_ref for z in problem.centers]
    for i in range(m_count):
        matrix[i * n : (i + 1) * n, i * n : (i + 1) * n] = self_block
        for j in range(i + 1, m_count):
            r = np.linalg.norm(cells[i][:, None, :] - cells[j][None, :, :], axis=2)
            block = weight * green_kernel(k, r)
            matrix[i * n : (i + 1) * n, j * n : (j + 1) * n] = block
            matrix[j * n : (j + 1) * n, i * n : (i + 1) * n] = block.T
    return matrix


def incident_coefficients(problem: LSEProblem) -> np.ndarray:
    out = []
    for mesh in problem.physical_meshes():
        out.append(mesh.cell_averages(lambda x, y: problem.incident(np.stack([x, y], axis=-1))) * mesh.sqrt_areas)
    return np.array(out)


def solve_lse(problem: LSEProblem) -> FieldSolution:
    """Solve (I - strength A) c = b for the Galerkin coefficients."""
    if problem.reference.n_cells < 16:
        raise ValueError("particle mesh too coarse: need at least 16 cells")
    b = incident_coefficients(problem).ravel()
    n_total = b.size
    system = np.eye(n_total, dtype=complex) - problem.strength * lse_matrix(problem)
    lu, piv = lu_factor(system)
    coeffs = lu_solve((lu, piv), b)
    anorm = np.linalg.norm(system, 1)
    rcond, info = lapack.zgecon(lu, anorm, norm="1")
    condition = float(np.inf if rcond == 0 else 1.0 / rcond)
    residual = float(np.linalg.norm(system @ coeffs - b) / max(np.linalg.norm(b), 1e-300))
    if condition > CONDITION_LIMIT:
        warnings.warn(f"LSE condition estimate {condition:.3e} exceeds {CONDITION_LIMIT:.0e}: near resonance", NearResonanceWarning)
    m = problem.n_particles
    return FieldSolution(
        problem=problem,
        coefficients=coeffs.reshape(m, -1),
        incident_coefficients=b.reshape(m, -1),
        residual=residual,
        condition=condition,
    )


def lse_problem(scenario: Scenario, reference: CellMesh, omega: float | None = None, tau: complex | None = None) -> LSEProblem:
    """LSE problem for the scenario's particles at frequency omega."""
    omega = scenario.omega if omega is None else omega
    if not scenario.particles:
        raise ValueError("scenario has no particles")
    tau = contrast_tau(scenario, 0, omega) if tau is None else tau
    k = scenario.medium.wavenumber(omega)
    d = scenario.wave.direction
    return LSEProblem(
        wavenumber=k,
        strength=omega**2 * scenario.medium.mu0 * tau,
        reference=reference,
        centers=np.array([p.center for p in scenario.particles], dtype=float),
        radius=scenario.particles[0].radius,
        incident=lambda pts: plane_wave(k, d, pts),
    )


def fourier_coefficient(field: FieldSolution, spec: SpectralData, n: int, m: int = 0) -> complex:
    return field.fourier_coefficient(spec, n, m)


# ---------------------------------------------------------------------------
# Foldy-Lax


@dataclass(frozen=True, eq=False)
class FoldyLaxSystem:
    centers: np.ndarray
    c_star: np.ndarray
    matrix: np.ndarray  # B
    rhs: np.ndarray  # u0(z_m)
    strength: complex
    norm_bound: float
    override: bool = False


@dataclass(frozen=True)
class FoldyLaxSolution:
    q: np.ndarray
    averages: np.ndarray  # int_{D_m} v
    method: str
    iterations: int = 0


def assemble_foldy_lax(
    centers: Sequence,
    c_value: complex,
    wavenumber: complex,
    rhs: np.ndarray,
    strength: complex,
    override: bool = False,
) -> FoldyLaxSystem:
    """(I - B) Q = u0(z) with B_mj = G_k(z_m, z_j) C*_j off the diagonal.

    ``override`` lets the system be assembled when ||B||_inf >= 1; the solve
    is then direct and a warning is emitted.
    """
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    m = centers.shape[0]
    c_star = np.full(m, c_value / (1 - kernel_constant(wavenumber) * c_value), dtype=complex)
    b = np.zeros((m, m), dtype=complex)
    if m > 1:
        r = np.linalg.norm(centers[:, None, :] - centers[None, :, :], axis=2)
        off = ~np.eye(m, dtype=bool)
        b[off] = green_kernel(wavenumber, r[off]) * np.broadcast_to(c_star[None, :], (m, m))[off]
    norm = float(np.max(np.sum(np.abs(b), axis=1))) if m > 1 else 0.0
    if norm >= 1:
        r = np.linalg.norm(centers[:, None, :] - centers[None, :, :], axis=2) + np.eye(m) * np.inf
        i, j = np.unravel_index(np.argmin(r), r.shape)
        msg = f"||B||_inf = {norm:.4g} >= 1; closest pair ({i}, {j}) at distance {r[i, j]:.4g}"
        if not override:
            raise InvertibilityError(msg)
        warnings.warn(msg + "; solving directly under override", RuntimeWarning)
    return FoldyLaxSystem(
        centers=centers,
        c_star=c_star,
        matrix=b,
        rhs=np.asarray(rhs, dtype=complex),
        strength=complex(strength),
        norm_bound=norm,
        override=override,
    )


def solve_foldy_lax(system: FoldyLaxSystem, method: str = "direct", order: int | None = None, max_iter: int = 200, tol: float = 1e-14) -> FoldyLaxSolution:
    """Solve (I - B) Q = V.  ``order`` 0 or 1 truncates the Neumann series."""
    b, v = system.matrix, system.rhs
    iterations = 0
    if order is not None:
        if order not in (0, 1):
            raise ValueError("order must be 0, 1 or None")
        q = v.copy() if order == 0 else v + b @ v
        method = f"neumann-order-{order}"
    elif method == "direct" or system.override:
        q = np.linalg.solve(np.eye(v.size) - b, v)
        method = "direct"
    elif method == "neumann":
        if system.norm_bound >= 1:
            raise InvertibilityError("Neumann iteration needs ||B||_inf < 1")
        q = v.copy()
        for iterations in range(1, max_iter + 1):
            new = v + b @ q
            if np.max(np.abs(new - q)) <= tol * max(np.max(np.abs(new)), 1e-300):
                q = new
                break
            q = new
        else:
            raise RuntimeError(f"Neumann iteration did not converge in {max_iter} steps")
    else:
        raise ValueError(f"unknown method {method!r}")
    averages = q * system.c_star / system.strength
    return FoldyLaxSolution(q=q, averages=averages, method=method, iterations=iterations)


# ---------------------------------------------------------------------------
# Dimer two-mode system


@dataclass(frozen=True)
class DimerModalSystem:
    matrix: np.ndarray
    rhs: np.ndarray
    solution: np.ndarray  # <u2, e_n0^(i)>, i = 1, 2
    det: complex
    phi0: float


def dimer_modal_system(spec: SpectralData, strength: complex, distance: float, rhs, n0: int = 0) -> DimerModalSystem:
    """2x2 system for the resonant-mode coefficients of two identical particles."""
    resid = 1 - strength * spec.eigenvalues[n0]
    phi0 = -np.log(distance) / (2 * np.pi)
    coupling = strength * spec.a**2 * phi0 * spec.means[n0] ** 2
    matrix = np.array([[resid, -coupling], [-coupling, resid]], dtype=complex)
    rhs = np.asarray(rhs, dtype=complex)
    return DimerModalSystem(
        matrix=matrix,
        rhs=rhs,
        solution=np.linalg.solve(matrix, rhs),
        det=complex(resid**2 - coupling**2),
        phi0=float(phi0),
    )
