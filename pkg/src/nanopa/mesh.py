"""Polygonal cell meshes of particle reference shapes.

The disc mesh is polar: rings of near-square cells whose curved sides are
replaced by chords.  Vertices on each circle are shared by the rings on both
sides, so the cells tile a regular polygon exactly; the outer radius is
inflated slightly so that polygon has the area of the disc.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .specfun import polygon_log_integral

# Strang-Fix 6-point rule, exact for polynomials of degree 4 on triangles.
_TRI_BARY = np.array(
    [
        [0.816847572980459, 0.091576213509771, 0.091576213509771],
        [0.091576213509771, 0.816847572980459, 0.091576213509771],
        [0.091576213509771, 0.091576213509771, 0.816847572980459],
        [0.108103018168070, 0.445948490915965, 0.445948490915965],
        [0.445948490915965, 0.108103018168070, 0.445948490915965],
        [0.445948490915965, 0.445948490915965, 0.108103018168070],
    ]
)
_TRI_W = np.array([0.109951743655322] * 3 + [0.223381589678011] * 3)


@dataclass(frozen=True, eq=False)
class CellMesh:
    """Cells as padded counterclockwise polygons plus derived geometry."""

    vertices: np.ndarray  # (N, V, 2)
    label: str = "mesh"
    centroids: np.ndarray = field(init=False)
    areas: np.ndarray = field(init=False)
    moments: np.ndarray = field(init=False)  # central second moments / area
    diameters: np.ndarray = field(init=False)
    quad_points: np.ndarray = field(init=False)
    quad_weights: np.ndarray = field(init=False)
    _cache: dict = field(init=False, repr=False, default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        object.__setattr__(self, "vertices", v)
        x, y = v[..., 0], v[..., 1]
        xn, yn = np.roll(x, -1, axis=1), np.roll(y, -1, axis=1)
        cross = x * yn - xn * y
        area = 0.5 * cross.sum(axis=1)
        if np.any(area <= 0):
            raise ValueError("cells must be counterclockwise with positive area")
        cx = ((x + xn) * cross).sum(axis=1) / (6 * area)
        cy = ((y + yn) * cross).sum(axis=1) / (6 * area)
        centroids = np.stack([cx, cy], axis=1)

        # fan triangles (centroid, v_k, v_k+1) carry the quadrature rule
        a = centroids[:, None, :]
        b, c = v, np.roll(v, -1, axis=1)
        tri_area = 0.5 * ((b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1]) - (b[..., 1] - a[..., 1]) * (c[..., 0] - a[..., 0]))
        pts = (
            _TRI_BARY[None, None, :, 0, None] * a[:, :, None, :]
            + _TRI_BARY[None, None, :, 1, None] * b[:, :, None, :]
            + _TRI_BARY[None, None, :, 2, None] * c[:, :, None, :]
        )
        w = tri_area[:, :, None] * _TRI_W[None, None, :]
        n = v.shape[0]
        pts = pts.reshape(n, -1, 2)
        w = w.reshape(n, -1)
        rel = pts - centroids[:, None, :]
        moments = np.einsum("nq,nqa,nqb->nab", w, rel, rel) / area[:, None, None]
        diam = 2 * np.max(np.linalg.norm(v - centroids[:, None, :], axis=2), axis=1)
        object.__setattr__(self, "areas", area)
        object.__setattr__(self, "centroids", centroids)
        object.__setattr__(self, "moments", moments)
        object.__setattr__(self, "diameters", diam)
        object.__setattr__(self, "quad_points", pts)
        object.__setattr__(self, "quad_weights", w)

    @property
    def n_cells(self) -> int:
        return self.vertices.shape[0]

    @property
    def total_area(self) -> float:
        return float(self.areas.sum())

    @property
    def sqrt_areas(self) -> np.ndarray:
        return np.sqrt(self.areas)

    def placed(self, center, radius: float) -> "CellMesh":
        """Copy scaled by radius and translated to center."""
        center = np.asarray(center, dtype=float)
        return CellMesh(self.vertices * radius + center, label=f"{self.label}@a={radius:g}")

    def mapped(self, matrix) -> "CellMesh":
        """Copy under a linear map with positive determinant."""
        m = np.asarray(matrix, dtype=float)
        if np.linalg.det(m) <= 0:
            raise ValueError("map must preserve orientation")
        return CellMesh(self.vertices @ m.T, label=f"{self.label}-mapped")

    def cell_averages(self, func) -> np.ndarray:
        """Cell averages of func(x, y) by the cell quadrature rule."""
        p = self.quad_points
        vals = func(p[..., 0], p[..., 1])
        return np.sum(vals * self.quad_weights, axis=1) / self.areas


def _ring_sectors(n_rings: int) -> list[int]:
    return [max(3, int(round(2 * np.pi * (j + 0.5)))) for j in range(n_rings)]


def _circle_angles(counts: list[int], chords: int) -> list[np.ndarray]:
    """Vertex angles on circle j (j = 1..n_rings), shared by adjacent rings."""
    out = []
    n_rings = len(counts)
    for j in range(1, n_rings + 1):
        sets = [np.arange(chords * counts[j - 1]) * 2 * np.pi / (chords * counts[j - 1])]
        if j < n_rings:
            sets.append(np.arange(chords * counts[j]) * 2 * np.pi / (chords * counts[j]))
        ang = np.sort(np.concatenate(sets))
        keep = np.concatenate([[True], np.diff(ang) > 1e-12])
        out.append(ang[keep])
    return out


def _between(angles: np.ndarray, lo: float, hi: float) -> np.ndarray:
    ext = np.concatenate([angles, [2 * np.pi]])
    sel = ext[(ext >= lo - 1e-12) & (ext <= hi + 1e-12)]
    return sel


def disc_mesh(n_cells: int = 1024, chords_per_arc: int = 2) -> CellMesh:
    """Polar polygonal mesh of the unit disc with about n_cells cells."""
    if n_cells < 3:
        raise ValueError("disc mesh needs at least 3 cells")
    n_rings = max(1, int(round(np.sqrt(n_cells / np.pi))))
    counts = _ring_sectors(n_rings)
    circles = _circle_angles(counts, chords_per_arc)
    n_outer = len(circles[-1])
    outer_radius = np.sqrt(2 * np.pi / (n_outer * np.sin(2 * np.pi / n_outer)))
    radii = np.arange(n_rings + 1) / n_rings
    radii[-1] = outer_radius
    cells = []
    for j, n_sec in enumerate(counts):
        for i in range(n_sec):
            lo, hi = 2 * np.pi * i / n_sec, 2 * np.pi * (i + 1) / n_sec
            outer = _between(circles[j], lo, hi)
            poly = [radii[j + 1] * np.stack([np.cos(outer), np.sin(outer)], axis=1)]
            if j == 0:
                poly.append(np.zeros((1, 2)))
            else:
                inner = _between(circles[j - 1], lo, hi)[::-1]
                poly.append(radii[j] * np.stack([np.cos(inner), np.sin(inner)], axis=1))
            cells.append(np.concatenate(poly))
    width = max(len(c) for c in cells)
    padded = np.empty((len(cells), width, 2))
    for k, c in enumerate(cells):
        padded[k, : len(c)] = c
        padded[k, len(c) :] = c[-1]
    return CellMesh(padded, label=f"disc{len(cells)}")


@lru_cache(maxsize=8)
def cached_disc_mesh(n_cells: int) -> CellMesh:
    return disc_mesh(n_cells)


def ellipse_mesh(n_cells: int, aspect: float) -> CellMesh:
    """Unit-area-preserving ellipse: the disc mesh under diag(aspect, 1/aspect)."""
    if aspect <= 0:
        raise ValueError("aspect must be positive")
    return disc_mesh(n_cells).mapped(np.diag([aspect, 1.0 / aspect]))


NEAR_FACTOR = 3.0


def log_potential_matrix(mesh: CellMesh) -> np.ndarray:
    """Galerkin matrix of -(1/2pi) log|x-y| in the orthonormal cell basis.

    Entry (i, j) is the double integral over cells i and j divided by
    sqrt(A_i A_j).  Near pairs integrate the closed-form inner potential with
    the outer cell rule; far pairs use a centroid expansion with second-moment
    correction.  The result is cached on the mesh.
    """
    if "log_potential" in mesh._cache:
        return mesh._cache["log_potential"]
    c, area, q = mesh.centroids, mesh.areas, mesh.moments
    diff = c[:, None, :] - c[None, :, :]
    r2 = np.sum(diff * diff, axis=2)
    np.fill_diagonal(r2, 1.0)
    # Hessian of log|r| contracted with (Q_i + Q_j)
    qs = q[:, None, :, :] + q[None, :, :, :]
    trace = qs[..., 0, 0] + qs[..., 1, 1]
    quad_form = np.einsum("ija,ijab,ijb->ij", diff, qs, diff)
    double = area[:, None] * area[None, :] * (0.5 * np.log(r2) + 0.5 * (trace / r2 - 2.0 * quad_form / r2**2))

    reach = 0.5 * (mesh.diameters[:, None] + mesh.diameters[None, :])
    near = r2 < (NEAR_FACTOR * reach) ** 2
    np.fill_diagonal(near, True)
    near_i, near_j = np.nonzero(near)
    upper = near_i <= near_j
    near_i, near_j = near_i[upper], near_j[upper]
    chunk = 4096
    for start in range(0, near_i.size, chunk):
        ii, jj = near_i[start : start + chunk], near_j[start : start + chunk]
        inner_ij = polygon_log_integral(mesh.quad_points[ii], mesh.vertices[jj][:, None])
        inner_ji = polygon_log_integral(mesh.quad_points[jj], mesh.vertices[ii][:, None])
        value = 0.5 * (np.sum(mesh.quad_weights[ii] * inner_ij, axis=1) + np.sum(mesh.quad_weights[jj] * inner_ji, axis=1))
        double[ii, jj] = value
        double[jj, ii] = value
    s = np.sqrt(area)
    matrix = -double / (2 * np.pi) / (s[:, None] * s[None, :])
    mesh._cache["log_potential"] = matrix
    return matrix
