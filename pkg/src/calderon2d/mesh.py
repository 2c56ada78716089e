"""Triangular meshes for the disc, the half-disc, and mapped images.

Disc meshes are built from concentric rings (ring k carries 6k vertices
at radius k/m), which puts the boundary vertices at exactly equispaced
angles; boundary Fourier analysis by the trapezoid rule is then exact
quadrature on the trace basis.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class TriangularMesh:
    pts: np.ndarray        # (np, 2)
    tris: np.ndarray       # (nt, 3) positively oriented
    boundary: np.ndarray   # boundary vertex indices, ordered counterclockwise
    h: float               # nominal mesh size
    corner_flags: np.ndarray | None = None   # marks junction vertices (half-disc)

    def boundary_points(self) -> np.ndarray:
        return self.pts[self.boundary]

    def boundary_angles(self) -> np.ndarray:
        p = self.boundary_points()
        return np.mod(np.arctan2(p[:, 1], p[:, 0]), 2.0 * np.pi)

    def interior_index(self) -> np.ndarray:
        return np.setdiff1d(np.arange(len(self.pts)), self.boundary)

    def mapped(self, fn) -> "TriangularMesh":
        """Image mesh under a complex map; orientation is re-enforced."""
        z = self.pts[:, 0] + 1j * self.pts[:, 1]
        w = np.asarray(fn(z))
        pts = np.column_stack([w.real, w.imag])
        tris = _orient(pts, self.tris.copy())
        return TriangularMesh(pts, tris, self.boundary.copy(), self.h,
                              self.corner_flags)


def _orient(pts, tris):
    p = pts[tris]
    cross = ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
             - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0]))
    flip = cross < 0
    tris[flip] = tris[flip][:, [0, 2, 1]]
    return tris


def _merge_rings(tris, start_a, angles_a, start_b, angles_b):
    """Triangulate the annulus between two vertex rings by angular merge."""
    na, nb = len(angles_a), len(angles_b)
    i = j = 0
    while i < na or j < nb:
        ii = start_a + (i % na)
        jj = start_b + (j % nb)
        next_a = angles_a[(i + 1) % na] + 2.0 * np.pi * ((i + 1) // na)
        next_b = angles_b[(j + 1) % nb] + 2.0 * np.pi * ((j + 1) // nb)
        if i < na and (next_a <= next_b or j >= nb):
            tris.append((ii, start_a + ((i + 1) % na), jj))
            i += 1
        else:
            tris.append((ii, start_b + ((j + 1) % nb), jj))
            j += 1


def disc_mesh(h: float) -> TriangularMesh:
    """Concentric-ring triangulation of the closed unit disc."""
    m = max(3, int(np.ceil(1.05 / h)))
    pts = [(0.0, 0.0)]
    ring_start = []
    ring_angles = []
    for k in range(1, m + 1):
        nk = 6 * k
        th = 2.0 * np.pi * np.arange(nk) / nk
        r = k / m
        ring_start.append(len(pts))
        ring_angles.append(th)
        pts.extend(zip(r * np.cos(th), r * np.sin(th)))
    pts = np.array(pts)
    tris = []
    for j in range(6):
        tris.append((0, 1 + j, 1 + (j + 1) % 6))
    for k in range(m - 1):
        _merge_rings(tris, ring_start[k], ring_angles[k],
                     ring_start[k + 1], ring_angles[k + 1])
    tris = _orient(pts, np.array(tris))
    boundary = np.arange(ring_start[-1], len(pts))
    return TriangularMesh(pts, tris, boundary, 1.0 / m)


def half_disc_mesh(h: float) -> TriangularMesh:
    """Upper half-disc {|z| <= 1, Im z >= 0} with corners at +-1.

    Ring k carries 3k+1 vertices at angles j*pi/(3k); the boundary walk
    runs counterclockwise along the arc from (1,0) to (-1,0) and back
    along the diameter through the center.
    """
    m = max(3, int(np.ceil(1.05 / h)))
    pts = [(0.0, 0.0)]
    ring_start = []
    ring_angles = []
    for k in range(1, m + 1):
        nk = 3 * k + 1
        th = np.pi * np.arange(nk) / (3 * k)
        r = k / m
        ring_start.append(len(pts))
        ring_angles.append(th)
        pts.extend(zip(r * np.cos(th), r * np.sin(th)))
    pts = np.array(pts)
    tris = []
    for j in range(3):
        tris.append((0, 1 + j, 2 + j))
    for k in range(m - 1):
        # open arcs: same merge but without wraparound
        sa, sb = ring_start[k], ring_start[k + 1]
        aa, ab = ring_angles[k], ring_angles[k + 1]
        na, nb = len(aa), len(ab)
        i = j = 0
        while i < na - 1 or j < nb - 1:
            ii, jj = sa + i, sb + j
            next_a = aa[i + 1] if i < na - 1 else np.inf
            next_b = ab[j + 1] if j < nb - 1 else np.inf
            if next_a <= next_b:
                tris.append((ii, sa + i + 1, jj))
                i += 1
            else:
                tris.append((ii, sb + j + 1, jj))
                j += 1
    tris = _orient(pts, np.array(tris))
    arc = np.arange(ring_start[-1], len(pts))
    # diameter nodes: angle-pi vertices walked inward, center, angle-0
    # vertices walked back outward
    left = [ring_start[k] + 3 * (k + 1) for k in range(m - 1)][::-1]
    right = [ring_start[k] for k in range(m - 1)]
    boundary = np.concatenate([arc, np.array(left + [0] + right, dtype=int)])
    corner_flags = np.zeros(len(pts), dtype=bool)
    corner_flags[arc[0]] = corner_flags[arc[-1]] = True
    return TriangularMesh(pts, tris, boundary, 1.0 / m, corner_flags)
