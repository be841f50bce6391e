"""Procedural test meshes: grids, cubes, spheres and small fixtures."""

from __future__ import annotations

import numpy as np

from .mesh import TriMesh, build_mesh


def single_triangle() -> TriMesh:
    return build_mesh(
        [(0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (0.0, 1.0, 0.0)], [(0, 1, 2)]
    )


def two_triangle_strip() -> TriMesh:
    """Two triangles sharing one edge; 4 vertices, 5 edges."""
    positions = [
        (0.0, 0.0, 0.0),
        (1.0, 0.0, 0.0),
        (0.0, 1.0, 0.0),
        (1.0, 1.0, 0.0),
    ]
    return build_mesh(positions, [(0, 1, 2), (1, 3, 2)])


def tetrahedron() -> TriMesh:
    """Closed surface: 4 faces, 6 edges, all interior."""
    positions = [
        (0.0, 0.0, 0.0),
        (1.0, 0.0, 0.0),
        (0.0, 1.0, 0.0),
        (0.0, 0.0, 1.0),
    ]
    faces = [(0, 2, 1), (0, 1, 3), (0, 3, 2), (1, 2, 3)]
    return build_mesh(positions, faces)


def flat_grid(nx: int, ny: int, width: float = 1.0, height: float = 1.0) -> TriMesh:
    """Open planar grid in z = 0, normals +z, nx * ny cells split by diagonals."""
    if nx < 1 or ny < 1:
        raise ValueError("nx and ny must be >= 1")
    xs = np.linspace(0.0, width, nx + 1)
    ys = np.linspace(0.0, height, ny + 1)
    positions = [(x, y, 0.0) for y in ys for x in xs]

    def vid(i, j):
        return j * (nx + 1) + i

    faces = []
    for j in range(ny):
        for i in range(nx):
            a, b = vid(i, j), vid(i + 1, j)
            c, d = vid(i + 1, j + 1), vid(i, j + 1)
            faces.append((a, b, c))
            faces.append((a, c, d))
    return build_mesh(positions, faces)


_CUBE_FACES = (
    # (origin, du, dv) on the unit lattice with cross(du, dv) pointing outward
    ((0, 0, 1), (1, 0, 0), (0, 1, 0)),  # z = 1
    ((0, 0, 0), (0, 1, 0), (1, 0, 0)),  # z = 0
    ((1, 0, 0), (0, 1, 0), (0, 0, 1)),  # x = 1
    ((0, 0, 0), (0, 0, 1), (0, 1, 0)),  # x = 0
    ((0, 1, 0), (0, 0, 1), (1, 0, 0)),  # y = 1
    ((0, 0, 0), (1, 0, 0), (0, 0, 1)),  # y = 0
)


def cube(n: int = 1, size: float = 1.0) -> TriMesh:
    """Closed cube surface, each square face split into 2 n^2 triangles.

    Shared edge and corner vertices are welded, faces wind counter-clockwise
    seen from outside.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    index = {}
    positions = []

    def vid(p):
        key = tuple(int(c) for c in p)
        if key not in index:
            index[key] = len(positions)
            positions.append(tuple(c * size / n for c in key))
        return index[key]

    faces = []
    for origin, du, dv in _CUBE_FACES:
        o = np.array(origin) * n
        u = np.array(du)
        v = np.array(dv)
        for a in range(n):
            for b in range(n):
                p00 = vid(o + a * u + b * v)
                p10 = vid(o + (a + 1) * u + b * v)
                p11 = vid(o + (a + 1) * u + (b + 1) * v)
                p01 = vid(o + a * u + (b + 1) * v)
                faces.append((p00, p10, p11))
                faces.append((p00, p11, p01))
    return build_mesh(positions, faces)


_ICO_T = (1.0 + np.sqrt(5.0)) / 2.0

_ICO_VERTS = (
    (-1, _ICO_T, 0), (1, _ICO_T, 0), (-1, -_ICO_T, 0), (1, -_ICO_T, 0),
    (0, -1, _ICO_T), (0, 1, _ICO_T), (0, -1, -_ICO_T), (0, 1, -_ICO_T),
    (_ICO_T, 0, -1), (_ICO_T, 0, 1), (-_ICO_T, 0, -1), (-_ICO_T, 0, 1),
)

_ICO_FACES = (
    (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
    (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
    (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
    (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
)


def icosphere(subdivisions: int = 2, radius: float = 1.0) -> TriMesh:
    """Closed sphere approximation: icosahedron with midpoint subdivision.

    20 * 4^subdivisions faces, all vertices at distance ``radius``.
    """
    if subdivisions < 0:
        raise ValueError("subdivisions must be >= 0")
    verts = [np.array(p, dtype=np.float64) for p in _ICO_VERTS]
    verts = [p / np.linalg.norm(p) for p in verts]
    faces = [tuple(f) for f in _ICO_FACES]

    for _ in range(subdivisions):
        midpoint = {}

        def mid(a, b):
            key = (a, b) if a < b else (b, a)
            if key not in midpoint:
                p = verts[a] + verts[b]
                verts.append(p / np.linalg.norm(p))
                midpoint[key] = len(verts) - 1
            return midpoint[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new_faces.extend(
                [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
            )
        faces = new_faces

    positions = np.array(verts) * radius
    return build_mesh(positions, faces)
