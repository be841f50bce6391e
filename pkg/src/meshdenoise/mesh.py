"""Indexed triangle surface with the adjacency used by the difference operators.

``build_mesh`` validates a triangulation once and precomputes what the
operator layer needs: canonical edges, relative orientation signs, areas,
edge lengths, boundary flags and the per-triangle second-difference stencils.
Instances are immutable (arrays are write-locked) and safe to share between
threads.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from .errors import (
    DegenerateFaceError,
    InconsistentOrientationError,
    IndexOutOfRangeError,
    NonManifoldEdgeError,
)


@dataclass(frozen=True)
class LineStencil:
    """Second-difference stencil anchored at one corner (apex) of a triangle.

    ``e_plus`` and ``e_minus`` are the two edges of triangle ``tau`` meeting
    at the apex vertex; ``tau_plus`` and ``tau_minus`` are the triangles
    across those edges, or ``None`` on the boundary.  ``active`` is False as
    soon as either edge lies on the boundary; inactive stencils contribute
    exact zeros everywhere.
    """

    tau: int
    tau_plus: int | None
    tau_minus: int | None
    e_plus: int
    e_minus: int
    active: bool


@dataclass(frozen=True)
class TriMesh:
    """Immutable indexed triangle surface.

    Attributes
    ----------
    vertices : (I, 3) float64
        Vertex positions.
    triangles : (T, 3) int64
        Vertex index triples, counter-clockwise when seen from the outward
        normal side.
    edges : (E, 2) int64
        Unique edges with a fixed canonical orientation (built low index ->
        high index), lexicographically sorted.
    edge_triangles : (E, 2) int64
        Incident triangles per edge, in face-index order; the second slot is
        -1 for boundary edges.
    sgn : (E, 2) int64
        Relative orientation of the edge within each incident triangle
        (+1 when the triangle traverses the edge along its canonical
        direction, -1 otherwise; 0 in the empty slot of a boundary edge).
    area : (T,) float64
        Triangle areas, strictly positive.
    edge_len : (E,) float64
        Edge lengths, strictly positive.
    is_boundary_edge : (E,) bool
        True when the edge has a single incident triangle.
    triangle_edges : (T, 3) int64
        Edge index opposite each local vertex.
    triangle_edge_sgn : (T, 3) int64
        ``sgn`` of that edge relative to this triangle.
    stencil_* : (T, 3) arrays
        Flat form of the three per-triangle stencils, indexed by the local
        apex vertex; ``stencil_tau_plus``/``stencil_tau_minus`` are -1 where
        there is no triangle across the corresponding edge.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    edges: np.ndarray
    edge_triangles: np.ndarray
    sgn: np.ndarray
    area: np.ndarray
    edge_len: np.ndarray
    is_boundary_edge: np.ndarray
    triangle_edges: np.ndarray
    triangle_edge_sgn: np.ndarray
    stencil_e_plus: np.ndarray
    stencil_e_minus: np.ndarray
    stencil_tau_plus: np.ndarray
    stencil_tau_minus: np.ndarray
    stencil_active: np.ndarray

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    @property
    def n_edges(self) -> int:
        return self.edges.shape[0]

    @cached_property
    def stencils(self) -> tuple:
        """Per-triangle triple of :class:`LineStencil` records (apex = local vertex)."""
        out = []
        for t in range(self.n_triangles):
            row = []
            for i in range(3):
                tp = int(self.stencil_tau_plus[t, i])
                tm = int(self.stencil_tau_minus[t, i])
                row.append(
                    LineStencil(
                        tau=t,
                        tau_plus=tp if tp >= 0 else None,
                        tau_minus=tm if tm >= 0 else None,
                        e_plus=int(self.stencil_e_plus[t, i]),
                        e_minus=int(self.stencil_e_minus[t, i]),
                        active=bool(self.stencil_active[t, i]),
                    )
                )
            out.append(tuple(row))
        return tuple(out)


def _lock(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


def build_mesh(positions, faces) -> TriMesh:
    """Build an immutable :class:`TriMesh` from raw vertex and face arrays.

    Parameters
    ----------
    positions : array_like, shape (I, 3)
        Vertex coordinates.
    faces : array_like, shape (T, 3)
        Counter-clockwise vertex index triples.

    Returns
    -------
    TriMesh

    Raises
    ------
    IndexOutOfRangeError
        A face references a vertex index outside ``positions``.
    DegenerateFaceError
        Zero-area face, repeated vertex within a face, or two faces on the
        same vertex set.
    NonManifoldEdgeError
        An edge with more than two incident triangles.
    InconsistentOrientationError
        Two triangles traverse a shared edge in the same direction.
    """
    v = np.ascontiguousarray(np.asarray(positions, dtype=np.float64))
    f_raw = np.asarray(faces)
    if f_raw.dtype.kind not in "iu":
        raise ValueError("face indices must be integers")
    f = np.ascontiguousarray(f_raw.astype(np.int64))
    if v.ndim != 2 or v.shape[1] != 3:
        raise ValueError(f"positions must have shape (I, 3), got {v.shape}")
    if f.ndim != 2 or f.shape[1] != 3:
        raise ValueError(f"faces must have shape (T, 3), got {f.shape}")
    if v.shape[0] == 0 or f.shape[0] == 0:
        raise ValueError("mesh must have at least one vertex and one face")

    n_vertices = v.shape[0]
    n_triangles = f.shape[0]
    if f.min() < 0 or f.max() >= n_vertices:
        bad = int(np.argmax((f < 0).any(axis=1) | (f >= n_vertices).any(axis=1)))
        raise IndexOutOfRangeError(
            f"face {bad} references a vertex outside [0, {n_vertices})"
        )

    repeated = (f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 2] == f[:, 0])
    if repeated.any():
        raise DegenerateFaceError(
            f"face {int(np.argmax(repeated))} repeats a vertex"
        )

    # Two faces on the same vertex set create stencils whose e+ and e- cross
    # into the same neighbour (valence-2 pillow); rejected as degenerate.
    sorted_faces = np.sort(f, axis=1)
    _, dup_counts = np.unique(sorted_faces, axis=0, return_counts=True)
    if (dup_counts > 1).any():
        raise DegenerateFaceError("two faces share the same vertex set")

    cross = np.cross(v[f[:, 1]] - v[f[:, 0]], v[f[:, 2]] - v[f[:, 0]])
    area = 0.5 * np.sqrt(np.sum(cross * cross, axis=1))
    ok = area > 0.0
    if not ok.all():
        raise DegenerateFaceError(
            f"face {int(np.argmax(~ok))} has zero or non-finite area"
        )

    # Halfedge opposite local vertex i is (v_{i+1}, v_{i+2}).
    halfedges = f[:, [1, 2, 2, 0, 0, 1]].reshape(n_triangles, 3, 2)
    canonical = np.sort(halfedges, axis=2)
    slot_sgn = np.where(halfedges[:, :, 0] < halfedges[:, :, 1], 1, -1).astype(np.int64)

    edges, inverse = np.unique(canonical.reshape(-1, 2), axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    n_edges = edges.shape[0]
    triangle_edges = inverse.reshape(n_triangles, 3)

    counts = np.bincount(inverse, minlength=n_edges)
    if (counts > 2).any():
        e = int(np.argmax(counts > 2))
        raise NonManifoldEdgeError(
            f"edge {tuple(edges[e])} has {int(counts[e])} incident triangles"
        )

    # Group halfedges by edge; within a group they stay in face-index order.
    order = np.argsort(inverse, kind="stable")
    first = np.searchsorted(inverse[order], np.arange(n_edges), side="left")
    tri_of = order // 3
    sgn_of = slot_sgn.reshape(-1)[order]

    edge_triangles = np.full((n_edges, 2), -1, dtype=np.int64)
    sgn = np.zeros((n_edges, 2), dtype=np.int64)
    edge_triangles[:, 0] = tri_of[first]
    sgn[:, 0] = sgn_of[first]
    second = counts == 2
    edge_triangles[second, 1] = tri_of[first[second] + 1]
    sgn[second, 1] = sgn_of[first[second] + 1]

    flipped = second & (sgn[:, 0] * sgn[:, 1] != -1)
    if flipped.any():
        e = int(np.argmax(flipped))
        raise InconsistentOrientationError(
            f"edge {tuple(edges[e])} is traversed in the same direction by "
            f"triangles {tuple(edge_triangles[e])}"
        )

    diff = v[edges[:, 0]] - v[edges[:, 1]]
    edge_len = np.sqrt(np.sum(diff * diff, axis=1))
    if not (edge_len > 0.0).all():
        raise DegenerateFaceError("zero-length edge")

    is_boundary_edge = counts == 1
    triangle_edge_sgn = slot_sgn

    # Stencil with apex at local vertex i: the two edges of the triangle
    # containing that vertex (opposite local vertices i+2 and i+1).
    apex = np.arange(3)
    stencil_e_plus = triangle_edges[:, (apex + 2) % 3]
    stencil_e_minus = triangle_edges[:, (apex + 1) % 3]

    tri_index = np.arange(n_triangles, dtype=np.int64)[:, None]

    def across(edge_idx):
        a = edge_triangles[edge_idx, 0]
        b = edge_triangles[edge_idx, 1]
        return np.where(a == tri_index, b, a)

    stencil_tau_plus = across(stencil_e_plus)
    stencil_tau_minus = across(stencil_e_minus)
    stencil_active = (stencil_tau_plus >= 0) & (stencil_tau_minus >= 0)

    return TriMesh(
        vertices=_lock(v),
        triangles=_lock(f),
        edges=_lock(edges),
        edge_triangles=_lock(edge_triangles),
        sgn=_lock(sgn),
        area=_lock(area),
        edge_len=_lock(edge_len),
        is_boundary_edge=_lock(is_boundary_edge),
        triangle_edges=_lock(triangle_edges),
        triangle_edge_sgn=_lock(triangle_edge_sgn),
        stencil_e_plus=_lock(np.ascontiguousarray(stencil_e_plus)),
        stencil_e_minus=_lock(np.ascontiguousarray(stencil_e_minus)),
        stencil_tau_plus=_lock(np.ascontiguousarray(stencil_tau_plus)),
        stencil_tau_minus=_lock(np.ascontiguousarray(stencil_tau_minus)),
        stencil_active=_lock(stencil_active),
    )


def face_normals(mesh: TriMesh) -> np.ndarray:
    """Unit outward normals per triangle, (T, 3).

    Direction follows the counter-clockwise vertex order of each face.
    """
    v, f = mesh.vertices, mesh.triangles
    cross = np.cross(v[f[:, 1]] - v[f[:, 0]], v[f[:, 2]] - v[f[:, 0]])
    norm = np.sqrt(np.sum(cross * cross, axis=1))
    if not (norm > 0.0).all():
        raise DegenerateFaceError(
            f"face {int(np.argmax(~(norm > 0.0)))} has a zero-length normal"
        )
    return cross / norm[:, None]


def mean_edge_length(mesh: TriMesh) -> float:
    """Arithmetic mean of all edge lengths."""
    return float(mesh.edge_len.mean())


def flip_edge_orientations(mesh: TriMesh) -> TriMesh:
    """Copy of the mesh with every canonical edge orientation reversed.

    The result deliberately violates the low-index -> high-index convention
    of :func:`build_mesh`; it exists so orientation-invariance of the
    operators can be checked against an arbitrary choice of orientations.
    """
    return replace(
        mesh,
        edges=_lock(mesh.edges[:, ::-1].copy()),
        sgn=_lock(-mesh.sgn),
        triangle_edge_sgn=_lock(-mesh.triangle_edge_sgn),
    )
