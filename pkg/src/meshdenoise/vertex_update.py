"""Vertex reconstruction from a filtered face-normal field.

Classical gradient-type iteration: each vertex moves along the incident
face normals so that faces become planar with respect to the filtered
normals.  Updates are Jacobi-style (all new positions computed from the
previous sweep), so the result is deterministic and order-independent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import TriMesh


@dataclass(frozen=True)
class VertexUpdateParams:
    """Iteration count and damping step of the reconstruction loop."""

    iterations: int = 20
    step: float = 1.0

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if not 0.0 < self.step <= 1.0:
            raise ValueError("step must lie in (0, 1]")


def update_vertices(
    mesh: TriMesh, N_filtered: np.ndarray, params: VertexUpdateParams
) -> np.ndarray:
    """Move vertices to agree with ``N_filtered``; returns new (I, 3) positions.

    Per sweep, vertex i receives the average over its incident faces of the
    projection ``N (N . (c - v))`` where ``c`` is the face barycenter
    (recomputed every sweep since positions move).  Vertices with no
    incident face are left unmoved.  Connectivity is untouched.
    """
    N = np.asarray(N_filtered, dtype=np.float64)
    if N.shape != (mesh.n_triangles, 3):
        raise ValueError(
            f"N_filtered must have shape ({mesh.n_triangles}, 3), got {N.shape}"
        )
    v = mesh.vertices.copy()
    f = mesh.triangles
    counts = np.bincount(f.reshape(-1), minlength=mesh.n_vertices).astype(np.float64)
    scale = np.divide(
        params.step, counts, out=np.zeros_like(counts), where=counts > 0
    )

    for _ in range(params.iterations):
        corners = v[f]
        centers = corners.mean(axis=1)
        offsets = np.sum((centers[:, None, :] - corners) * N[:, None, :], axis=2)
        moves = offsets[:, :, None] * N[:, None, :]
        acc = np.zeros_like(v)
        np.add.at(acc, f.reshape(-1), moves.reshape(-1, 3))
        v = v + scale[:, None] * acc
    return v


def planarity_residual(
    positions: np.ndarray, triangles: np.ndarray, normals: np.ndarray
) -> float:
    """Sum of squared normal-direction offsets of corners from face barycenters.

    The quantity the update drives down; used by the regression tests.
    """
    corners = positions[triangles]
    centers = corners.mean(axis=1)
    offsets = np.sum((centers[:, None, :] - corners) * normals[:, None, :], axis=2)
    return float(np.sum(offsets * offsets))
