"""First- and second-order difference operators on piecewise constant face data.

Fields are plain numpy arrays: a face field has shape ``(T,)`` or ``(T, C)``,
an edge field ``(E,)`` or ``(E, C)``, and a stencil field ``(T, 3)`` or
``(T, 3, C)`` (three stencils per triangle, one per corner).  Every operator
acts channel by channel, and reductions keep a fixed summation order so
repeated runs are bit-identical.

The functions here are the matrix-free reference implementations;
:func:`assemble_sparse_operators` materializes the same maps as sparse
matrices (one factorization-friendly code path for the solver), and
:func:`check_operators` cross-validates the two.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .mesh import TriMesh, flip_edge_orientations


def _check_face_field(mesh: TriMesh, u, name: str = "face field") -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    if u.ndim not in (1, 2) or u.shape[0] != mesh.n_triangles:
        raise ValueError(
            f"{name}: expected shape ({mesh.n_triangles},) or "
            f"({mesh.n_triangles}, C), got {u.shape}"
        )
    return u


def _check_edge_field(mesh: TriMesh, v, name: str = "edge field") -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.ndim not in (1, 2) or v.shape[0] != mesh.n_edges:
        raise ValueError(
            f"{name}: expected shape ({mesh.n_edges},) or "
            f"({mesh.n_edges}, C), got {v.shape}"
        )
    return v


def _check_stencil_field(mesh: TriMesh, w, name: str = "stencil field") -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    if w.ndim not in (2, 3) or w.shape[:2] != (mesh.n_triangles, 3):
        raise ValueError(
            f"{name}: expected shape ({mesh.n_triangles}, 3) or "
            f"({mesh.n_triangles}, 3, C), got {w.shape}"
        )
    return w


def apply_D(mesh: TriMesh, u) -> np.ndarray:
    """Signed jump of a face field across every edge.

    For an interior edge the jump is the sum of the incident face values
    weighted by the edge's relative orientation in each triangle; boundary
    edges are exactly zero.
    """
    u = _check_face_field(mesh, u)
    out = np.zeros((mesh.n_edges,) + u.shape[1:])
    interior = ~mesh.is_boundary_edge
    tris = mesh.edge_triangles[interior]
    s = mesh.sgn[interior].astype(np.float64)
    expand = (slice(None),) + (None,) * (u.ndim - 1)
    out[interior] = s[:, 0][expand] * u[tris[:, 0]] + s[:, 1][expand] * u[tris[:, 1]]
    return out


def apply_D_star(mesh: TriMesh, v) -> np.ndarray:
    """Adjoint of :func:`apply_D`: ``(D u, v)_V == (u, D* v)_U`` for all u, v.

    Per triangle this is the length- and orientation-weighted sum of the
    incident interior edge values, divided by the triangle area.
    """
    v = _check_edge_field(mesh, v)
    expand = (slice(None),) + (None,) * (v.ndim - 1)
    weight = np.where(mesh.is_boundary_edge, 0.0, mesh.edge_len)
    acc = np.zeros((mesh.n_triangles,) + v.shape[1:])
    for i in range(3):
        e = mesh.triangle_edges[:, i]
        w = mesh.triangle_edge_sgn[:, i] * weight[e]
        acc += w[expand] * v[e]
    return acc / mesh.area[expand]


def apply_grad(mesh: TriMesh, u) -> np.ndarray:
    """Per-triangle triple of edge jumps; slot ``i`` is the edge opposite corner ``i``."""
    return apply_D(mesh, u)[mesh.triangle_edges]


def apply_grad2(mesh: TriMesh, u) -> np.ndarray:
    """Second difference across each line stencil: ``u[tau+] - 2 u[tau] + u[tau-]``.

    Inactive stencils (an adjacent edge on the boundary) are exactly zero,
    and the value does not depend on the canonical edge orientations.
    """
    u = _check_face_field(mesh, u)
    act = mesh.stencil_active
    tp = np.where(act, mesh.stencil_tau_plus, 0)
    tm = np.where(act, mesh.stencil_tau_minus, 0)
    center = u[:, None] if u.ndim == 1 else u[:, None, :]
    vals = u[tp] - 2.0 * center + u[tm]
    mask = act if u.ndim == 1 else act[:, :, None]
    return np.where(mask, vals, 0.0)


def apply_grad2_star(mesh: TriMesh, w) -> np.ndarray:
    """Adjoint of :func:`apply_grad2` under the area-weighted stencil inner product."""
    w = _check_stencil_field(mesh, w)
    act = mesh.stencil_active
    mask = act if w.ndim == 2 else act[:, :, None]
    aw = (slice(None), None) + (None,) * (w.ndim - 2)
    weighted = np.where(mask, w * mesh.area[aw], 0.0)
    acc = -2.0 * weighted.sum(axis=1)
    np.add.at(acc, mesh.stencil_tau_plus[act], weighted[act])
    np.add.at(acc, mesh.stencil_tau_minus[act], weighted[act])
    expand = (slice(None),) + (None,) * (acc.ndim - 1)
    return acc / mesh.area[expand]


def _collapse_channels(prod: np.ndarray) -> np.ndarray:
    if prod.ndim > 1:
        return prod.sum(axis=tuple(range(1, prod.ndim)))
    return prod


def inner_U(mesh: TriMesh, u1, u2) -> float:
    """Area-weighted inner product of two face fields (channels summed)."""
    u1 = _check_face_field(mesh, u1)
    u2 = _check_face_field(mesh, u2)
    if u1.shape != u2.shape:
        raise ValueError(f"shape mismatch: {u1.shape} vs {u2.shape}")
    return float(np.dot(mesh.area, _collapse_channels(u1 * u2)))


def inner_V(mesh: TriMesh, v1, v2) -> float:
    """Length-weighted inner product of two edge fields (channels summed)."""
    v1 = _check_edge_field(mesh, v1)
    v2 = _check_edge_field(mesh, v2)
    if v1.shape != v2.shape:
        raise ValueError(f"shape mismatch: {v1.shape} vs {v2.shape}")
    return float(np.dot(mesh.edge_len, _collapse_channels(v1 * v2)))


def inner_W(mesh: TriMesh, w1, w2) -> float:
    """Area-weighted inner product of two stencil fields (slots and channels summed)."""
    w1 = _check_stencil_field(mesh, w1)
    w2 = _check_stencil_field(mesh, w2)
    if w1.shape != w2.shape:
        raise ValueError(f"shape mismatch: {w1.shape} vs {w2.shape}")
    return float(np.dot(mesh.area, _collapse_channels(w1 * w2)))


def norm_U(mesh: TriMesh, u) -> float:
    return float(np.sqrt(inner_U(mesh, u, u)))


def norm_V(mesh: TriMesh, v) -> float:
    return float(np.sqrt(inner_V(mesh, v, v)))


def norm_W(mesh: TriMesh, w) -> float:
    return float(np.sqrt(inner_W(mesh, w, w)))


@dataclass(frozen=True)
class OperatorBundle:
    """Sparse-matrix forms of the operators plus the diagonal weight matrices.

    ``D`` is (E, T), ``G2`` is (3T, T) with row ``3 t + i`` holding the
    stencil at corner ``i`` of triangle ``t``.  The adjoints satisfy
    ``D_star = mass_U^-1 D^T mass_V`` and ``G2_star = mass_U^-1 G2^T mass_W``
    by construction.
    """

    D: sparse.csr_matrix
    D_star: sparse.csr_matrix
    G2: sparse.csr_matrix
    G2_star: sparse.csr_matrix
    mass_U: sparse.csr_matrix
    mass_V: sparse.csr_matrix
    mass_W: sparse.csr_matrix

    @property
    def n_triangles(self) -> int:
        return self.D.shape[1]

    @property
    def n_edges(self) -> int:
        return self.D.shape[0]

    def apply_D(self, u: np.ndarray) -> np.ndarray:
        return self.D @ u

    def apply_D_star(self, v: np.ndarray) -> np.ndarray:
        return self.D_star @ v

    def apply_G2(self, u: np.ndarray) -> np.ndarray:
        flat = self.G2 @ u
        return flat.reshape((self.n_triangles, 3) + u.shape[1:])

    def apply_G2_star(self, w: np.ndarray) -> np.ndarray:
        flat = w.reshape((3 * self.n_triangles,) + w.shape[2:])
        return self.G2_star @ flat


def assemble_sparse_operators(mesh: TriMesh) -> OperatorBundle:
    """Materialize the difference operators and inner-product weights as sparse matrices.

    The matrix applications agree entrywise with the matrix-free functions,
    and rows of ``D`` for boundary edges (and of ``G2`` for inactive
    stencils) are structurally empty, so those outputs are exact zeros.
    """
    T, E = mesh.n_triangles, mesh.n_edges

    interior = np.flatnonzero(~mesh.is_boundary_edge)
    rows = np.repeat(interior, 2)
    cols = mesh.edge_triangles[interior].reshape(-1)
    data = mesh.sgn[interior].reshape(-1).astype(np.float64)
    D = sparse.coo_matrix((data, (rows, cols)), shape=(E, T)).tocsr()

    act = mesh.stencil_active
    t_idx, slot_idx = np.nonzero(act)
    srows = 3 * t_idx + slot_idx
    g_rows = np.concatenate([srows, srows, srows])
    g_cols = np.concatenate(
        [
            mesh.stencil_tau_plus[act],
            t_idx,
            mesh.stencil_tau_minus[act],
        ]
    )
    g_data = np.concatenate(
        [
            np.ones(srows.size),
            np.full(srows.size, -2.0),
            np.ones(srows.size),
        ]
    )
    G2 = sparse.coo_matrix((g_data, (g_rows, g_cols)), shape=(3 * T, T)).tocsr()

    mass_U = sparse.diags(mesh.area).tocsr()
    mass_V = sparse.diags(mesh.edge_len).tocsr()
    mass_W = sparse.diags(np.repeat(mesh.area, 3)).tocsr()
    inv_mass_U = sparse.diags(1.0 / mesh.area)

    D_star = (inv_mass_U @ D.T @ mass_V).tocsr()
    G2_star = (inv_mass_U @ G2.T @ mass_W).tocsr()

    return OperatorBundle(
        D=D,
        D_star=D_star,
        G2=G2,
        G2_star=G2_star,
        mass_U=mass_U,
        mass_V=mass_V,
        mass_W=mass_W,
    )


@dataclass(frozen=True)
class OperatorCheckReport:
    """Residuals of the operator self-checks, all expected below ``tol``."""

    residuals: dict
    tol: float
    seconds: float

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values())

    @property
    def passed(self) -> bool:
        return all(r <= self.tol for r in self.residuals.values())

    def lines(self) -> list:
        width = max(len(k) for k in self.residuals)
        out = [f"{k:<{width}}  {v!r}" for k, v in self.residuals.items()]
        status = "OK" if self.passed else "FAIL"
        out.append(f"max residual {self.max_residual:.3e} (tol {self.tol:.1e}): {status}")
        return out


def _rel(diff: float, scale: float) -> float:
    return diff / scale if scale > 0.0 else diff


def check_operators(
    mesh: TriMesh, trials: int = 100, seed: int = 0, tol: float = 1e-10
) -> OperatorCheckReport:
    """Run adjointness, kernel, boundary, orientation and matrix-agreement checks.

    Random 3-channel fields are drawn from a seeded generator; residuals are
    relative where a natural scale exists and raw absolute values for the
    exact-zero checks.
    """
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    ops = assemble_sparse_operators(mesh)
    flipped = flip_edge_orientations(mesh)
    res = {
        "adjoint_D": 0.0,
        "adjoint_G2": 0.0,
        "kernel_D_const": 0.0,
        "kernel_G2_const": 0.0,
        "boundary_D_zero": 0.0,
        "inactive_G2_zero": 0.0,
        "orientation_D_sign": 0.0,
        "orientation_G2_bitwise": 0.0,
        "matrix_D": 0.0,
        "matrix_D_star": 0.0,
        "matrix_G2": 0.0,
        "matrix_G2_star": 0.0,
    }

    const = np.full((mesh.n_triangles, 3), 1.73)
    res["kernel_D_const"] = float(np.abs(apply_D(mesh, const)).max())
    res["kernel_G2_const"] = float(np.abs(apply_grad2(mesh, const)).max())

    for _ in range(trials):
        u = rng.standard_normal((mesh.n_triangles, 3))
        v = rng.standard_normal((mesh.n_edges, 3))
        w = rng.standard_normal((mesh.n_triangles, 3, 3))

        du = apply_D(mesh, u)
        dsv = apply_D_star(mesh, v)
        lhs = inner_V(mesh, du, v)
        rhs = inner_U(mesh, u, dsv)
        res["adjoint_D"] = max(
            res["adjoint_D"], _rel(abs(lhs - rhs), norm_U(mesh, u) * norm_V(mesh, v))
        )

        g2u = apply_grad2(mesh, u)
        g2sw = apply_grad2_star(mesh, w)
        lhs = inner_W(mesh, g2u, w)
        rhs = inner_U(mesh, u, g2sw)
        res["adjoint_G2"] = max(
            res["adjoint_G2"], _rel(abs(lhs - rhs), norm_U(mesh, u) * norm_W(mesh, w))
        )

        if mesh.is_boundary_edge.any():
            res["boundary_D_zero"] = max(
                res["boundary_D_zero"],
                float(np.abs(du[mesh.is_boundary_edge]).max()),
            )
        if (~mesh.stencil_active).any():
            res["inactive_G2_zero"] = max(
                res["inactive_G2_zero"],
                float(np.abs(g2u[~mesh.stencil_active]).max()),
            )

        res["orientation_D_sign"] = max(
            res["orientation_D_sign"],
            float(np.abs(apply_D(flipped, u) + du).max()),
        )
        res["orientation_G2_bitwise"] = max(
            res["orientation_G2_bitwise"],
            float(np.abs(apply_grad2(flipped, u) - g2u).max()),
        )

        res["matrix_D"] = max(
            res["matrix_D"],
            _rel(float(np.abs(ops.apply_D(u) - du).max()), max(1.0, float(np.abs(du).max()))),
        )
        res["matrix_D_star"] = max(
            res["matrix_D_star"],
            _rel(
                float(np.abs(ops.apply_D_star(v) - dsv).max()),
                max(1.0, float(np.abs(dsv).max())),
            ),
        )
        res["matrix_G2"] = max(
            res["matrix_G2"],
            _rel(
                float(np.abs(ops.apply_G2(u) - g2u).max()),
                max(1.0, float(np.abs(g2u).max())),
            ),
        )
        res["matrix_G2_star"] = max(
            res["matrix_G2_star"],
            _rel(
                float(np.abs(ops.apply_G2_star(w) - g2sw).max()),
                max(1.0, float(np.abs(g2sw).max())),
            ),
        )

    return OperatorCheckReport(
        residuals=res, tol=tol, seconds=time.perf_counter() - start
    )
