"""Independent reference implementations used as test oracles.

Everything here is deliberately slow and structurally different from the
library code: signs are recomputed from triangle vertex cycles, inner
products and adjoints are plain Python loops, and the proximal maps are
checked against dense one-dimensional searches.
"""

from __future__ import annotations

import numpy as np


def sign_in_triangle(tri, a, b):
    """+1 if the directed edge a->b appears in the CCW cycle of ``tri``."""
    t = list(tri)
    for i in range(3):
        if t[i] == a and t[(i + 1) % 3] == b:
            return 1
        if t[i] == b and t[(i + 1) % 3] == a:
            return -1
    raise AssertionError(f"edge ({a},{b}) not in triangle {tri}")


def triangle_area(positions, tri):
    p0, p1, p2 = (np.asarray(positions[i], dtype=float) for i in tri)
    return 0.5 * np.linalg.norm(np.cross(p1 - p0, p2 - p0))


def edge_length(positions, edge):
    a, b = edge
    return float(np.linalg.norm(np.asarray(positions[a]) - np.asarray(positions[b])))


def jump_reference(mesh, u):
    """Edge jumps computed from triangle cycles (independent of stored signs)."""
    u = np.asarray(u, dtype=float)
    out = np.zeros((mesh.n_edges,) + u.shape[1:])
    for e in range(mesh.n_edges):
        if mesh.is_boundary_edge[e]:
            continue
        a, b = mesh.edges[e]
        total = np.zeros(u.shape[1:])
        for t in mesh.edge_triangles[e]:
            total = total + u[t] * sign_in_triangle(mesh.triangles[t], a, b)
        out[e] = total
    return out


def d_star_reference(mesh, v):
    """True adjoint of the jump operator, from first principles."""
    v = np.asarray(v, dtype=float)
    out = np.zeros((mesh.n_triangles,) + v.shape[1:])
    for t in range(mesh.n_triangles):
        tri = mesh.triangles[t]
        acc = np.zeros(v.shape[1:])
        for e in mesh.triangle_edges[t]:
            if mesh.is_boundary_edge[e]:
                continue
            a, b = mesh.edges[e]
            s = sign_in_triangle(tri, a, b)
            acc = acc + v[e] * s * edge_length(mesh.vertices, mesh.edges[e])
        out[t] = acc / triangle_area(mesh.vertices, tri)
    return out


def grad2_reference(mesh, u):
    """Second differences via the two-jump identity rather than u+ - 2u + u-."""
    u = np.asarray(u, dtype=float)
    jumps = jump_reference(mesh, u)
    out = np.zeros((mesh.n_triangles, 3) + u.shape[1:])
    for t, row in enumerate(mesh.stencils):
        for i, st in enumerate(row):
            if not st.active:
                continue
            ap, bp = mesh.edges[st.e_plus]
            am, bm = mesh.edges[st.e_minus]
            sp = sign_in_triangle(mesh.triangles[st.tau_plus], ap, bp)
            sm = sign_in_triangle(mesh.triangles[st.tau_minus], am, bm)
            out[t, i] = jumps[st.e_plus] * sp + jumps[st.e_minus] * sm
    return out


def inner_u_reference(mesh, u1, u2):
    total = 0.0
    for t in range(mesh.n_triangles):
        total += float(np.sum(np.asarray(u1[t]) * np.asarray(u2[t]))) * triangle_area(
            mesh.vertices, mesh.triangles[t]
        )
    return total


def inner_v_reference(mesh, v1, v2):
    total = 0.0
    for e in range(mesh.n_edges):
        total += float(np.sum(np.asarray(v1[e]) * np.asarray(v2[e]))) * edge_length(
            mesh.vertices, mesh.edges[e]
        )
    return total


def inner_w_reference(mesh, w1, w2):
    total = 0.0
    for t in range(mesh.n_triangles):
        s = triangle_area(mesh.vertices, mesh.triangles[t])
        for i in range(3):
            total += float(np.sum(np.asarray(w1[t][i]) * np.asarray(w2[t][i]))) * s
    return total


def soft_prox_search(a, lam, rho, iterations=160):
    """Golden-section minimizer of lam*|p| + (rho/2)(p - a)^2, vectorized.

    The minimizer is collinear with ``a`` with magnitude in [0, |a|], so a
    one-dimensional search over the magnitude is exact.  Costs are evaluated
    in extended precision: a derivative-free search can only locate a
    quadratic minimum to sqrt(eps), which for float64 (~1.5e-8) would sit at
    the comparison tolerance itself.
    """
    a = np.asarray(a, dtype=float)
    mag = np.abs(a).astype(np.longdouble)
    lam = np.longdouble(lam)
    rho = np.longdouble(rho)
    lo = np.zeros_like(mag)
    hi = mag.copy()
    phi = (np.sqrt(np.longdouble(5.0)) - 1.0) / 2.0

    def cost(t):
        return lam * t + 0.5 * rho * (t - mag) ** 2

    c = hi - phi * (hi - lo)
    d = lo + phi * (hi - lo)
    fc, fd = cost(c), cost(d)
    for _ in range(iterations):
        take_left = fc < fd
        hi = np.where(take_left, d, hi)
        lo = np.where(take_left, lo, c)
        c = hi - phi * (hi - lo)
        d = lo + phi * (hi - lo)
        fc, fd = cost(c), cost(d)
    t = (0.5 * (lo + hi)).astype(float)
    return np.sign(a) * t


def hard_prox_enumerate(a, alpha, rho):
    """Exact minimizer of alpha*[q != 0] + (rho/2)(q - a)^2.

    The only candidate minimizers are 0 and a; ties go to 0.
    """
    a = np.asarray(a, dtype=float)
    keep_cost = alpha
    zero_cost = 0.5 * rho * a * a
    return np.where(keep_cost < zero_cost, a, 0.0)


def rand_face_field(mesh, rng, channels=3):
    if channels is None:
        return rng.standard_normal(mesh.n_triangles)
    return rng.standard_normal((mesh.n_triangles, channels))


def rand_edge_field(mesh, rng, channels=3):
    if channels is None:
        return rng.standard_normal(mesh.n_edges)
    return rng.standard_normal((mesh.n_edges, channels))


def rand_stencil_field(mesh, rng, channels=3):
    if channels is None:
        return rng.standard_normal((mesh.n_triangles, 3))
    return rng.standard_normal((mesh.n_triangles, 3, channels))


def angular_error_deg(n1, n2):
    dots = np.clip(np.sum(n1 * n2, axis=1), -1.0, 1.0)
    return np.degrees(np.arccos(dots))
