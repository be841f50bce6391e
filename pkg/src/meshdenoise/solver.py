"""ADMM solver for the higher-order sparse normal-filter energy.

The energy filtered here combines a quadratic fidelity term keeping the
normals near the observed field, a group-L1 penalty on the change of the
per-edge normal jumps relative to the observation, and a group-L0 penalty
demanding sparsity of the per-stencil second differences.  Splitting
variables P (edge jumps) and Q (second differences) turn the problem into a
sphere-projected sparse SPD solve plus two closed-form proximal updates.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import splu

from .errors import LinearSolveFailure, NonFiniteError
from .mesh import TriMesh
from .operators import (
    OperatorBundle,
    apply_D,
    apply_grad2,
    assemble_sparse_operators,
    inner_U,
)

THRESHOLD_MODES = ("prox", "ratio")

_LINEAR_TOL = 1e-10


@dataclass(frozen=True)
class SolverParams:
    """Weights, penalties and stopping controls for the normal filter.

    ``beta`` scales the fidelity term, ``alpha1`` the group-L1 penalty on
    first-difference deviations, ``alpha2`` the group-L0 penalty on second
    differences; ``rho1``/``rho2`` are the positive penalty weights of the
    two splitting constraints.

    ``threshold_mode`` selects the hard-threshold level of the Q update:
    ``"prox"`` uses sqrt(2 * alpha2 / rho2), the exact minimizer of the
    unweighted L0 proximal problem (default); ``"ratio"`` uses
    alpha2 / rho2 directly.

    The defaults were frozen after tuning on the cube and icosphere
    regression benchmarks (see configs/default.cfg and the regression
    tests).  ``max_iter`` is deliberately small: with fixed penalties the
    hard-threshold support eventually flips in a limit cycle, and filtered
    quality on smoothly curved surfaces peaks while the primal residuals
    are still on their initial descent.
    """

    beta: float = 10.0
    alpha1: float = 0.005
    alpha2: float = 5.0
    rho1: float = 0.5
    rho2: float = 10.0
    max_iter: int = 11
    primal_tol: float = 1e-6
    threshold_mode: str = "prox"

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be > 0")
        if self.alpha1 < 0 or self.alpha2 < 0:
            raise ValueError("alpha1 and alpha2 must be >= 0")
        if not (self.rho1 > 0 and self.rho2 > 0):
            raise ValueError("rho1 and rho2 must be > 0")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not self.primal_tol > 0:
            raise ValueError("primal_tol must be > 0")
        if self.threshold_mode not in THRESHOLD_MODES:
            raise ValueError(
                f"threshold_mode must be one of {THRESHOLD_MODES}, "
                f"got {self.threshold_mode!r}"
            )

    def hard_threshold(self) -> float:
        """Threshold applied by the Q update, per ``threshold_mode``."""
        if self.threshold_mode == "prox":
            return float(np.sqrt(2.0 * self.alpha2 / self.rho2))
        return self.alpha2 / self.rho2


@dataclass
class SolverState:
    """Iterates of the ADMM loop.

    ``N`` is the current (T, 3) unit normal field, ``P`` the (E, 3) edge
    split variable, ``Q`` the (T, 3, 3) stencil split variable, and
    ``lambda_P``/``lambda_Q`` the matching multipliers.
    """

    N: np.ndarray
    P: np.ndarray
    Q: np.ndarray
    lambda_P: np.ndarray
    lambda_Q: np.ndarray
    iteration: int = 0


@dataclass(frozen=True)
class IterationRecord:
    """One row of solver diagnostics.

    ``r_P``/``r_Q`` are the raw primal residual norms; ``r_P_rel``/``r_Q_rel``
    are the field-normalized values driving the stopping test.
    """

    iteration: int
    energy: float
    r_P: float
    r_Q: float
    dN: float
    seconds: float
    r_P_rel: float
    r_Q_rel: float


@dataclass
class Diagnostics:
    """Per-iteration solver records plus the termination flag."""

    records: list = field(default_factory=list)
    converged: bool = False

    CSV_HEADER = "iter,energy,r_P,r_Q,dN,seconds"

    def append(self, record: IterationRecord) -> None:
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    def csv_text(self) -> str:
        lines = [self.CSV_HEADER]
        for r in self.records:
            lines.append(
                f"{r.iteration},{r.energy!r},{r.r_P!r},{r.r_Q!r},"
                f"{r.dN!r},{r.seconds!r}"
            )
        return "\n".join(lines) + "\n"

    def write_csv(self, target) -> None:
        """Write the fixed 6-column CSV (iter,energy,r_P,r_Q,dN,seconds)."""
        text = self.csv_text()
        if hasattr(target, "write"):
            target.write(text)
        else:
            with open(target, "w", newline="\n") as fh:
                fh.write(text)


def group_soft_shrink(x, threshold: float) -> np.ndarray:
    """Shrink the channel vector at each site toward zero by ``threshold``.

    The channel axis is the last one; sites whose vector length is at most
    the threshold map to exact zero, and a zero threshold is the identity.
    """
    x = np.asarray(x, dtype=np.float64)
    n = np.sqrt(np.sum(x * x, axis=-1, keepdims=True))
    safe = np.where(n > 0.0, n, 1.0)
    scale = np.where(n > threshold, 1.0 - threshold / safe, 0.0)
    return x * scale


def group_hard_threshold(x, threshold: float) -> np.ndarray:
    """Zero the channel vector at each site whose length is at most ``threshold``.

    Surviving vectors are passed through unchanged (bitwise).
    """
    x = np.asarray(x, dtype=np.float64)
    n = np.sqrt(np.sum(x * x, axis=-1, keepdims=True))
    return np.where(n > threshold, x, 0.0)


def _as_channels(u) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    return u[:, None] if u.ndim == 1 else u


def energy(mesh: TriMesh, N, N0, params: SolverParams, ops: OperatorBundle | None = None) -> float:
    """Objective value at ``N``: fidelity + group-L1 on jump changes + group-L0 count.

    The L0 term counts active stencils whose channel vector of second
    differences is nonzero (unweighted count).
    """
    N = _as_channels(N)
    N0 = _as_channels(N0)
    if N.shape != N0.shape:
        raise ValueError(f"shape mismatch: {N.shape} vs {N0.shape}")
    diff = N - N0
    fidelity = 0.5 * params.beta * inner_U(mesh, diff, diff)

    jumps = ops.apply_D(diff) if ops is not None else apply_D(mesh, diff)
    jump_norm = np.sqrt(np.sum(jumps * jumps, axis=-1))
    l1 = params.alpha1 * float(np.dot(mesh.edge_len, jump_norm))

    g2 = ops.apply_G2(N) if ops is not None else apply_grad2(mesh, N)
    group_sq = np.sum(g2 * g2, axis=-1)
    l0 = params.alpha2 * float(np.count_nonzero(group_sq > 0.0))
    return fidelity + l1 + l0


class _NormalSystem:
    """Factorized SPD system of the N update; constant across iterations."""

    def __init__(self, ops: OperatorBundle, params: SolverParams):
        A = (
            params.beta * ops.mass_U
            + params.rho1 * (ops.D.T @ ops.mass_V @ ops.D)
            + params.rho2 * (ops.G2.T @ ops.mass_W @ ops.G2)
        ).tocsc()
        self.matrix = A
        try:
            self._lu = splu(A)
        except RuntimeError as exc:
            raise LinearSolveFailure(f"sparse factorization failed: {exc}") from exc

    def solve(self, b: np.ndarray) -> np.ndarray:
        x = self._lu.solve(b)
        scale = float(np.linalg.norm(b))
        residual = float(np.linalg.norm(self.matrix @ x - b))
        rel = residual / scale if scale > 0.0 else residual
        if not rel <= _LINEAR_TOL:
            raise LinearSolveFailure(
                f"linear solve residual {rel:.3e} exceeds {_LINEAR_TOL:.1e}",
                residual=rel,
            )
        return x


def n_subproblem(
    mesh: TriMesh,
    ops: OperatorBundle,
    state: SolverState,
    N0: np.ndarray,
    params: SolverParams,
    system: _NormalSystem | None = None,
) -> np.ndarray:
    """Solve the quadratic N update and project each row to the unit sphere.

    Rows that solve to the zero vector (a measure-zero event) keep the
    previous iterate's normal.
    """
    if system is None:
        system = _NormalSystem(ops, params)
    DN0 = ops.apply_D(N0)
    rhs_edge = DN0 + state.P - state.lambda_P / params.rho1
    rhs_stencil = state.Q - state.lambda_Q / params.rho2
    T = mesh.n_triangles
    b = (
        params.beta * (ops.mass_U @ N0)
        + params.rho1 * (ops.D.T @ (ops.mass_V @ rhs_edge))
        + params.rho2 * (ops.G2.T @ (ops.mass_W @ rhs_stencil.reshape(3 * T, -1)))
    )
    N = system.solve(b)
    norms = np.sqrt(np.sum(N * N, axis=1, keepdims=True))
    return np.where(norms > 0.0, N / np.where(norms > 0.0, norms, 1.0), state.N)


def p_subproblem(
    mesh: TriMesh,
    state: SolverState,
    N0: np.ndarray,
    params: SolverParams,
    DN: np.ndarray | None = None,
    DN0: np.ndarray | None = None,
) -> np.ndarray:
    """Group soft-shrinkage of the first-difference deviation, per interior edge.

    The threshold ``alpha1 / rho1`` is edge-length independent because both
    the L1 term and the penalty carry the same edge-length weight.  Boundary
    edges stay exactly zero.
    """
    if DN is None:
        DN = apply_D(mesh, state.N)
    if DN0 is None:
        DN0 = apply_D(mesh, N0)
    x = (DN - DN0) + state.lambda_P / params.rho1
    out = group_soft_shrink(x, params.alpha1 / params.rho1)
    out[mesh.is_boundary_edge] = 0.0
    return out


def q_subproblem(
    mesh: TriMesh,
    state: SolverState,
    params: SolverParams,
    G2N: np.ndarray | None = None,
) -> np.ndarray:
    """Group hard threshold of the second differences, per active stencil.

    A group exactly at the threshold is zeroed.  Inactive stencils stay
    exactly zero.
    """
    if G2N is None:
        G2N = apply_grad2(mesh, state.N)
    x = G2N + state.lambda_Q / params.rho2
    out = group_hard_threshold(x, params.hard_threshold())
    out[~mesh.stencil_active] = 0.0
    return out


def update_multipliers(
    mesh: TriMesh,
    state: SolverState,
    N0: np.ndarray,
    params: SolverParams,
    DN: np.ndarray | None = None,
    DN0: np.ndarray | None = None,
    G2N: np.ndarray | None = None,
):
    """Dual ascent on both splitting constraints; returns the new multipliers."""
    if DN is None:
        DN = apply_D(mesh, state.N)
    if DN0 is None:
        DN0 = apply_D(mesh, N0)
    if G2N is None:
        G2N = apply_grad2(mesh, state.N)
    lam_P = state.lambda_P + params.rho1 * ((DN - DN0) - state.P)
    lam_Q = state.lambda_Q + params.rho2 * (G2N - state.Q)
    return lam_P, lam_Q


def _vec_norm_V(mesh: TriMesh, v: np.ndarray) -> float:
    return float(np.sqrt(np.dot(mesh.edge_len, np.sum(v * v, axis=-1))))


def _vec_norm_W(mesh: TriMesh, w: np.ndarray) -> float:
    return float(np.sqrt(np.dot(mesh.area, np.sum(w * w, axis=(1, 2)))))


def _relative(residual: float, floor: float, *scales: float) -> float:
    # floor guards the 0/0 case where residual and fields are both roundoff
    # relative to the input data; such residuals count as converged.
    denom = max(*scales, floor)
    return residual / denom if denom > 0.0 else 0.0


def solve_normal_filter(
    mesh: TriMesh,
    N0: np.ndarray,
    params: SolverParams,
    ops: OperatorBundle | None = None,
    callback=None,
):
    """Filter a unit face-normal field by ADMM on the split energy.

    Parameters
    ----------
    mesh : TriMesh
    N0 : (T, 3) float64
        Unit normal field of the observed (noisy) mesh.
    params : SolverParams
    ops : OperatorBundle, optional
        Reused if already assembled.
    callback : callable, optional
        Called with the :class:`SolverState` after each iteration
        (instrumentation hook; the state must not be mutated).

    Returns
    -------
    (N, diagnostics) : ((T, 3) ndarray, Diagnostics)
        Final unit normal field and the per-iteration records.  The loop
        stops when the field-normalized primal residuals fall below
        ``params.primal_tol`` or after ``params.max_iter`` iterations.

    Raises
    ------
    LinearSolveFailure
        The N-update system could not be solved to tolerance (partial
        diagnostics attached).
    NonFiniteError
        A NaN or Inf appeared in an iterate (partial diagnostics attached).
    """
    N0 = np.asarray(N0, dtype=np.float64)
    if N0.shape != (mesh.n_triangles, 3):
        raise ValueError(
            f"N0 must have shape ({mesh.n_triangles}, 3), got {N0.shape}"
        )
    if ops is None:
        ops = assemble_sparse_operators(mesh)

    DN0 = ops.apply_D(N0)
    G2N0 = ops.apply_G2(N0)
    scale0 = 1e-8 * max(
        float(np.sqrt(inner_U(mesh, N0, N0))),
        _vec_norm_V(mesh, DN0),
        _vec_norm_W(mesh, G2N0),
    )
    state = SolverState(
        N=N0.copy(),
        P=np.zeros((mesh.n_edges, 3)),
        Q=G2N0.copy(),
        lambda_P=np.zeros((mesh.n_edges, 3)),
        lambda_Q=np.zeros((mesh.n_triangles, 3, 3)),
    )
    diagnostics = Diagnostics()

    try:
        system = _NormalSystem(ops, params)
    except LinearSolveFailure as exc:
        exc.diagnostics = diagnostics
        raise

    for k in range(1, params.max_iter + 1):
        tic = time.perf_counter()
        N_prev = state.N
        try:
            state.N = n_subproblem(mesh, ops, state, N0, params, system=system)
        except LinearSolveFailure as exc:
            exc.diagnostics = diagnostics
            raise
        DN = ops.apply_D(state.N)
        G2N = ops.apply_G2(state.N)
        state.P = p_subproblem(mesh, state, N0, params, DN=DN, DN0=DN0)
        state.Q = q_subproblem(mesh, state, params, G2N=G2N)
        state.lambda_P, state.lambda_Q = update_multipliers(
            mesh, state, N0, params, DN=DN, DN0=DN0, G2N=G2N
        )
        state.iteration = k

        for name, arr in (
            ("N", state.N),
            ("P", state.P),
            ("Q", state.Q),
            ("lambda_P", state.lambda_P),
            ("lambda_Q", state.lambda_Q),
        ):
            if not np.isfinite(arr).all():
                raise NonFiniteError(
                    f"non-finite values in {name} at iteration {k}",
                    diagnostics=diagnostics,
                )

        res_P = (DN - DN0) - state.P
        res_Q = G2N - state.Q
        r_P = _vec_norm_V(mesh, res_P)
        r_Q = _vec_norm_W(mesh, res_Q)
        r_P_rel = _relative(
            r_P, scale0, _vec_norm_V(mesh, DN - DN0), _vec_norm_V(mesh, state.P)
        )
        r_Q_rel = _relative(
            r_Q, scale0, _vec_norm_W(mesh, G2N), _vec_norm_W(mesh, state.Q)
        )
        dN = float(np.sqrt(inner_U(mesh, state.N - N_prev, state.N - N_prev)))
        diagnostics.append(
            IterationRecord(
                iteration=k,
                energy=energy(mesh, state.N, N0, params, ops=ops),
                r_P=r_P,
                r_Q=r_Q,
                dN=dN,
                seconds=time.perf_counter() - tic,
                r_P_rel=r_P_rel,
                r_Q_rel=r_Q_rel,
            )
        )
        if callback is not None:
            callback(state)
        if max(r_P_rel, r_Q_rel) < params.primal_tol:
            diagnostics.converged = True
            break

    return state.N, diagnostics
