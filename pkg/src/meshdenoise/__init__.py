"""Feature-preserving triangular mesh denoising.

Filters the face-normal field with a higher-order sparse energy (quadratic
fidelity, group-L1 on first-difference deviations, group-L0 on second
differences) solved by ADMM, then reconstructs vertex positions from the
filtered normals.
"""

from . import errors, primitives
from .errors import (
    ConnectivityMismatchError,
    DegenerateFaceError,
    InconsistentOrientationError,
    IndexOutOfRangeError,
    LinearSolveFailure,
    MeshDenoiseError,
    MeshError,
    NonFiniteError,
    NonManifoldEdgeError,
    ParseError,
    SolverError,
    UnsupportedFaceError,
)
from .io_formats import (
    DIRECTION_MODES,
    MetricsReport,
    NoiseSpec,
    add_noise,
    compute_metrics,
    read_mesh,
    vertex_normals,
    write_mesh,
    write_noise_meta,
)
from .mesh import (
    LineStencil,
    TriMesh,
    build_mesh,
    face_normals,
    flip_edge_orientations,
    mean_edge_length,
)
from .operators import (
    OperatorBundle,
    OperatorCheckReport,
    apply_D,
    apply_D_star,
    apply_grad,
    apply_grad2,
    apply_grad2_star,
    assemble_sparse_operators,
    check_operators,
    inner_U,
    inner_V,
    inner_W,
    norm_U,
    norm_V,
    norm_W,
)
from .solver import (
    THRESHOLD_MODES,
    Diagnostics,
    IterationRecord,
    SolverParams,
    SolverState,
    energy,
    group_hard_threshold,
    group_soft_shrink,
    n_subproblem,
    p_subproblem,
    q_subproblem,
    solve_normal_filter,
    update_multipliers,
)
from .vertex_update import VertexUpdateParams, planarity_residual, update_vertices

__version__ = "0.1.0"

__all__ = [
    "ConnectivityMismatchError",
    "DegenerateFaceError",
    "Diagnostics",
    "DIRECTION_MODES",
    "InconsistentOrientationError",
    "IndexOutOfRangeError",
    "IterationRecord",
    "LineStencil",
    "LinearSolveFailure",
    "MeshDenoiseError",
    "MeshError",
    "MetricsReport",
    "NoiseSpec",
    "NonFiniteError",
    "NonManifoldEdgeError",
    "OperatorBundle",
    "OperatorCheckReport",
    "ParseError",
    "SolverError",
    "SolverParams",
    "SolverState",
    "THRESHOLD_MODES",
    "TriMesh",
    "UnsupportedFaceError",
    "VertexUpdateParams",
    "add_noise",
    "apply_D",
    "apply_D_star",
    "apply_grad",
    "apply_grad2",
    "apply_grad2_star",
    "assemble_sparse_operators",
    "build_mesh",
    "check_operators",
    "compute_metrics",
    "energy",
    "errors",
    "face_normals",
    "flip_edge_orientations",
    "group_hard_threshold",
    "group_soft_shrink",
    "inner_U",
    "inner_V",
    "inner_W",
    "mean_edge_length",
    "n_subproblem",
    "norm_U",
    "norm_V",
    "norm_W",
    "p_subproblem",
    "planarity_residual",
    "primitives",
    "q_subproblem",
    "read_mesh",
    "solve_normal_filter",
    "update_multipliers",
    "update_vertices",
    "vertex_normals",
    "write_mesh",
    "write_noise_meta",
]
