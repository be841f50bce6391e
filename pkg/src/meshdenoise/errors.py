"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class MeshDenoiseError(Exception):
    """Base class for every error raised by this package."""


class MeshError(MeshDenoiseError):
    """Invalid mesh data."""


class DegenerateFaceError(MeshError):
    """A face has zero area, repeated vertices, or duplicates another face."""


class NonManifoldEdgeError(MeshError):
    """An edge is incident to more than two triangles."""


class InconsistentOrientationError(MeshError):
    """Two triangles traverse a shared edge in the same direction."""


class IndexOutOfRangeError(MeshError):
    """A face references a vertex index outside the vertex array."""


class ParseError(MeshDenoiseError):
    """Malformed mesh file."""

    def __init__(self, message: str, path=None, line: int | None = None):
        self.path = path
        self.line = line
        prefix = ""
        if path is not None:
            prefix = f"{path}:"
            if line is not None:
                prefix += f"{line}:"
            prefix += " "
        elif line is not None:
            prefix = f"line {line}: "
        super().__init__(prefix + message)


class UnsupportedFaceError(ParseError):
    """Non-triangular face encountered and triangulation was not requested."""


class ConnectivityMismatchError(MeshDenoiseError):
    """Two meshes that should share connectivity do not."""


class SolverError(MeshDenoiseError):
    """Numerical failure inside the solver."""


class LinearSolveFailure(SolverError):
    """The sparse linear system could not be solved to tolerance.

    Carries the relative residual (when available) and, when raised from
    inside the iteration loop, the diagnostics collected so far.
    """

    def __init__(self, message: str, residual: float | None = None, diagnostics=None):
        super().__init__(message)
        self.residual = residual
        self.diagnostics = diagnostics


class NonFiniteError(SolverError):
    """A NaN or Inf appeared in a solver iterate."""

    def __init__(self, message: str, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics
