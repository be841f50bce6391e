"""Command-line interface: denoise, add-noise, metrics, check-operators.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import MeshDenoiseError, MeshError, ParseError, SolverError
from .io_formats import (
    DIRECTION_MODES,
    MetricsReport,
    NoiseSpec,
    add_noise,
    compute_metrics,
    read_mesh,
    write_mesh,
    write_noise_meta,
)
from .mesh import build_mesh, face_normals
from .operators import check_operators
from .solver import THRESHOLD_MODES, SolverParams, solve_normal_filter
from .vertex_update import VertexUpdateParams, update_vertices

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3

_SOLVER_DEFAULTS = SolverParams()
_VERTEX_DEFAULTS = VertexUpdateParams()
_NOISE_DEFAULTS = NoiseSpec()


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; 2 is reserved for data errors.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_io_args(p, output=True):
    p.add_argument("-i", "--input", required=True, help="input mesh file (.obj or .off)")
    if output:
        p.add_argument("-o", "--output", required=True, help="output mesh file (.obj or .off)")
    p.add_argument(
        "--triangulate",
        action="store_true",
        help="fan-triangulate polygonal faces on read instead of rejecting them",
    )
    p.add_argument(
        "--config",
        default=None,
        help="key=value file supplying defaults for any flag of this subcommand "
        "(explicit flags override the file)",
    )


def _add_solver_args(p):
    p.add_argument(
        "--beta",
        type=float,
        default=_SOLVER_DEFAULTS.beta,
        help="fidelity weight: strength of the quadratic term keeping filtered "
        "normals close to the input normals",
    )
    p.add_argument(
        "--alpha1",
        type=float,
        default=_SOLVER_DEFAULTS.alpha1,
        help="first-order weight: group-L1 penalty on the change of per-edge "
        "normal jumps relative to the input",
    )
    p.add_argument(
        "--alpha2",
        type=float,
        default=_SOLVER_DEFAULTS.alpha2,
        help="sparsity weight: group-L0 penalty on per-stencil second "
        "differences of the filtered normals",
    )
    p.add_argument(
        "--rho1",
        type=float,
        default=_SOLVER_DEFAULTS.rho1,
        help="augmented-Lagrangian penalty of the first-order splitting constraint",
    )
    p.add_argument(
        "--rho2",
        type=float,
        default=_SOLVER_DEFAULTS.rho2,
        help="augmented-Lagrangian penalty of the second-order splitting constraint",
    )
    p.add_argument(
        "--max-iter",
        type=int,
        default=_SOLVER_DEFAULTS.max_iter,
        help="maximum ADMM iterations",
    )
    p.add_argument(
        "--primal-tol",
        type=float,
        default=_SOLVER_DEFAULTS.primal_tol,
        help="stop when the normalized primal residuals fall below this value",
    )
    p.add_argument(
        "--threshold-mode",
        choices=THRESHOLD_MODES,
        default=_SOLVER_DEFAULTS.threshold_mode,
        help="hard-threshold level of the sparsity update: 'prox' = "
        "sqrt(2*alpha2/rho2) (exact proximal threshold), 'ratio' = alpha2/rho2",
    )


def build_parser():
    parser = _Parser(
        prog="meshdenoise",
        description="Feature-preserving triangular mesh denoising by "
        "higher-order sparse filtering of the face-normal field.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    subparsers = {}

    fmt = argparse.ArgumentDefaultsHelpFormatter

    p = sub.add_parser(
        "denoise",
        formatter_class=fmt,
        help="filter face normals and reconstruct vertex positions",
    )
    _add_io_args(p)
    _add_solver_args(p)
    p.add_argument(
        "--vertex-iterations",
        type=int,
        default=_VERTEX_DEFAULTS.iterations,
        help="vertex reconstruction sweeps",
    )
    p.add_argument(
        "--vertex-step",
        type=float,
        default=_VERTEX_DEFAULTS.step,
        help="vertex reconstruction damping step in (0, 1]",
    )
    p.add_argument(
        "--diagnostics",
        default=None,
        help="write per-iteration solver diagnostics CSV to this path",
    )
    p.set_defaults(func=_cmd_denoise)
    subparsers["denoise"] = p

    p = sub.add_parser(
        "add-noise",
        formatter_class=fmt,
        help="corrupt a mesh with seeded Gaussian vertex noise",
    )
    _add_io_args(p)
    p.add_argument(
        "--sigma-rel",
        type=float,
        default=_NOISE_DEFAULTS.sigma_rel,
        help="noise standard deviation as a multiple of the mean edge length",
    )
    p.add_argument(
        "--direction-mode",
        choices=DIRECTION_MODES,
        default=_NOISE_DEFAULTS.direction_mode,
        help="displacement directions: uniform random unit vectors or "
        "area-weighted vertex normals",
    )
    p.add_argument("--seed", type=int, default=_NOISE_DEFAULTS.seed, help="RNG seed")
    p.set_defaults(func=_cmd_add_noise)
    subparsers["add-noise"] = p

    p = sub.add_parser(
        "metrics",
        formatter_class=fmt,
        help="compare a mesh against a reference with identical connectivity",
    )
    _add_io_args(p, output=False)
    p.add_argument("-r", "--reference", required=True, help="ground-truth mesh file")
    p.set_defaults(func=_cmd_metrics)
    subparsers["metrics"] = p

    p = sub.add_parser(
        "check-operators",
        formatter_class=fmt,
        help="run the operator self-checks (adjointness, kernels, orientation, "
        "matrix agreement) on a mesh",
    )
    _add_io_args(p, output=False)
    p.add_argument("--trials", type=int, default=100, help="random field pairs per check")
    p.add_argument("--seed", type=int, default=0, help="RNG seed")
    p.add_argument("--tol", type=float, default=1e-10, help="pass/fail residual bound")
    p.set_defaults(func=_cmd_check_operators)
    subparsers["check-operators"] = p

    return parser, subparsers


def _parse_bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _load_config(path: Path) -> dict:
    values = {}
    with open(path, "r") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ParseError("expected key=value", path, lineno)
            key, _, value = line.partition("=")
            values[key.strip().replace("-", "_")] = value.strip()
    return values


def _apply_config(parser, sub, argv, args):
    """Re-parse argv with config-file values installed as defaults."""
    try:
        values = _load_config(Path(args.config))
    except OSError as exc:
        print(f"meshdenoise: error: cannot read config: {exc}", file=sys.stderr)
        return None, EXIT_DATA
    except ParseError as exc:
        print(f"meshdenoise: error: {exc}", file=sys.stderr)
        return None, EXIT_DATA

    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, raw in values.items():
        action = actions.get(key)
        if action is None or key in ("help", "config"):
            sub.error(f"unknown config key {key!r}")
        if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
            try:
                defaults[key] = _parse_bool(raw)
            except ValueError as exc:
                sub.error(str(exc))
        elif action.type is not None:
            try:
                defaults[key] = action.type(raw)
            except (TypeError, ValueError):
                sub.error(f"bad value for {key!r}: {raw!r}")
        else:
            defaults[key] = raw
        if action.choices is not None and defaults[key] not in action.choices:
            sub.error(f"bad value for {key!r}: {raw!r}")
    sub.set_defaults(**defaults)
    return argv, EXIT_OK


def _cmd_denoise(args) -> int:
    mesh = read_mesh(args.input, triangulate=args.triangulate)
    params = SolverParams(
        beta=args.beta,
        alpha1=args.alpha1,
        alpha2=args.alpha2,
        rho1=args.rho1,
        rho2=args.rho2,
        max_iter=args.max_iter,
        primal_tol=args.primal_tol,
        threshold_mode=args.threshold_mode,
    )
    N0 = face_normals(mesh)
    N, diagnostics = solve_normal_filter(mesh, N0, params)
    vparams = VertexUpdateParams(iterations=args.vertex_iterations, step=args.vertex_step)
    positions = update_vertices(mesh, N, vparams)
    write_mesh(args.output, build_mesh(positions, mesh.triangles))
    if args.diagnostics:
        diagnostics.write_csv(args.diagnostics)
    last = diagnostics.records[-1]
    status = "converged" if diagnostics.converged else "max-iter"
    print(
        f"denoise: {len(diagnostics)} iterations ({status}), "
        f"final residuals r_P={last.r_P_rel:.3e} r_Q={last.r_Q_rel:.3e}, "
        f"wrote {args.output}"
    )
    return EXIT_OK


def _cmd_add_noise(args) -> int:
    mesh = read_mesh(args.input, triangulate=args.triangulate)
    spec = NoiseSpec(
        sigma_rel=args.sigma_rel, direction_mode=args.direction_mode, seed=args.seed
    )
    noisy = add_noise(mesh, spec)
    write_mesh(args.output, noisy)
    write_noise_meta(str(args.output) + ".meta", spec, mesh, source=args.input)
    print(f"add-noise: wrote {args.output} (+.meta)")
    return EXIT_OK


def _cmd_metrics(args) -> int:
    mesh = read_mesh(args.input, triangulate=args.triangulate)
    reference = read_mesh(args.reference, triangulate=args.triangulate)
    report: MetricsReport = compute_metrics(mesh, reference)
    for line in report.lines():
        print(line)
    return EXIT_OK


def _cmd_check_operators(args) -> int:
    mesh = read_mesh(args.input, triangulate=args.triangulate)
    report = check_operators(mesh, trials=args.trials, seed=args.seed, tol=args.tol)
    for line in report.lines():
        print(line)
    return EXIT_OK if report.passed else EXIT_NUMERICAL


def main(argv=None) -> int:
    parser, subparsers = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        sub = subparsers[args.subcommand]
        new_argv, status = _apply_config(parser, sub, argv, args)
        if status != EXIT_OK:
            return status
        args = parser.parse_args(new_argv)

    try:
        return args.func(args)
    except (ValueError,) as exc:
        print(f"meshdenoise: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverError as exc:
        print(f"meshdenoise: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (MeshError, ParseError, MeshDenoiseError) as exc:
        print(f"meshdenoise: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"meshdenoise: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
