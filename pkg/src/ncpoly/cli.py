"""Command-line front end.

Commands: mesh-check, element-props, interp-study, solve-study, patch-test.
Exit codes partition outcomes: 0 all gated checks pass, 2 usage error,
3 I/O failure, 4 numerical failure (including gated checks out of window).
Reports are written regardless of pass or fail.
"""

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .assembly import assemble, write_matrix_market, write_rhs_vector
from .dofmap import build_dof_map
from .elements import ELEMENTS, ElementError, element_kind, mvp_check, reference_basis
from .femspace import AssemblyError
from .manufactured import COEFF_PRESETS, make_problem, product_sine_solution
from .mesh import MeshError, validate_midpoint_coincidence
from .solver import SolverError
from .study import (interpolation_study, make_mesh_family, run_patch_test,
                    solve_study, unisolvency_roundtrip)

EXIT_PASS = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_NUMERICAL = 4

COMMANDS = ("mesh-check", "element-props", "interp-study", "solve-study", "patch-test")

DEFAULTS = {
    "dim": 2,
    "n": "4,8,16",
    "element": "p1nc",
    "coeff": "laplace",
    "mesh": "tensor",
    "delta": 0.2,
    "seed": 0,
    "quad_k": 4,
    "tol": 1e-10,
    "max_iters": 0,  # 0: solver default of 10 * n_dofs
    "out": "ncpoly-out",
    "dump_system": False,
}


@dataclass
class RunConfig:
    command: str
    dim: int
    ns: list[int]
    element: str
    coeff: str
    mesh: str
    delta: float
    seed: int
    quad_k: int
    tol: float
    max_iters: int | None
    out: Path
    dump_system: bool
    provenance: dict = field(default_factory=dict)


class UsageError(ValueError):
    pass


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ncpoly",
        description="Nonconforming polyhedral finite element laboratory")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--dim", type=int, help="space dimension (default 2)")
    parser.add_argument("--n", help="comma-separated subdivision counts, e.g. 4,8,16")
    parser.add_argument("--element", choices=sorted(ELEMENTS))
    parser.add_argument("--coeff", choices=sorted(COEFF_PRESETS))
    parser.add_argument("--mesh", choices=("tensor", "shear", "perturb2d"))
    parser.add_argument("--delta", type=float, help="perturb2d jitter fraction")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--quad-k", dest="quad_k", type=int,
                        help="Gauss points per axis (default 4)")
    parser.add_argument("--tol", type=float, help="CG relative tolerance")
    parser.add_argument("--max-iters", dest="max_iters", type=int,
                        help="CG iteration cap (default 10 * n_dofs)")
    parser.add_argument("--out", help="output directory (default ncpoly-out)")
    parser.add_argument("--config", help="flat key = value config file")
    parser.add_argument("--dump-system", dest="dump_system", action="store_true",
                        default=None, help="also dump system.mtx / rhs.txt")
    parser.add_argument("--version", action="version", version=f"ncpoly {__version__}")
    return parser


def _read_config_file(path: str) -> dict:
    values = {}
    try:
        text = Path(path).read_text(encoding="ascii")
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in DEFAULTS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = value
    return values


def _coerce(key: str, value):
    if isinstance(value, str):
        kind = type(DEFAULTS[key])
        if kind is bool:
            return value.lower() in ("1", "true", "yes", "on")
        if kind in (int, float):
            return kind(value)
    return value


def parse_config(argv) -> RunConfig:
    """Resolve a RunConfig with precedence flags > config file > defaults."""
    parser = _build_parser()
    args = parser.parse_args(argv)
    merged = dict(DEFAULTS)
    if args.config:
        merged.update(_read_config_file(args.config))
    for key in DEFAULTS:
        flag = getattr(args, key, None)
        if flag is not None:
            merged[key] = flag
    merged = {key: _coerce(key, value) for key, value in merged.items()}

    try:
        ns = [int(tok) for tok in str(merged["n"]).split(",") if tok.strip()]
    except ValueError as exc:
        raise UsageError(f"bad --n list {merged['n']!r}: {exc}") from exc
    if not ns or any(b <= a for a, b in zip(ns, ns[1:])):
        raise UsageError(f"--n must be a strictly increasing list, got {ns}")
    if merged["dim"] < 2:
        raise UsageError(f"--dim must be >= 2, got {merged['dim']}")
    kind = element_kind(merged["element"])
    if not kind.supports_dim(merged["dim"]):
        dims = "any d >= 2" if kind.dims is None else f"d in {sorted(kind.dims)}"
        raise UsageError(
            f"element {kind.name} supports {dims}, not dim={merged['dim']}")
    if merged["mesh"] == "perturb2d" and merged["dim"] != 2:
        raise UsageError("--mesh perturb2d requires --dim 2")
    if merged["mesh"] == "perturb2d" and kind.mesh_family != "cube":
        raise UsageError(f"--mesh perturb2d does not support element {kind.name}")
    if kind.family == "rotated" and merged["mesh"] == "perturb2d":
        raise UsageError(f"element {kind.name} needs affine (parallelotope) cells")
    if args.command == "solve-study" and len(ns) < 3:
        raise UsageError("solve-study needs at least 3 mesh sizes to fit rates")
    if args.command == "patch-test" and kind.family == "rotated":
        raise UsageError(f"patch-test supports p1nc and cr, not {kind.name}")
    if merged["quad_k"] < 1:
        raise UsageError("--quad-k must be >= 1")

    provenance = {k: merged[k] for k in DEFAULTS if k not in ("out", "dump_system")}
    provenance["command"] = args.command
    return RunConfig(
        command=args.command, dim=merged["dim"], ns=ns, element=merged["element"],
        coeff=merged["coeff"], mesh=merged["mesh"], delta=merged["delta"],
        seed=merged["seed"], quad_k=merged["quad_k"], tol=merged["tol"],
        max_iters=merged["max_iters"] or None, out=Path(merged["out"]),
        dump_system=bool(merged["dump_system"]), provenance=provenance)


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w", encoding="ascii") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _geometry_note(matrix) -> list | None:
    return None if matrix is None else np.asarray(matrix).tolist()


def _cmd_mesh_check(config: RunConfig) -> int:
    meshes, matrix = make_mesh_family(config.dim, config.ns, config.mesh,
                                      config.delta, config.seed)
    entries = []
    passed = True
    for n, mesh in zip(config.ns, meshes):
        deviation = float(validate_midpoint_coincidence(mesh).max())
        n_interior = int((~mesh.vertex_is_boundary).sum())
        ok = deviation <= 1e-12
        passed &= ok
        if n_interior == 0:
            print(f"warning: n={n} grid has no interior vertices (0 dofs)")
        entries.append({
            "n": n, "h": mesh.h, "n_vertices": mesh.n_vertices,
            "n_cells": mesh.n_cells, "n_facets": mesh.n_facets,
            "n_interior_vertices": n_interior,
            "midpoint_deviation": deviation, "pass": ok,
        })
        print(f"mesh-check dim={config.dim} n={n}: midpoint deviation "
              f"{deviation:.2e} -> {'ok' if ok else 'FAIL'}")
    payload = {"config": config.provenance, "geometry_matrix": _geometry_note(matrix),
               "meshes": entries, "pass": passed, "version": __version__}
    _write_json(config.out / "report.json", payload)
    return EXIT_PASS if passed else EXIT_NUMERICAL


def _cmd_element_props(config: RunConfig) -> int:
    kind = element_kind(config.element)
    report: dict = {"element": kind.name, "dim": config.dim}
    passed = True
    if kind.family == "p1nc":
        stats = unisolvency_roundtrip(config.dim, 1000, config.seed)
        ok = (stats["max_roundtrip_rel"] <= 1e-10
              and stats["rejected"] == stats["count"])
        passed &= ok
        report["unisolvency"] = {**stats, "pass": ok}
        print(f"element-props p1nc dim={config.dim}: roundtrip "
              f"{stats['max_roundtrip_rel']:.2e}, rejected "
              f"{stats['rejected']}/{stats['count']} -> {'ok' if ok else 'FAIL'}")
    else:
        basis = reference_basis(kind, config.dim)
        gap = float(np.abs(basis.dof_matrix() - np.eye(basis.n_basis)).max())
        ok = gap <= 1e-12
        passed &= ok
        report["duality_gap"] = gap
        print(f"element-props {kind.name} dim={config.dim}: duality gap "
              f"{gap:.2e} -> {'ok' if ok else 'FAIL'}")
        if kind.mesh_family == "cube":
            dev = float(mvp_check(kind, config.dim).max())
            report["mvp_max_deviation"] = dev
            if kind.theta_ell in (1, 2):
                ok = dev <= 1e-12
                passed &= ok
                print(f"  mean value property deviation {dev:.2e} -> "
                      f"{'ok' if ok else 'FAIL'}")
            else:
                print(f"  mean value property deviation {dev:.6f} (expected > 0)")
    report["pass"] = passed
    payload = {"config": config.provenance, **report, "version": __version__}
    _write_json(config.out / "report.json", payload)
    return EXIT_PASS if passed else EXIT_NUMERICAL


def _cmd_interp_study(config: RunConfig) -> int:
    meshes, matrix = make_mesh_family(config.dim, config.ns, config.mesh,
                                      config.delta, config.seed)
    exact = product_sine_solution(config.dim, matrix)
    report = interpolation_study(exact, meshes, config.quad_k,
                                 config=config.provenance)
    report.write_csv(config.out / "report.csv")
    report.write_json(config.out / "report.json")
    ok = report.rates_in_windows()
    print(f"interp-study dim={config.dim}: L2 rate {report.rate_l2}, "
          f"broken-H1 rate {report.rate_h1} -> {'ok' if ok else 'FAIL'}")
    return EXIT_PASS if ok else EXIT_NUMERICAL


def _cmd_solve_study(config: RunConfig) -> int:
    meshes, matrix = make_mesh_family(config.dim, config.ns, config.mesh,
                                      config.delta, config.seed)
    coeff, exact = make_problem(config.coeff, config.dim, matrix)
    report = solve_study(coeff, exact, meshes, element=config.element,
                         quad_k=config.quad_k, rel_tol=config.tol,
                         max_iters=config.max_iters, config=config.provenance)
    report.write_csv(config.out / "report.csv")
    report.write_json(config.out / "report.json")
    if config.dump_system:
        from .simplex import kuhn_subdivide

        kind = element_kind(config.element)
        mesh = meshes[-1]
        if kind.mesh_family == "simplex":
            mesh = kuhn_subdivide(mesh)
        dofs = build_dof_map(mesh, kind)
        system = assemble(mesh, dofs, coeff, quad=config.quad_k)
        write_matrix_market(system, config.out / "system.mtx")
        write_rhs_vector(system, config.out / "rhs.txt")
    ok = report.rates_in_windows()
    print(f"solve-study dim={config.dim} element={config.element} "
          f"coeff={config.coeff} mesh={config.mesh}: L2 rate {report.rate_l2}, "
          f"broken-H1 rate {report.rate_h1} -> {'ok' if ok else 'FAIL'}")
    return EXIT_PASS if ok else EXIT_NUMERICAL


def _cmd_patch_test(config: RunConfig) -> int:
    meshes, _ = make_mesh_family(config.dim, config.ns[:1], config.mesh,
                                 config.delta, config.seed)
    deviation = run_patch_test(meshes[0], element=config.element,
                               rel_tol=min(config.tol, 1e-12))
    ok = deviation <= 1e-8
    payload = {"config": config.provenance, "max_coefficient_deviation": deviation,
               "pass": ok, "version": __version__}
    _write_json(config.out / "report.json", payload)
    print(f"patch-test dim={config.dim} element={config.element} "
          f"mesh={config.mesh}: max coefficient deviation {deviation:.3e} "
          f"-> {'ok' if ok else 'FAIL'}")
    return EXIT_PASS if ok else EXIT_NUMERICAL


def run(config: RunConfig) -> int:
    """Execute a resolved configuration; returns the process exit code."""
    handlers = {
        "mesh-check": _cmd_mesh_check,
        "element-props": _cmd_element_props,
        "interp-study": _cmd_interp_study,
        "solve-study": _cmd_solve_study,
        "patch-test": _cmd_patch_test,
    }
    config.out.mkdir(parents=True, exist_ok=True)
    return handlers[config.command](config)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv:
        _build_parser().print_help()
        return EXIT_USAGE
    try:
        config = parse_config(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # argparse already reported
        return int(exc.code or 0)
    try:
        return run(config)
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (SolverError, AssemblyError, MeshError, ElementError,
            np.linalg.LinAlgError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
