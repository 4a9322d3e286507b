"""The convergence laboratory.

Mesh-family builders, manufactured-solution studies (interpolation and
full Galerkin solves), least-squares rate fitting, the linear patch test
and the local-element round-trip sweeps, with CSV/JSON reporting.
"""

import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__, kernels
from .assembly import assemble, combined_local_p1
from .coefficients import CoefficientField
from .dofmap import apply_dirichlet_inhomogeneous, build_dof_map
from .elements import (ConstraintError, ElementError, check_constraints,
                       element_kind, facet_values_of, solve_facet_batch,
                       solve_local_from_facet_values)
from .manufactured import ManufacturedSolution
from .mesh import (Mesh, corner_bits, apply_affine_map, build_perturbed_quad_mesh_2d,
                   build_tensor_grid, slot_corner_table)
from .norms import p1_errors, solution_errors
from .simplex import kuhn_subdivide
from .solver import solve_cg

__all__ = [
    "RateFit",
    "StudyRow",
    "StudyReport",
    "fit_rate",
    "L2_WINDOW",
    "H1_WINDOW",
    "shear_matrix",
    "make_mesh_family",
    "build_random_parallelotope_mesh",
    "batched_interpolation",
    "interpolation_study",
    "solve_study",
    "run_patch_test",
    "unisolvency_roundtrip",
]

# Fitted rates use the finest FIT_POINTS meshes (two finest pairs).
FIT_POINTS = 3
# Errors below this floor mean "exactly reproduced"; rate fits are meaningless.
ERROR_FLOOR = 1e-12
L2_WINDOW = (1.9, 2.1)
H1_WINDOW = (0.9, 1.1)


@dataclass
class RateFit:
    slope: float
    pairwise: np.ndarray


def fit_rate(h, e) -> RateFit:
    """Least-squares slope of log e against log h, plus pairwise slopes."""
    h = np.asarray(h, dtype=float)
    e = np.asarray(e, dtype=float)
    if len(h) < 2 or len(h) != len(e):
        raise ValueError("need at least two (h, e) pairs")
    if np.any(h <= 0.0) or np.any(e <= 0.0):
        raise ValueError("mesh sizes and errors must be positive")
    lh, le = np.log(h), np.log(e)
    slope = float(np.polyfit(lh, le, 1)[0])
    return RateFit(slope, np.diff(le) / np.diff(lh))


@dataclass
class StudyRow:
    h: float
    n_dofs: int
    err_l2: float
    err_h1: float
    iters: int
    seconds: float


@dataclass
class StudyReport:
    rows: list[StudyRow]
    config: dict = field(default_factory=dict)
    rate_l2: float | None = None
    rate_h1: float | None = None
    pairwise_l2: list = field(default_factory=list)
    pairwise_h1: list = field(default_factory=list)
    degenerate: bool = False  # errors at the exact-reproduction floor

    def fit_rates(self):
        h = np.array([r.h for r in self.rows])
        e2 = np.array([r.err_l2 for r in self.rows])
        e1 = np.array([r.err_h1 for r in self.rows])
        if np.any(np.diff(h) >= 0.0):
            raise ValueError("mesh sizes must be strictly decreasing")
        if len(h) < 2 or np.any(e2 <= ERROR_FLOOR) or np.any(e1 <= ERROR_FLOOR):
            self.degenerate = True
            self.rate_l2 = self.rate_h1 = None
            return
        tail = slice(-min(FIT_POINTS, len(h)), None)
        self.rate_l2 = fit_rate(h[tail], e2[tail]).slope
        self.rate_h1 = fit_rate(h[tail], e1[tail]).slope
        self.pairwise_l2 = list(fit_rate(h, e2).pairwise)
        self.pairwise_h1 = list(fit_rate(h, e1).pairwise)

    def rates_in_windows(self, l2_window=L2_WINDOW, h1_window=H1_WINDOW) -> bool:
        if self.degenerate or self.rate_l2 is None or self.rate_h1 is None:
            return False
        return (l2_window[0] <= self.rate_l2 <= l2_window[1]
                and h1_window[0] <= self.rate_h1 <= h1_window[1])

    def write_csv(self, path) -> None:
        lines = ["h,n_dofs,err_l2,err_h1_broken,iters,seconds"]
        for r in self.rows:
            lines.append(f"{r.h:.12e},{r.n_dofs},{r.err_l2:.12e},"
                         f"{r.err_h1:.12e},{r.iters},{r.seconds:.3f}")
        with open(path, "w", encoding="ascii") as fh:
            fh.write("\n".join(lines) + "\n")

    def to_json_dict(self) -> dict:
        return {
            "config": self.config,
            "rows": [asdict(r) for r in self.rows],
            "rates": {
                "l2": self.rate_l2,
                "h1_broken": self.rate_h1,
                "pairwise_l2": [float(v) for v in self.pairwise_l2],
                "pairwise_h1": [float(v) for v in self.pairwise_h1],
                "degenerate": self.degenerate,
            },
            "kernels_backend": kernels.BACKEND,
            "version": __version__,
        }

    def write_json(self, path) -> None:
        with open(path, "w", encoding="ascii") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def shear_matrix(dim: int) -> np.ndarray:
    """The fixed published shear per dimension: ones with 1/4 superdiagonal."""
    mat = np.eye(dim)
    for i in range(dim - 1):
        mat[i, i + 1] = 0.25
    return mat


def make_mesh_family(dim: int, ns, family: str = "tensor", delta: float = 0.2,
                     seed: int = 0):
    """Cube-cell mesh sequence plus the geometry matrix (None if unmapped).

    families: tensor (unit box), shear (fixed affine image), perturb2d
    (jittered general quads, dimension 2 only).
    """
    ns = list(ns)
    if family == "tensor":
        return [build_tensor_grid(dim, n) for n in ns], None
    if family == "shear":
        mat = shear_matrix(dim)
        return [apply_affine_map(build_tensor_grid(dim, n), mat) for n in ns], mat
    if family == "perturb2d":
        if dim != 2:
            raise ValueError("perturb2d meshes exist only in dimension 2")
        return [build_perturbed_quad_mesh_2d(n, delta, seed) for n in ns], None
    raise ValueError(f"unknown mesh family {family!r}")


def build_random_parallelotope_mesh(dim: int, count: int, seed: int) -> Mesh:
    """`count` disjoint random parallelotopes (affine cube images), one mesh.

    The perturbation I + U/(2d) with |U_ij| <= 1 keeps every cell
    uniformly nondegenerate, so the mesh is valid for any seed.
    """
    rng = np.random.default_rng(seed)
    mats = np.eye(dim)[None] + rng.uniform(-1.0, 1.0, (count, dim, dim)) / (2.0 * dim)
    shifts = rng.uniform(-1.0, 1.0, (count, 1, dim))
    corners = np.einsum("cb,nbd->ncd", corner_bits(dim), mats) + shifts
    vertices = corners.reshape(-1, dim)
    cells = np.arange(count << dim, dtype=np.intp).reshape(count, 1 << dim)
    return Mesh(dim, vertices, cells)


def batched_interpolation(mesh: Mesh, u) -> np.ndarray:
    """Per-cell interpolant coefficients [a0, a], all cells at once.

    Facet values are vertex means; their admissibility (exact on
    combinatorial cubes) is asserted, not assumed.
    """
    table = slot_corner_table(mesh.dim)
    corner_u = np.asarray(u(mesh.vertices), dtype=float)[mesh.cells]
    fv = corner_u[:, table].mean(axis=2)
    pair_sums = fv[:, 0::2] + fv[:, 1::2]
    res = np.abs(pair_sums - pair_sums[:, :1]).max(initial=0.0)
    scale = max(1.0, float(np.abs(fv).max(initial=0.0)))
    if res > 1e-10 * scale:
        raise ConstraintError(res)
    mu = mesh.facet_barycenters[mesh.cell_facets]
    return solve_facet_batch(mu, fv)


def interpolation_study(exact: ManufacturedSolution, meshes, quad_k: int = 4,
                        config=None) -> StudyReport:
    """Interpolate the exact solution on each mesh and report error rates."""
    rows = []
    for mesh in meshes:
        t0 = time.perf_counter()
        combined = batched_interpolation(mesh, exact.u)
        err_l2, err_h1 = p1_errors(mesh, combined, exact, quad_k)
        n_interior = int((~mesh.vertex_is_boundary).sum())
        rows.append(StudyRow(mesh.h, n_interior, float(err_l2), float(err_h1),
                             0, time.perf_counter() - t0))
    report = StudyReport(rows, config or {})
    report.fit_rates()
    return report


def solve_study(coeff, exact, meshes, element="p1nc", quad_k: int = 4,
                rel_tol: float = 1e-10, max_iters=None, jacobi: bool = False,
                config=None) -> StudyReport:
    """Full pipeline per mesh: dofs, assemble, CG solve, broken-norm errors.

    `meshes` are cube-cell meshes; simplex-family elements get the Kuhn
    subdivision of each.  Rate fitting needs at least three meshes.
    """
    if len(meshes) < 3:
        raise ValueError("solve_study needs at least 3 meshes to fit rates")
    kind = element_kind(element) if isinstance(element, str) else element
    rows = []
    for mesh in meshes:
        t0 = time.perf_counter()
        work_mesh = kuhn_subdivide(mesh) if kind.mesh_family == "simplex" else mesh
        dofs = build_dof_map(work_mesh, kind)
        system = assemble(work_mesh, dofs, coeff, quad=quad_k)
        x, iters = solve_cg(system, rel_tol=rel_tol, max_iters=max_iters, jacobi=jacobi)
        err_l2, err_h1 = solution_errors(dofs, x, exact, quad_k)
        rows.append(StudyRow(work_mesh.h, dofs.n_dofs, float(err_l2), float(err_h1),
                             iters, time.perf_counter() - t0))
    report = StudyReport(rows, config or {})
    report.fit_rates()
    return report


def run_patch_test(mesh: Mesh, element: str = "p1nc",
                   rel_tol: float = 1e-12) -> float:
    """Solve with constant A, f = 0 and linear boundary data; return the max
    per-cell deviation of the discrete solution's [a0, a] from the exact line.

    Nonconforming consistency makes the interpolant the exact discrete
    solution, so the deviation is solver-tolerance small on any valid mesh.
    """
    kind = element_kind(element)
    if kind.family == "rotated":
        raise ElementError(
            "the patch test compares per-cell linear coefficients and "
            "supports the P1-family elements (p1nc, cr)")
    dim = mesh.dim
    a_const = np.eye(dim) + 0.2 * (np.ones((dim, dim)) - np.eye(dim))
    coeff = CoefficientField(dim, "patch", a_const=a_const, c_const=0.0)
    alpha0 = 0.75
    alpha = (1.0 + np.arange(dim)) / dim

    def g(pts):
        return alpha0 + np.asarray(pts) @ alpha

    work_mesh = kuhn_subdivide(mesh) if kind.mesh_family == "simplex" else mesh
    dofs = build_dof_map(work_mesh, kind, bc="facet_mean_dirichlet")
    lift = apply_dirichlet_inhomogeneous(work_mesh, dofs, g)
    system = assemble(work_mesh, dofs, coeff, quad=2, lift=lift)
    x, _ = solve_cg(system, rel_tol=rel_tol)
    combined = combined_local_p1(dofs, x, lift)
    exact = np.r_[alpha0, alpha]
    return float(np.abs(combined - exact[None]).max())


def unisolvency_roundtrip(dim: int, count: int, seed: int,
                          perturbation: float = 1e-3) -> dict:
    """Round-trip sweep over random cells and random admissible facet values.

    Solves facet values -> local polynomial -> facet values on `count`
    random parallelotopes, then breaks one constraint per cell by
    `perturbation` and counts rejections.  Returns the summary statistics.
    """
    mesh = build_random_parallelotope_mesh(dim, count, seed)
    rng = np.random.default_rng(seed + 1)
    minus = rng.uniform(-1.0, 1.0, (count, dim))
    sums = rng.uniform(-1.0, 1.0, count)
    values = np.empty((count, 2 * dim))
    values[:, 0::2] = minus
    values[:, 1::2] = sums[:, None] - minus
    slot = rng.integers(0, 2 * dim, count)

    max_rel = 0.0
    max_residual = 0.0
    rejected = 0
    for cid in range(count):
        fv = values[cid]
        p = solve_local_from_facet_values(mesh, cid, fv)
        back = facet_values_of(p, mesh, cid)
        scale = max(1.0, float(np.abs(fv).max()))
        max_rel = max(max_rel, float(np.abs(back - fv).max()) / scale)
        max_residual = max(max_residual, float(np.abs(check_constraints(back)).max()) / scale)
        bad = fv.copy()
        bad[slot[cid]] += perturbation
        try:
            solve_local_from_facet_values(mesh, cid, bad)
        except ConstraintError:
            rejected += 1
    return {
        "count": count,
        "max_roundtrip_rel": max_rel,
        "max_constraint_residual": max_residual,
        "rejected": rejected,
    }
