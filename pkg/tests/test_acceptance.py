"""Acceptance criteria, one test per criterion, each printing PASS/FAIL.

Run with `pytest tests/test_acceptance.py -v -s` to see the summary lines.
Mesh sequences: n in {4, 8, 16, 32} for d in {2, 3} and n in {4, 8, 16}
for d = 4; rates are fitted over the two finest pairs and must land in
[1.9, 2.1] (L2) and [0.9, 1.1] (broken H1).
"""

import time

import numpy as np
import pytest

from ncpoly.assembly import assemble, jump_mean_check
from ncpoly.coefficients import laplace_field
from ncpoly.dofmap import build_dof_map
from ncpoly.elements import mvp_check
from ncpoly.manufactured import make_problem, product_sine_solution
from ncpoly.mesh import build_perturbed_quad_mesh_2d, build_tensor_grid, midpoint_deviations
from ncpoly.solver import solve_cg, solve_dense
from ncpoly.study import (H1_WINDOW, L2_WINDOW, build_random_parallelotope_mesh,
                          interpolation_study, make_mesh_family, run_patch_test,
                          solve_study, unisolvency_roundtrip)

MESH_NS = {2: [4, 8, 16, 32], 3: [4, 8, 16, 32], 4: [4, 8, 16]}
PERTURB_SEED = 7


def report(criterion, passed, detail):
    status = "PASS" if passed else "FAIL"
    print(f"\n[acceptance {criterion}] {status}: {detail}")
    assert passed, f"criterion {criterion}: {detail}"


@pytest.fixture(scope="module")
def tensor_families():
    return {d: make_mesh_family(d, MESH_NS[d], "tensor")[0] for d in (2, 3, 4)}


@pytest.fixture(scope="module")
def shear_families():
    return {d: make_mesh_family(d, MESH_NS[d], "shear") for d in (2, 3, 4)}


def in_windows(rep):
    return (L2_WINDOW[0] <= rep.rate_l2 <= L2_WINDOW[1]
            and H1_WINDOW[0] <= rep.rate_h1 <= H1_WINDOW[1])


def test_criterion_1_midpoint_coincidence():
    t0 = time.perf_counter()
    worst = 0.0
    for dim in (2, 3, 4, 5, 6):
        mesh = build_random_parallelotope_mesh(dim, 1000, seed=100 + dim)
        worst = max(worst, float(midpoint_deviations(mesh.cell_corners()).max()))
    elapsed = time.perf_counter() - t0
    report("1 midpoint-coincidence", worst <= 1e-12 and elapsed < 5.0,
           f"max relative deviation {worst:.2e} over 5000 cells (d=2..6), "
           f"{elapsed:.2f}s")


def test_criterion_2_unisolvency():
    t0 = time.perf_counter()
    worst = 0.0
    all_rejected = True
    for dim in (2, 3, 4, 5, 6):
        stats = unisolvency_roundtrip(dim, 1000, seed=200 + dim,
                                      perturbation=2e-6)
        worst = max(worst, stats["max_roundtrip_rel"])
        all_rejected &= stats["rejected"] == stats["count"]
    elapsed = time.perf_counter() - t0
    report("2 unisolvency", worst <= 1e-10 and all_rejected and elapsed < 5.0,
           f"max roundtrip error {worst:.2e}, inadmissible rejection "
           f"{'100%' if all_rejected else 'INCOMPLETE'}, {elapsed:.2f}s")


def test_criterion_3_dof_count_identity():
    ok = True
    for dim in (2, 3, 4, 5):
        for n in (2, 3, 4):
            mesh = build_tensor_grid(dim, n)
            dofs = build_dof_map(mesh, "p1nc")
            system = assemble(mesh, dofs, laplace_field(dim), quad=2)
            ok &= system.n_dofs == (n - 1) ** dim
    report("3 dof-count-identity", ok,
           "assembled system size == (n-1)^d for (d, n) in {2..5} x {2,3,4}")


def test_criterion_4_mean_value_property():
    t0 = time.perf_counter()
    dssy_worst = max(float(mvp_check(kind, dim).max())
                     for kind in ("dssy1", "dssy2") for dim in (2, 3))
    rq1 = mvp_check("rq1-point", 2)
    offending = rq1[-1]  # the rotated non-P1 generator
    rq1_ok = np.abs(offending - 1.0 / 3.0).max() <= 1e-12
    elapsed = time.perf_counter() - t0
    report("4 mean-value-property",
           dssy_worst <= 1e-12 and rq1_ok and elapsed < 1.0,
           f"DSSY deviation {dssy_worst:.2e}; rotated-Q1 point-DOF deviation "
           f"= 1/3 on offending facets; {elapsed:.2f}s")


def test_criterion_5_interpolation_rates(tensor_families):
    t0 = time.perf_counter()
    results = {}
    ok = True
    for dim in (2, 3, 4):
        exact = product_sine_solution(dim)
        rep = interpolation_study(exact, tensor_families[dim])
        results[dim] = (rep.rate_l2, rep.rate_h1)
        ok &= in_windows(rep)
    elapsed = time.perf_counter() - t0
    detail = ", ".join(f"d={d}: L2 {r[0]:.3f} H1 {r[1]:.3f}"
                       for d, r in results.items())
    report("5 interpolation-estimate", ok and elapsed < 120.0,
           f"{detail}; {elapsed:.1f}s")


def test_criterion_6_galerkin_rates(tensor_families, shear_families):
    t0 = time.perf_counter()
    lines = []
    ok = True
    for dim in (2, 3, 4):
        for preset in ("laplace", "varcoef"):
            coeff, exact = make_problem(preset, dim)
            rep = solve_study(coeff, exact, tensor_families[dim])
            ok &= in_windows(rep)
            lines.append(f"d={dim} {preset} tensor: {rep.rate_l2:.3f}/{rep.rate_h1:.3f}")
            meshes, matrix = shear_families[dim]
            coeff_s, exact_s = make_problem(preset, dim, matrix)
            rep_s = solve_study(coeff_s, exact_s, meshes)
            ok &= in_windows(rep_s)
            lines.append(f"d={dim} {preset} shear: {rep_s.rate_l2:.3f}/{rep_s.rate_h1:.3f}")
    elapsed = time.perf_counter() - t0
    report("6 galerkin-convergence", ok and elapsed < 600.0,
           "; ".join(lines) + f"; {elapsed:.1f}s")


def test_criterion_7_general_quad_robustness():
    meshes, _ = make_mesh_family(2, MESH_NS[2], "perturb2d", delta=0.2,
                                 seed=PERTURB_SEED)
    lines = []
    ok = True
    for preset in ("laplace", "varcoef"):
        coeff, exact = make_problem(preset, 2)
        rep = solve_study(coeff, exact, meshes)
        ok &= in_windows(rep)
        lines.append(f"{preset}: {rep.rate_l2:.3f}/{rep.rate_h1:.3f}")
    report("7 general-quad-robustness", ok,
           f"perturb2d delta=0.2 seed={PERTURB_SEED}: " + "; ".join(lines))


def test_criterion_8_patch_test():
    worst = 0.0
    for dim in (2, 3, 4):
        meshes, _ = make_mesh_family(dim, [3], "shear")
        worst = max(worst, run_patch_test(meshes[0], element="p1nc"))
    report("8 patch-test", worst <= 1e-8,
           f"max per-cell coefficient deviation {worst:.2e} on sheared meshes, "
           "d in {2,3,4}")


def test_criterion_9_solver_oracle():
    cases = []
    for dim, n, family in [(2, 4, "tensor"), (2, 8, "tensor"), (2, 16, "shear"),
                           (2, 20, "tensor"), (3, 3, "shear"), (3, 5, "tensor"),
                           (3, 7, "tensor"), (4, 3, "tensor"), (4, 4, "shear")]:
        meshes, matrix = make_mesh_family(dim, [n], family)
        coeff, _ = make_problem("varcoef", dim, matrix)
        cases.append((meshes[0], coeff))
    quads = build_perturbed_quad_mesh_2d(12, 0.2, seed=PERTURB_SEED)
    cases.append((quads, make_problem("helmholtz-like", 2)[0]))
    worst = 0.0
    for mesh, coeff in cases:
        dofs = build_dof_map(mesh, "p1nc")
        assert dofs.n_dofs <= 400
        system = assemble(mesh, dofs, coeff)
        x, _ = solve_cg(system, rel_tol=1e-12)
        oracle = solve_dense(system)
        worst = max(worst, float(np.abs(x - oracle).max() / np.abs(oracle).max()))
    report("9 solver-oracle", worst <= 1e-8,
           f"CG vs dense Cholesky on {len(cases)} meshes (n_dofs <= 400): "
           f"max relative gap {worst:.2e}")


def test_criterion_10_crouzeix_raviart_baseline(tensor_families):
    lines = []
    ok = True
    for dim in (2, 3):
        for preset in ("laplace", "varcoef"):
            coeff, exact = make_problem(preset, dim)
            rep = solve_study(coeff, exact, tensor_families[dim], element="cr")
            ok &= in_windows(rep)
            lines.append(f"d={dim} {preset}: {rep.rate_l2:.3f}/{rep.rate_h1:.3f}")
    report("10 crouzeix-raviart-baseline", ok,
           "Kuhn-subdivided meshes, " + "; ".join(lines))


def test_criterion_11_jump_mean_continuity():
    meshes, _ = make_mesh_family(3, [4], "shear")
    mesh = meshes[0]
    dofs = build_dof_map(mesh, "p1nc")
    rng = np.random.default_rng(31)
    worst = 0.0
    for _ in range(100):
        x = rng.uniform(-1.0, 1.0, dofs.n_dofs)
        scale = float(np.abs(x).max())
        worst = max(worst, jump_mean_check(mesh, dofs, x) / scale)
    report("11 jump-mean-continuity", worst <= 1e-10,
           f"100 random coefficient vectors on a d=3 sheared mesh: "
           f"max facet jump-mean {worst:.2e} x scale")
