"""Sparse assembly: symmetry, exact small cases, exports, jump means."""

import types

import numpy as np
import pytest

from ncpoly.assembly import (assemble, combined_local_p1, jump_mean_check,
                             jump_mean_from_local, write_matrix_market,
                             write_rhs_vector)
from ncpoly.coefficients import CoefficientField, laplace_field
from ncpoly.dofmap import apply_dirichlet_inhomogeneous, build_dof_map
from ncpoly.femspace import AssemblyError, _map_quads_2d
from ncpoly.manufactured import make_problem
from ncpoly.mesh import (Mesh, apply_affine_map, build_perturbed_quad_mesh_2d,
                         build_tensor_grid)
from ncpoly.quadrature import tensor_gauss_rule
from ncpoly.solver import solve_cg


def test_zero_forcing_zero_rhs_and_symmetry():
    mesh = build_tensor_grid(2, 4)
    dofs = build_dof_map(mesh, "p1nc")
    system = assemble(mesh, dofs, laplace_field(2))
    assert np.all(system.rhs == 0.0)
    scale = np.abs(system.data).max()
    assert system.symmetry_gap() <= 1e-13 * scale


def test_single_dof_diagonal_matches_per_cell_gradient_formula():
    """d=2, n=2 grid: one dof; diagonal = sum over 4 cells of |grad|^2 |K|.

    Each cell has gradient (+-2, +-2), |grad|^2 = 8, |K| = 1/4, so the
    diagonal is exactly 8 (hand-derived independent oracle).
    """
    mesh = build_tensor_grid(2, 2)
    dofs = build_dof_map(mesh, "p1nc")
    system = assemble(mesh, dofs, laplace_field(2))
    assert system.n_dofs == 1
    assert system.to_dense()[0, 0] == pytest.approx(8.0, abs=1e-12)


def test_mass_dominated_system_is_spd():
    mesh = build_tensor_grid(2, 3)
    dofs = build_dof_map(mesh, "p1nc")
    coeff = CoefficientField(2, "eps-mass", a_const=1e-8 * np.eye(2), c_const=1.0)
    system = assemble(mesh, dofs, coeff)
    eigs = np.linalg.eigvalsh(system.to_dense())
    assert eigs.min() > 0.0


def test_stiffness_spd_on_sheared_mesh():
    mesh = apply_affine_map(build_tensor_grid(3, 3), np.eye(3) + 0.25 * np.triu(np.ones((3, 3)), 1))
    dofs = build_dof_map(mesh, "p1nc")
    system = assemble(mesh, dofs, laplace_field(3))
    eigs = np.linalg.eigvalsh(system.to_dense())
    assert eigs.min() > 0.0


def test_assembly_independent_of_cell_order():
    mesh = build_tensor_grid(2, 4)
    rng = np.random.default_rng(3)
    perm = rng.permutation(mesh.n_cells)
    shuffled = Mesh(2, mesh.vertices, mesh.cells[perm])
    coeff, _ = make_problem("varcoef", 2)
    a = assemble(mesh, build_dof_map(mesh, "p1nc"), coeff).to_dense()
    b = assemble(shuffled, build_dof_map(shuffled, "p1nc"), coeff).to_dense()
    scale = np.abs(a).max()
    assert np.abs(a - b).max() <= 1e-12 * scale


def test_degenerate_bilinear_jacobian_detected():
    # Bypass mesh validation with a stub whose corner order folds the map.
    corners = np.array([[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]])
    stub = types.SimpleNamespace(cell_corners=lambda ids=None: corners)
    with pytest.raises(AssemblyError, match="Jacobian"):
        _map_quads_2d(stub, None, tensor_gauss_rule(2, 2))


def test_matrix_market_roundtrip(tmp_path):
    scipy_io = pytest.importorskip("scipy.io")
    mesh = build_tensor_grid(2, 4)
    dofs = build_dof_map(mesh, "p1nc")
    coeff, _ = make_problem("helmholtz-like", 2)
    system = assemble(mesh, dofs, coeff)
    write_matrix_market(system, tmp_path / "system.mtx")
    write_rhs_vector(system, tmp_path / "rhs.txt")
    back = scipy_io.mmread(tmp_path / "system.mtx").toarray()
    dense = system.to_dense()
    sym = 0.5 * (dense + dense.T)
    assert np.abs(back - sym).max() <= 1e-14 * np.abs(dense).max()
    rhs = np.loadtxt(tmp_path / "rhs.txt")
    assert np.array_equal(rhs, system.rhs)


def test_jump_mean_of_basis_and_random_vectors():
    mesh = apply_affine_map(build_tensor_grid(3, 3),
                            np.eye(3) + 0.25 * np.triu(np.ones((3, 3)), 1))
    dofs = build_dof_map(mesh, "p1nc")
    e = np.zeros(dofs.n_dofs)
    e[dofs.n_dofs // 2] = 1.0
    assert jump_mean_check(mesh, dofs, e) <= 1e-11
    rng = np.random.default_rng(8)
    x = rng.uniform(-1.0, 1.0, dofs.n_dofs)
    assert jump_mean_check(mesh, dofs, x) <= 1e-10 * np.abs(x).max()


def test_corrupted_local_value_detected():
    mesh = build_tensor_grid(2, 3)
    dofs = build_dof_map(mesh, "p1nc")
    x = np.ones(dofs.n_dofs)
    combined = combined_local_p1(dofs, x)
    clean = jump_mean_from_local(mesh, combined)
    corrupted = combined.copy()
    corrupted[0, 0] += 0.5
    assert jump_mean_from_local(mesh, corrupted) > max(0.1, 10 * clean)


def test_zero_lift_matches_homogeneous():
    mesh = build_tensor_grid(2, 3)
    hom = build_dof_map(mesh, "p1nc")
    inhom = build_dof_map(mesh, "p1nc", bc="facet_mean_dirichlet")
    coeff, _ = make_problem("laplace", 2)
    lift = apply_dirichlet_inhomogeneous(mesh, inhom, lambda x: np.zeros(len(x)))
    a = assemble(mesh, hom, coeff)
    b = assemble(mesh, inhom, coeff, lift=lift)
    assert np.array_equal(a.rhs, b.rhs)
    assert np.array_equal(a.data, b.data)


def test_constant_boundary_data_gives_constant_solution():
    mesh = apply_affine_map(build_tensor_grid(3, 2), np.eye(3) + 0.2 * np.triu(np.ones((3, 3)), 1))
    dofs = build_dof_map(mesh, "p1nc", bc="facet_mean_dirichlet")
    lift = apply_dirichlet_inhomogeneous(mesh, dofs, lambda x: np.ones(len(x)))
    system = assemble(mesh, dofs, laplace_field(3), lift=lift)
    x, _ = solve_cg(system, rel_tol=1e-13)
    combined = combined_local_p1(dofs, x, lift)
    assert np.abs(combined[:, 0] - 1.0).max() <= 1e-10
    assert np.abs(combined[:, 1:]).max() <= 1e-10


def test_quad_mesh_assembly_runs_and_is_spd():
    mesh = build_perturbed_quad_mesh_2d(4, 0.25, seed=2)
    dofs = build_dof_map(mesh, "p1nc")
    coeff, _ = make_problem("varcoef", 2)
    system = assemble(mesh, dofs, coeff)
    eigs = np.linalg.eigvalsh(system.to_dense())
    assert eigs.min() > 0.0
    assert system.symmetry_gap() <= 1e-13 * np.abs(system.data).max()


def test_mismatched_mesh_rejected():
    mesh = build_tensor_grid(2, 3)
    other = build_tensor_grid(2, 3)
    dofs = build_dof_map(mesh, "p1nc")
    with pytest.raises(AssemblyError):
        assemble(other, dofs, laplace_field(2))


def test_coercivity_probe_on_random_functions():
    """x^T M x >= lambda_min(A) * |v_h|^2_{1,h} for c >= 0.

    varcoef has a_ii = 1 + x_i/2 >= 1 on the unit box, so the energy must
    dominate the squared broken H1 seminorm outright.
    """
    from ncpoly.norms import error_broken_h1
    from ncpoly.manufactured import ManufacturedSolution

    zero = ManufacturedSolution(
        "zero", 2,
        u=lambda x: np.zeros(len(x)),
        grad_u=lambda x: np.zeros_like(x),
        hess_u=lambda x: np.zeros((len(x), 2, 2)))
    mesh = build_tensor_grid(2, 5)
    dofs = build_dof_map(mesh, "p1nc")
    coeff, _ = make_problem("varcoef", 2)
    system = assemble(mesh, dofs, coeff)
    rng = np.random.default_rng(12)
    for _ in range(10):
        x = rng.uniform(-1.0, 1.0, dofs.n_dofs)
        energy = float(x @ system.matvec(x))
        seminorm = error_broken_h1(dofs, x, zero)
        assert energy >= seminorm ** 2 * (1.0 - 1e-12)
