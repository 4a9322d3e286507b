"""Broken-norm error computation with closed-form oracles."""

import numpy as np
import pytest

from ncpoly.dofmap import build_dof_map
from ncpoly.manufactured import make_problem, product_sine_solution
from ncpoly.mesh import build_tensor_grid
from ncpoly.norms import error_broken_h1, error_l2, p1_errors
from ncpoly.study import batched_interpolation, solve_study


def test_interpolant_of_linear_is_error_free():
    mesh = build_tensor_grid(2, 3)
    from ncpoly.manufactured import ManufacturedSolution

    exact = ManufacturedSolution(
        "line", 2,
        u=lambda x: 1.0 + 2.0 * x[:, 0] - x[:, 1],
        grad_u=lambda x: np.tile([2.0, -1.0], (len(x), 1)),
        hess_u=lambda x: np.zeros((len(x), 2, 2)))
    combined = batched_interpolation(mesh, exact.u)
    l2, h1 = p1_errors(mesh, combined, exact)
    assert l2 <= 1e-12
    assert h1 <= 1e-12


@pytest.mark.parametrize("dim", [2, 3])
def test_zero_function_errors_have_closed_form(dim):
    """u_h = 0 against prod sin(pi x_i): ||u|| = 2^(-d/2),
    |u|_1 = sqrt(d * pi^2 / 2^d)."""
    mesh = build_tensor_grid(dim, 6)
    exact = product_sine_solution(dim)
    combined = np.zeros((mesh.n_cells, dim + 1))
    l2, h1 = p1_errors(mesh, combined, exact, quad_k=5)
    assert l2 == pytest.approx(0.5 ** (dim / 2.0), rel=1e-9)
    assert h1 == pytest.approx(np.sqrt(dim * np.pi ** 2 / 2.0 ** dim), rel=1e-9)


def test_zero_function_2d_frozen_values():
    mesh = build_tensor_grid(2, 8)
    exact = product_sine_solution(2)
    combined = np.zeros((mesh.n_cells, 3))
    l2, h1 = p1_errors(mesh, combined, exact, quad_k=5)
    assert l2 == pytest.approx(0.5, rel=1e-10)
    assert h1 == pytest.approx(2.221441469079183, rel=1e-10)  # sqrt(pi^2 / 2)


def test_error_halves_at_expected_order():
    coeff, exact = make_problem("laplace", 2)
    errors = {}
    for n in (8, 16):
        mesh = build_tensor_grid(2, n)
        dofs = build_dof_map(mesh, "p1nc")
        from ncpoly.assembly import assemble
        from ncpoly.solver import solve_cg

        system = assemble(mesh, dofs, coeff)
        x, _ = solve_cg(system)
        errors[n] = (error_l2(dofs, x, exact), error_broken_h1(dofs, x, exact))
    l2_ratio = errors[8][0] / errors[16][0]
    h1_ratio = errors[8][1] / errors[16][1]
    assert 3.6 <= l2_ratio <= 4.4
    assert 1.8 <= h1_ratio <= 2.2


def test_galerkin_error_close_to_interpolation_error():
    coeff, exact = make_problem("laplace", 2)
    meshes = [build_tensor_grid(2, n) for n in (4, 8, 16)]
    solved = solve_study(coeff, exact, meshes, element="p1nc")
    from ncpoly.study import interpolation_study

    interp = interpolation_study(exact, meshes)
    for srow, irow in zip(solved.rows, interp.rows):
        assert srow.err_l2 <= 10.0 * irow.err_l2
