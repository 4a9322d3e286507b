"""Broken-norm errors of discrete solutions against manufactured exactness.

L2 error: sqrt(sum_K int_K (u_h - u)^2); broken H1 seminorm error:
sqrt(sum_K int_K |grad u_h - grad u|^2).  Integrals are quadrature
approximations at a point count the caller picks high enough to keep
quadrature error negligible against discretization error.
"""

import numpy as np

from .assembly import combined_local_p1, local_solution_coefficients
from .elements import reference_basis
from .femspace import cell_rule, inverse_jacobian_t, map_quadrature

__all__ = ["p1_errors", "solution_errors", "error_l2", "error_broken_h1"]

CHUNK = 2048


def p1_errors(mesh_like, combined, exact, quad_k: int = 4, chunk: int = CHUNK):
    """(L2, broken-H1) errors of a per-cell linear field [a0, a] vs exact."""
    rule = cell_rule(mesh_like, mesh_like.dim, quad_k)
    acc_l2 = 0.0
    acc_h1 = 0.0
    for start in range(0, mesh_like.n_cells, chunk):
        ids = np.arange(start, min(start + chunk, mesh_like.n_cells))
        x, wj = map_quadrature(mesh_like, ids, rule)
        n, nq, dim = x.shape
        flat = x.reshape(-1, dim)
        uh = combined[ids, 0][:, None] + np.einsum("nqd,nd->nq", x, combined[ids, 1:])
        diff = np.asarray(exact.u(flat)).reshape(n, nq) - uh
        acc_l2 += float((wj * diff * diff).sum())
        gdiff = np.asarray(exact.grad_u(flat)).reshape(n, nq, dim) \
            - combined[ids, None, 1:]
        acc_h1 += float((wj * np.einsum("nqd,nqd->nq", gdiff, gdiff)).sum())
    return np.sqrt(acc_l2), np.sqrt(acc_h1)


def _rotated_errors(dofs, x_coeffs, exact, quad_k: int, lift, chunk: int = CHUNK):
    mesh = dofs.mesh
    rule = cell_rule(mesh, mesh.dim, quad_k)
    basis = reference_basis(dofs.element, mesh.dim)
    ref_vals = basis.values(rule.points)
    ref_grads = basis.gradients(rule.points)
    cloc = local_solution_coefficients(dofs, x_coeffs, lift)
    acc_l2 = 0.0
    acc_h1 = 0.0
    for start in range(0, mesh.n_cells, chunk):
        ids = np.arange(start, min(start + chunk, mesh.n_cells))
        x, wj = map_quadrature(mesh, ids, rule)
        n, nq, dim = x.shape
        flat = x.reshape(-1, dim)
        uh = np.einsum("qb,nb->nq", ref_vals, cloc[ids])
        diff = np.asarray(exact.u(flat)).reshape(n, nq) - uh
        acc_l2 += float((wj * diff * diff).sum())
        inv_jt = inverse_jacobian_t(mesh, ids)
        gh = np.einsum("nde,qeb,nb->nqd", inv_jt, ref_grads, cloc[ids])
        gdiff = np.asarray(exact.grad_u(flat)).reshape(n, nq, dim) - gh
        acc_h1 += float((wj * np.einsum("nqd,nqd->nq", gdiff, gdiff)).sum())
    return np.sqrt(acc_l2), np.sqrt(acc_h1)


def solution_errors(dofs, x_coeffs, exact, quad_k: int = 4, lift=None):
    """(L2, broken-H1) errors of an assembled solution vector."""
    if dofs.element.family in ("p1nc", "cr"):
        combined = combined_local_p1(dofs, x_coeffs, lift)
        return p1_errors(dofs.mesh, combined, exact, quad_k)
    return _rotated_errors(dofs, x_coeffs, exact, quad_k, lift)


def error_l2(dofs, x_coeffs, exact, quad_k: int = 4, lift=None) -> float:
    return solution_errors(dofs, x_coeffs, exact, quad_k, lift)[0]


def error_broken_h1(dofs, x_coeffs, exact, quad_k: int = 4, lift=None) -> float:
    return solution_errors(dofs, x_coeffs, exact, quad_k, lift)[1]
