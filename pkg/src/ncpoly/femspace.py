"""Per-cell geometry maps and basis tables shared by assembly and norms."""

import numpy as np

from .elements import corner_basis_coefficients
from .mesh import GENERAL_QUAD_2D, Mesh, PARALLELOTOPE
from .quadrature import QuadratureRule, simplex_gauss_rule, tensor_gauss_rule
from .simplex import SimplexMesh

__all__ = [
    "AssemblyError",
    "cell_rule",
    "map_quadrature",
    "p1_basis_tables",
    "inverse_jacobian_t",
]


class AssemblyError(ValueError):
    """Degenerate geometry or incompatible inputs during integration."""


def cell_rule(mesh_like, dim: int, k: int) -> QuadratureRule:
    """Quadrature rule matching the mesh family, k Gauss points per axis."""
    if isinstance(mesh_like, SimplexMesh):
        return simplex_gauss_rule(dim, 2 * k - 1)
    return tensor_gauss_rule(dim, k)


def _map_parallelotopes(mesh, cell_ids, rule):
    corners = mesh.cell_corners(cell_ids)
    origin = corners[:, 0]
    edges = mesh.cell_edge_matrices(cell_ids)
    lam = 0.5 * (rule.points + 1.0)
    x = origin[:, None, :] + np.einsum("qi,nid->nqd", lam, edges)
    scale = np.abs(np.linalg.det(edges)) / 2.0 ** mesh.dim
    return x, rule.weights[None, :] * scale[:, None]


def _map_quads_2d(mesh, cell_ids, rule):
    corners = mesh.cell_corners(cell_ids)  # (n, 4, 2), binary order
    xi = rule.points
    sign = np.array([[-1, -1], [1, -1], [-1, 1], [1, 1]], dtype=float)
    shape = 0.25 * (1.0 + sign[None, :, 0] * xi[:, 0:1]) * (1.0 + sign[None, :, 1] * xi[:, 1:2])
    dshape = np.empty((len(xi), 4, 2))
    dshape[:, :, 0] = 0.25 * sign[None, :, 0] * (1.0 + sign[None, :, 1] * xi[:, 1:2])
    dshape[:, :, 1] = 0.25 * sign[None, :, 1] * (1.0 + sign[None, :, 0] * xi[:, 0:1])
    x = np.einsum("qb,nbd->nqd", shape, corners)
    jac = np.einsum("qbi,nbd->nqdi", dshape, corners)
    det = jac[..., 0, 0] * jac[..., 1, 1] - jac[..., 0, 1] * jac[..., 1, 0]
    if np.any(det <= 0.0):
        bad = np.flatnonzero(np.any(det <= 0.0, axis=1))
        ids = (cell_ids[bad] if cell_ids is not None else bad)[:8]
        raise AssemblyError(
            f"nonpositive bilinear Jacobian at quadrature points in cells {np.asarray(ids).tolist()}")
    return x, rule.weights[None, :] * det


def map_quadrature(mesh_like, cell_ids, rule):
    """Physical quadrature points and weight*|J| factors for a cell batch.

    Returns (x, wj) shaped (n_cells, n_q, d) and (n_cells, n_q).
    """
    if isinstance(mesh_like, SimplexMesh):
        corners = mesh_like.cell_corners(cell_ids)
        origin = corners[:, 0]
        edges = corners[:, 1:, :] - origin[:, None, :]
        x = origin[:, None, :] + np.einsum("qi,nid->nqd", rule.points, edges)
        return x, rule.weights[None, :] * np.abs(np.linalg.det(edges))[:, None]
    kinds = mesh_like.cell_kind if cell_ids is None else mesh_like.cell_kind[cell_ids]
    if np.all(kinds == PARALLELOTOPE):
        return _map_parallelotopes(mesh_like, cell_ids, rule)
    if np.all(kinds == GENERAL_QUAD_2D):
        return _map_quads_2d(mesh_like, cell_ids, rule)
    # Mixed batch: handle each kind separately and stitch.
    ids = np.arange(mesh_like.n_cells) if cell_ids is None else np.asarray(cell_ids)
    x = np.empty((len(ids), rule.n_points, mesh_like.dim))
    wj = np.empty((len(ids), rule.n_points))
    for kind, mapper in ((PARALLELOTOPE, _map_parallelotopes),
                         (GENERAL_QUAD_2D, _map_quads_2d)):
        sel = np.flatnonzero(kinds == kind)
        if len(sel):
            x[sel], wj[sel] = mapper(mesh_like, ids[sel], rule)
    return x, wj


def p1_basis_tables(mesh_like, cell_ids=None) -> np.ndarray:
    """LocalP1 coefficients of the local basis, shape (n, d+1, n_local).

    Cube meshes: the 2^d corner basis functions of the facet-value element.
    Simplex meshes: the d+1 Crouzeix-Raviart functions 1 - d*lambda_i.
    """
    if isinstance(mesh_like, SimplexMesh):
        corners = mesh_like.cell_corners(cell_ids)
        n, m = corners.shape[0], mesh_like.dim + 1
        pt = np.empty((n, m, m))
        pt[:, :, 0] = 1.0
        pt[:, :, 1:] = corners
        try:
            lam = np.linalg.inv(pt)  # column i: coefficients of lambda_i
        except np.linalg.LinAlgError as exc:
            raise AssemblyError(f"degenerate simplex: {exc}") from exc
        coeffs = -mesh_like.dim * lam
        coeffs[:, 0, :] += 1.0
        return coeffs
    return corner_basis_coefficients(mesh_like, cell_ids)


def inverse_jacobian_t(mesh: Mesh, cell_ids=None) -> np.ndarray:
    """J^-T of the reference-cube map per parallelotope cell, (n, d, d).

    For x = corner0 + (xi+1)/2 . E this equals 2 * inv(E); used to push
    reference gradients of parametric elements to physical space.
    """
    kinds = mesh.cell_kind if cell_ids is None else mesh.cell_kind[cell_ids]
    if np.any(kinds != PARALLELOTOPE):
        raise AssemblyError("parametric elements require parallelotope cells")
    return 2.0 * np.linalg.inv(mesh.cell_edge_matrices(cell_ids))
