"""Sparse Galerkin assembly of the broken bilinear form.

Cells are processed in fixed-size chunks; local matrices come from the
kernel backend and are scattered into deterministic CSR storage (stable
lexicographic ordering, sequential in-order reduction per entry), so two
runs on the same mesh produce identical bytes.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .coefficients import CoefficientField
from .dofmap import DofMap
from .elements import reference_basis
from .femspace import (AssemblyError, cell_rule, inverse_jacobian_t,
                       map_quadrature, p1_basis_tables)
from .mesh import facet_measures
from .quadrature import QuadratureRule
from .simplex import SimplexMesh

__all__ = [
    "SparseSystem",
    "AssemblyError",
    "assemble",
    "local_solution_coefficients",
    "combined_local_p1",
    "jump_mean_from_local",
    "jump_mean_check",
    "write_matrix_market",
    "write_rhs_vector",
]

CHUNK = 4096


@dataclass
class SparseSystem:
    """Compressed-sparse-row SPD matrix with its right-hand side."""

    n_dofs: int
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    rhs: np.ndarray

    @property
    def nnz(self) -> int:
        return len(self.data)

    def matvec(self, x) -> np.ndarray:
        return kernels.csr_matvec(self.indptr, self.indices, self.data, x)

    def diagonal(self) -> np.ndarray:
        rows = np.repeat(np.arange(self.n_dofs), np.diff(self.indptr))
        diag = np.zeros(self.n_dofs)
        hit = rows == self.indices
        diag[rows[hit]] = self.data[hit]
        return diag

    def to_dense(self) -> np.ndarray:
        rows = np.repeat(np.arange(self.n_dofs), np.diff(self.indptr))
        dense = np.zeros((self.n_dofs, self.n_dofs))
        dense[rows, self.indices] = self.data
        return dense

    def symmetry_gap(self) -> float:
        """max |M - M^T| over the stored pattern (0 for an empty system)."""
        if self.nnz == 0:
            return 0.0
        rows = np.repeat(np.arange(self.n_dofs), np.diff(self.indptr))
        transpose_order = np.lexsort((rows, self.indices))
        return float(np.abs(self.data - self.data[transpose_order]).max())


def _a_weighted(coeff: CoefficientField, x, wj) -> np.ndarray:
    """Sum over quadrature points of w*|J|*A(x), shape (n, d, d)."""
    n, nq, dim = x.shape
    if coeff.a_const is not None:
        return wj.sum(axis=1)[:, None, None] * coeff.a_const[None]
    diag = np.asarray(coeff.a_diag(x.reshape(-1, dim))).reshape(n, nq, dim)
    out = np.zeros((n, dim, dim))
    idx = np.arange(dim)
    out[:, idx, idx] = np.einsum("nq,nqd->nd", wj, diag)
    return out


def _a_effective(coeff: CoefficientField, x, wj, inv_jt) -> np.ndarray:
    """w*|J| * J^-1 A J^-T per quadrature point, shape (n, nq, d, d)."""
    n, nq, dim = x.shape
    if coeff.a_const is not None:
        pulled = np.einsum("nad,ae,neb->ndb", inv_jt, coeff.a_const, inv_jt)
        return wj[:, :, None, None] * pulled[:, None]
    diag = np.asarray(coeff.a_diag(x.reshape(-1, dim))).reshape(n, nq, dim)
    pulled = np.einsum("nad,nqa,nab->nqdb", inv_jt, diag, inv_jt)
    return wj[:, :, None, None] * pulled


def assemble(mesh, dofs: DofMap, coeff: CoefficientField, quad=4,
             lift=None, chunk: int = CHUNK) -> SparseSystem:
    """Assemble matrix entries sum_K (A grad phi_j . grad phi_i + c phi_i phi_j)
    and rhs entries sum_K (f, phi_i); boundary-lift columns fold into the rhs.

    `quad` is either a QuadratureRule on the matching reference cell or a
    Gauss point count per axis.
    """
    if dofs.mesh is not mesh:
        raise AssemblyError("dof map was built for a different mesh")
    if coeff.dim != mesh.dim:
        raise AssemblyError("coefficient dimension does not match the mesh")
    rule = quad if isinstance(quad, QuadratureRule) else cell_rule(mesh, mesh.dim, quad)
    family = dofs.element.family
    n_dofs = dofs.n_dofs
    rhs = np.zeros(n_dofs)

    if family == "rotated":
        basis = reference_basis(dofs.element, mesh.dim)
        ref_vals = basis.values(rule.points)
        ref_grads = np.ascontiguousarray(basis.gradients(rule.points))

    rows_parts, cols_parts, vals_parts = [], [], []
    need_vals = coeff.has_mass or coeff.f is not None
    for start in range(0, mesh.n_cells, chunk):
        ids = np.arange(start, min(start + chunk, mesh.n_cells))
        x, wj = map_quadrature(mesh, ids, rule)
        n, nq, dim = x.shape
        mass_w = wj * coeff.c_at(x.reshape(-1, dim)).reshape(n, nq) if coeff.has_mass else None

        if mass_w is not None:
            mass_w = np.ascontiguousarray(mass_w)
        if family in ("p1nc", "cr"):
            tables = p1_basis_tables(mesh, ids)
            vals = None
            if need_vals:
                vals = np.ascontiguousarray(
                    tables[:, None, 0, :] + np.einsum("nqd,ndi->nqi", x, tables[:, 1:, :]))
            local = kernels.local_matrices_const_grad(
                np.ascontiguousarray(tables[:, 1:, :]),
                np.ascontiguousarray(_a_weighted(coeff, x, wj)),
                vals if mass_w is not None else None, mass_w)
        else:
            a_eff = np.ascontiguousarray(
                _a_effective(coeff, x, wj, inverse_jacobian_t(mesh, ids)))
            vals = None
            if mass_w is not None:
                vals = np.ascontiguousarray(
                    np.broadcast_to(ref_vals[None], (n, nq, basis.n_basis)))
            local = kernels.local_matrices_ref_grad(ref_grads, a_eff, vals, mass_w)

        if coeff.f is not None:
            wf = wj * np.asarray(coeff.f(x.reshape(-1, dim))).reshape(n, nq)
            if family == "rotated":
                cell_rhs = np.einsum("nq,qi->ni", wf, ref_vals)
            else:
                cell_rhs = np.einsum("nq,nqi->ni", wf, vals)
        else:
            cell_rhs = None

        ld = dofs.cell_dofs[ids]
        active = ld >= 0
        if lift is not None:
            lift_loc = np.where(active, 0.0, lift[dofs.cell_entities[ids]])
            if np.any(lift_loc):
                moved = np.einsum("nij,nj->ni", local, lift_loc)
                np.add.at(rhs, ld[active], -moved[active])
        if cell_rhs is not None:
            np.add.at(rhs, ld[active], cell_rhs[active])

        nb = ld.shape[1]
        pair = active[:, :, None] & active[:, None, :]
        rows_parts.append(np.repeat(ld, nb, axis=1)[pair.reshape(n, -1)])
        cols_parts.append(np.tile(ld, (1, nb))[pair.reshape(n, -1)])
        vals_parts.append(local.reshape(n, -1)[pair.reshape(n, -1)])

    return _csr_from_triplets(n_dofs, rows_parts, cols_parts, vals_parts, rhs)


def _csr_from_triplets(n_dofs, rows_parts, cols_parts, vals_parts, rhs) -> SparseSystem:
    if n_dofs == 0 or not rows_parts:
        return SparseSystem(n_dofs, np.zeros(n_dofs + 1, dtype=np.intp),
                            np.empty(0, dtype=np.intp), np.empty(0), rhs)
    rows = np.concatenate(rows_parts)
    cols = np.concatenate(cols_parts)
    vals = np.concatenate(vals_parts)
    order = np.lexsort((cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    fresh = np.r_[True, (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])]
    starts = np.flatnonzero(fresh)
    data = np.add.reduceat(vals, starts)
    rows_u, cols_u = rows[starts], cols[starts]
    indptr = np.zeros(n_dofs + 1, dtype=np.intp)
    np.cumsum(np.bincount(rows_u, minlength=n_dofs), out=indptr[1:])
    return SparseSystem(n_dofs, indptr, cols_u, data, rhs)


def local_solution_coefficients(dofs: DofMap, x, lift=None) -> np.ndarray:
    """Per-cell local coefficient vectors of a discrete solution, (nc, n_local)."""
    if dofs.n_dofs == 0:
        cloc = np.zeros(dofs.cell_dofs.shape)
    else:
        safe = np.clip(dofs.cell_dofs, 0, None)
        cloc = np.where(dofs.cell_dofs >= 0, np.asarray(x)[safe], 0.0)
    if lift is not None:
        cloc = cloc + np.where(dofs.cell_dofs < 0, lift[dofs.cell_entities], 0.0)
    return cloc


def combined_local_p1(dofs: DofMap, x, lift=None) -> np.ndarray:
    """Collapse a P1-family solution to one [a0, a] per cell, (nc, d+1)."""
    if dofs.element.family not in ("p1nc", "cr"):
        raise AssemblyError("combined_local_p1 applies to P1-family elements only")
    tables = p1_basis_tables(dofs.mesh)
    cloc = local_solution_coefficients(dofs, x, lift)
    return np.einsum("nki,ni->nk", tables, cloc)


def jump_mean_from_local(mesh, combined) -> float:
    """Max over interior facets of |integral of the jump| for per-cell
    linear fields [a0, a].

    For P1-family functions the facet mean equals the value at the
    vertex-mean barycenter, so the jump integral is the barycenter value
    jump times the facet measure.
    """
    interior = np.flatnonzero(~mesh.facet_is_boundary)
    if len(interior) == 0:
        return 0.0
    bary = mesh.facet_barycenters[interior]
    owners = mesh.facet_cells[interior]
    v0 = combined[owners[:, 0], 0] + np.einsum("fd,fd->f", bary, combined[owners[:, 0], 1:])
    v1 = combined[owners[:, 1], 0] + np.einsum("fd,fd->f", bary, combined[owners[:, 1], 1:])
    measures = (mesh.facet_measures() if isinstance(mesh, SimplexMesh)
                else facet_measures(mesh))[interior]
    return float(np.abs((v0 - v1) * measures).max())


def jump_mean_check(mesh, dofs: DofMap, x, lift=None) -> float:
    """Max interior-facet jump integral of an assembled discrete function."""
    return jump_mean_from_local(mesh, combined_local_p1(dofs, x, lift))


def write_matrix_market(system: SparseSystem, path) -> None:
    """Dump the matrix in symmetric coordinate Matrix Market format."""
    rows = np.repeat(np.arange(system.n_dofs), np.diff(system.indptr))
    keep = rows >= system.indices  # lower triangle carries the symmetric data
    r, c, v = rows[keep], system.indices[keep], system.data[keep]
    with open(path, "w", encoding="ascii") as fh:
        fh.write("%%MatrixMarket matrix coordinate real symmetric\n")
        fh.write(f"{system.n_dofs} {system.n_dofs} {len(v)}\n")
        for i, j, val in zip(r, c, v):
            fh.write(f"{i + 1} {j + 1} {val:.17g}\n")


def write_rhs_vector(system: SparseSystem, path) -> None:
    """Dump the right-hand side as one plain-text value per line."""
    with open(path, "w", encoding="ascii") as fh:
        for val in system.rhs:
            fh.write(f"{val:.17g}\n")
