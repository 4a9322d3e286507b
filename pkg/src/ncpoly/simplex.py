"""Simplicial meshes and the Kuhn subdivision of cube meshes.

Only what the Crouzeix-Raviart baseline needs: a conforming simplex mesh
with facet connectivity, produced by splitting every parallelotope cell
into d! simplices along coordinate-permutation chains.
"""

from itertools import permutations
from math import factorial

import numpy as np

from .mesh import Mesh, MeshError, PARALLELOTOPE

__all__ = ["SimplexMesh", "kuhn_subdivide"]


class SimplexMesh:
    """Immutable conforming mesh of d-simplices (d+1 vertices per cell).

    Facet slot i of a cell is the facet opposite local vertex i; facet
    barycenters are vertex means.
    """

    def __init__(self, dim, vertices, cells):
        vertices = np.ascontiguousarray(vertices, dtype=float)
        cells = np.ascontiguousarray(cells, dtype=np.intp)
        if dim < 2:
            raise MeshError(f"dimension must be >= 2, got {dim}")
        if vertices.ndim != 2 or vertices.shape[1] != dim:
            raise MeshError(f"vertices must be (n, {dim}), got {vertices.shape}")
        if cells.ndim != 2 or cells.shape[1] != dim + 1:
            raise MeshError(f"cells must be (n, {dim + 1}), got {cells.shape}")
        self.dim = int(dim)
        self.vertices = vertices
        self.cells = cells

        corners = vertices[cells]
        edges = corners[:, 1:, :] - corners[:, :1, :]
        vols = np.abs(np.linalg.det(edges)) / factorial(dim)
        if np.any(vols <= 0.0):
            raise MeshError(
                f"degenerate simplices: {np.flatnonzero(vols <= 0.0)[:8].tolist()}")
        self.cell_volumes = vols

        self._extract_facets()
        diffs = corners[:, :, None, :] - corners[:, None, :, :]
        self.h = float(np.linalg.norm(diffs, axis=3).max())
        for arr in (self.vertices, self.cells, self.facet_vertices, self.facet_cells,
                    self.facet_slots, self.cell_facets, self.facet_barycenters,
                    self.facet_is_boundary, self.vertex_is_boundary, self.cell_volumes):
            arr.setflags(write=False)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_facets(self) -> int:
        return len(self.facet_vertices)

    def cell_corners(self, cell_ids=None) -> np.ndarray:
        cells = self.cells if cell_ids is None else self.cells[cell_ids]
        return self.vertices[cells]

    def _extract_facets(self):
        dim, cells = self.dim, self.cells
        n_cells = len(cells)
        n_slots = dim + 1
        # Slot i drops local vertex i.
        table = np.array([[j for j in range(n_slots) if j != i] for i in range(n_slots)],
                         dtype=np.intp)
        slot_verts = cells[:, table]
        keys = np.sort(slot_verts.reshape(n_cells * n_slots, -1), axis=1)
        _, first, inverse, counts = np.unique(
            keys, axis=0, return_index=True, return_inverse=True, return_counts=True)
        if np.any(counts > 2):
            f = int(np.argmax(counts > 2))
            owners = np.flatnonzero(inverse == f) // n_slots
            raise MeshError(
                f"non-conforming simplex mesh: a facet is shared by cells {owners.tolist()}")
        order = np.argsort(first, kind="stable")
        rank = np.empty_like(order)
        rank[order] = np.arange(len(order))
        facet_of_record = rank[inverse.ravel()]
        n_facets = len(counts)

        self.cell_facets = facet_of_record.reshape(n_cells, n_slots)
        facet_cells = np.full((n_facets, 2), -1, dtype=np.intp)
        facet_slots = np.full((n_facets, 2), -1, dtype=np.int8)
        rec_sorted = np.argsort(facet_of_record, kind="stable")
        f_sorted = facet_of_record[rec_sorted]
        group_starts = np.flatnonzero(np.r_[True, f_sorted[1:] != f_sorted[:-1]])
        sizes = np.diff(np.r_[group_starts, len(f_sorted)])
        pos = np.arange(len(f_sorted)) - np.repeat(group_starts, sizes)
        facet_cells[f_sorted, pos] = rec_sorted // n_slots
        facet_slots[f_sorted, pos] = (rec_sorted % n_slots).astype(np.int8)
        self.facet_cells = facet_cells
        self.facet_slots = facet_slots
        self.facet_vertices = cells[facet_cells[:, 0][:, None],
                                    table[facet_slots[:, 0].astype(np.intp)]]
        self.facet_barycenters = self.vertices[self.facet_vertices].mean(axis=1)
        self.facet_is_boundary = facet_cells[:, 1] < 0
        flags = np.zeros(self.n_vertices, dtype=bool)
        flags[self.facet_vertices[self.facet_is_boundary].ravel()] = True
        self.vertex_is_boundary = flags

    def facet_measures(self) -> np.ndarray:
        """(d-1)-volume of every facet ((d-1)-simplices)."""
        coords = self.vertices[self.facet_vertices]
        edges = coords[:, 1:, :] - coords[:, :1, :]
        gram = np.einsum("fid,fjd->fij", edges, edges)
        return np.sqrt(np.linalg.det(gram)) / factorial(self.dim - 1)


def kuhn_subdivide(mesh: Mesh) -> SimplexMesh:
    """Split every parallelotope cell into d! simplices (Kuhn subdivision).

    Simplex k of permutation (p_1, ..., p_d) walks corner bitmasks
    0 -> 0|bit(p_1) -> ... -> full, so neighbouring cells induce identical
    triangulations on shared facets whenever their corner orderings agree
    (true for every mesh generated by this package).
    """
    if np.any(mesh.cell_kind != PARALLELOTOPE):
        raise MeshError("kuhn_subdivide requires an all-parallelotope mesh")
    dim = mesh.dim
    masks = []
    for perm in permutations(range(dim)):
        mask, chain = 0, [0]
        for axis in perm:
            mask |= 1 << axis
            chain.append(mask)
        masks.append(chain)
    masks = np.array(masks, dtype=np.intp)  # (d!, d+1) corner bitmasks
    cells = mesh.cells[:, masks].reshape(-1, dim + 1)
    return SimplexMesh(dim, mesh.vertices, cells)
