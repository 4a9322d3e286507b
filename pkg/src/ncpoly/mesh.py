"""Meshes of d-dimensional cells that are combinatorially cubes.

A cell is stored as 2^d vertex indices in binary corner order: corner c
(an integer in [0, 2^d)) sits on the "+" side of axis i exactly when bit i
of c is set.  Facets are indexed per cell by slot 2*axis + side with side
0 = "-" and 1 = "+", so slots (2j, 2j+1) always form an opposite pair.

Two cell kinds exist: affine images of the cube (parallelotopes, any
dimension) and general strictly convex quadrilaterals (dimension 2 only).
"""

import numpy as np

__all__ = [
    "Mesh",
    "MeshError",
    "PARALLELOTOPE",
    "GENERAL_QUAD_2D",
    "build_tensor_grid",
    "apply_affine_map",
    "build_perturbed_quad_mesh_2d",
    "midpoint_deviations",
    "validate_midpoint_coincidence",
    "facet_measures",
    "save_mesh",
    "load_mesh",
]

PARALLELOTOPE = 0
GENERAL_QUAD_2D = 1

# Relative tolerance for the affine-image (parallelotope) check.
PARALLELOTOPE_RTOL = 1e-12

_slot_tables: dict[int, np.ndarray] = {}


class MeshError(ValueError):
    """Invalid mesh input: degenerate cells, non-conformity, bad arguments."""


def slot_corner_table(dim: int) -> np.ndarray:
    """Local corner indices per facet slot, shape (2*dim, 2^(dim-1)).

    Slot 2*axis + side lists the corners whose bit `axis` equals `side`,
    in ascending corner order (i.e. ordered by the remaining bits).
    """
    table = _slot_tables.get(dim)
    if table is None:
        n_corners = 1 << dim
        table = np.empty((2 * dim, n_corners // 2), dtype=np.intp)
        for axis in range(dim):
            for side in (0, 1):
                sel = [c for c in range(n_corners) if (c >> axis) & 1 == side]
                table[2 * axis + side] = sel
        table.setflags(write=False)
        _slot_tables[dim] = table
    return table


def corner_bits(dim: int) -> np.ndarray:
    """(2^dim, dim) array of corner bits; row c holds bit i of c in column i."""
    c = np.arange(1 << dim)
    return ((c[:, None] >> np.arange(dim)[None, :]) & 1).astype(float)


def cell_diameters(corners: np.ndarray) -> np.ndarray:
    """Max vertex-to-vertex distance per cell, corners shaped (n, 2^d, d).

    For d >= 3 only the 2^(d-1) body diagonals are checked, which is exact
    for parallelotopes (the only kind allowed there); d = 2 checks all pairs.
    """
    n_corners = corners.shape[1]
    dim = corners.shape[2]
    if dim == 2:
        best = np.zeros(corners.shape[0])
        for a in range(n_corners):
            for b in range(a + 1, n_corners):
                dist = np.linalg.norm(corners[:, a] - corners[:, b], axis=1)
                best = np.maximum(best, dist)
        return best
    half = n_corners // 2
    diffs = corners[:, :half] - corners[:, n_corners - 1 : half - 1 : -1]
    return np.linalg.norm(diffs, axis=2).max(axis=1)


def midpoint_deviations(corners: np.ndarray) -> np.ndarray:
    """Opposite-facet-barycenter midpoint spread, relative to cell diameter.

    For each cell the d midpoints (mu_{j,-} + mu_{j,+}) / 2 are computed from
    vertex-mean facet barycenters; returned is max_j ||c_j - c_1|| / diam.
    Zero (up to roundoff) for every combinatorial cube with flat facets.
    """
    n, n_corners, dim = corners.shape
    table = slot_corner_table(dim)
    mids = np.empty((n, dim, dim))
    for axis in range(dim):
        minus = corners[:, table[2 * axis]].mean(axis=1)
        plus = corners[:, table[2 * axis + 1]].mean(axis=1)
        mids[:, axis] = 0.5 * (minus + plus)
    spread = np.linalg.norm(mids - mids[:, :1, :], axis=2).max(axis=1)
    return spread / cell_diameters(corners)


class Mesh:
    """Immutable conforming mesh of combinatorial-cube cells.

    Construction validates every cell against its kind, extracts the facet
    table (deduplicated across cells, deterministic first-occurrence ids),
    and computes barycenters, boundary flags and the mesh size h.
    """

    def __init__(self, dim, vertices, cells, cell_kind=PARALLELOTOPE):
        if dim < 2:
            raise MeshError(f"mesh dimension must be >= 2, got {dim}")
        vertices = np.ascontiguousarray(vertices, dtype=float)
        cells = np.ascontiguousarray(cells, dtype=np.intp)
        if vertices.ndim != 2 or vertices.shape[1] != dim:
            raise MeshError(f"vertices must be (n, {dim}), got {vertices.shape}")
        if not np.all(np.isfinite(vertices)):
            raise MeshError("vertex coordinates must be finite")
        if cells.ndim != 2 or cells.shape[1] != (1 << dim):
            raise MeshError(f"cells must be (n, {1 << dim}), got {cells.shape}")
        if cells.size and (cells.min() < 0 or cells.max() >= len(vertices)):
            raise MeshError("cell vertex index out of range")
        kind = np.broadcast_to(np.asarray(cell_kind, dtype=np.uint8), (len(cells),)).copy()
        if np.any(kind == GENERAL_QUAD_2D) and dim != 2:
            raise MeshError("general_quad_2d cells are only supported in dimension 2")

        self.dim = int(dim)
        self.vertices = vertices
        self.cells = cells
        self.cell_kind = kind

        self._validate_cells()
        self._extract_facets()

        corners = self.cell_corners()
        self.h = float(cell_diameters(corners).max()) if len(cells) else 0.0
        for arr in (self.vertices, self.cells, self.cell_kind, self.facet_vertices,
                    self.facet_cells, self.facet_slots, self.cell_facets,
                    self.facet_barycenters, self.facet_is_boundary,
                    self.vertex_is_boundary):
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
        """Corner coordinates, shape (n_cells, 2^d, d)."""
        cells = self.cells if cell_ids is None else self.cells[cell_ids]
        return self.vertices[cells]

    def cell_edge_matrices(self, cell_ids=None) -> np.ndarray:
        """Edge vectors e_i = corner(unit bit i) - corner(0), shape (n, d, d).

        Row i of each matrix is the edge along axis i; exact only for
        parallelotope cells.
        """
        corners = self.cell_corners(cell_ids)
        unit = 1 << np.arange(self.dim)
        return corners[:, unit, :] - corners[:, :1, :]

    # -- validation -------------------------------------------------------

    def _validate_cells(self):
        if self.n_cells == 0:
            raise MeshError("mesh must contain at least one cell")
        corners = self.cell_corners()
        diam = cell_diameters(corners)
        para = np.flatnonzero(self.cell_kind == PARALLELOTOPE)
        if len(para):
            edges = self.cell_edge_matrices(para)
            scale = np.abs(np.prod(np.linalg.norm(edges, axis=2), axis=1))
            dets = np.linalg.det(edges)
            bad = np.flatnonzero(np.abs(dets) <= 1e-12 * scale)
            if len(bad):
                raise MeshError(
                    f"degenerate parallelotope cells (|det| ~ 0): {para[bad][:8].tolist()}")
            bits = corner_bits(self.dim)
            predicted = corners[para, :1, :] + np.einsum("cb,nbd->ncd", bits, edges)
            err = np.linalg.norm(corners[para] - predicted, axis=2).max(axis=1)
            bad = np.flatnonzero(err > PARALLELOTOPE_RTOL * diam[para])
            if len(bad):
                raise MeshError(
                    "cells are not parallelotopes (affine-image check failed): "
                    f"{para[bad][:8].tolist()}")
        quad = np.flatnonzero(self.cell_kind == GENERAL_QUAD_2D)
        if len(quad):
            cyc = corners[quad][:, [0, 1, 3, 2], :]  # binary order -> cyclic order
            edges = np.roll(cyc, -1, axis=1) - cyc
            cross = (edges[:, :, 0] * np.roll(edges, -1, axis=1)[:, :, 1]
                     - edges[:, :, 1] * np.roll(edges, -1, axis=1)[:, :, 0])
            bad = np.flatnonzero(~np.all(cross > 0.0, axis=1))
            if len(bad):
                raise MeshError(
                    f"non-convex (or wrongly oriented) quad cells: {quad[bad][:8].tolist()}")

    # -- facet table ------------------------------------------------------

    def _extract_facets(self):
        dim, cells = self.dim, self.cells
        n_cells = len(cells)
        n_slots = 2 * dim
        table = slot_corner_table(dim)

        slot_verts = cells[:, table]  # (n_cells, 2d, 2^(d-1))
        keys = np.sort(slot_verts.reshape(n_cells * n_slots, -1), axis=1)
        _, first, inverse, counts = np.unique(
            keys, axis=0, return_index=True, return_inverse=True, return_counts=True)
        if np.any(counts > 2):
            f = int(np.argmax(counts > 2))
            owners = np.flatnonzero(inverse == f) // n_slots
            raise MeshError(
                f"non-conforming mesh: a facet is shared by cells {owners.tolist()}")
        # Renumber facets in order of first appearance (cell-major, slot-minor).
        order = np.argsort(first, kind="stable")
        rank = np.empty_like(order)
        rank[order] = np.arange(len(order))
        facet_of_record = rank[inverse.ravel()]
        n_facets = len(counts)

        cell_facets = facet_of_record.reshape(n_cells, n_slots)
        facet_cells = np.full((n_facets, 2), -1, dtype=np.intp)
        facet_slots = np.full((n_facets, 2), -1, dtype=np.int8)
        rec_sorted = np.argsort(facet_of_record, kind="stable")
        f_sorted = facet_of_record[rec_sorted]
        group_starts = np.flatnonzero(np.r_[True, f_sorted[1:] != f_sorted[:-1]])
        sizes = np.diff(np.r_[group_starts, len(f_sorted)])
        pos = np.arange(len(f_sorted)) - np.repeat(group_starts, sizes)
        facet_cells[f_sorted, pos] = rec_sorted // n_slots
        facet_slots[f_sorted, pos] = (rec_sorted % n_slots).astype(np.int8)

        first_cell = facet_cells[:, 0]
        first_slot = facet_slots[:, 0].astype(np.intp)
        facet_vertices = cells[first_cell[:, None], table[first_slot]]

        self.cell_facets = cell_facets
        self.facet_cells = facet_cells
        self.facet_slots = facet_slots
        self.facet_vertices = facet_vertices
        self.facet_barycenters = self.vertices[facet_vertices].mean(axis=1)
        self.facet_is_boundary = facet_cells[:, 1] < 0
        flags = np.zeros(self.n_vertices, dtype=bool)
        flags[facet_vertices[self.facet_is_boundary].ravel()] = True
        self.vertex_is_boundary = flags

    def cell_facet_barycenters(self) -> np.ndarray:
        """Per-cell facet barycenters in slot order, shape (n_cells, 2d, d)."""
        return self.facet_barycenters[self.cell_facets]


def build_tensor_grid(dim: int, n: int, box=None) -> Mesh:
    """Uniform grid of n^dim box cells over `box` (default unit box).

    `box` is a (dim, 2) array of [low, high] per axis.
    """
    if dim < 2:
        raise MeshError(f"dimension must be >= 2, got {dim}")
    if n < 1:
        raise MeshError(f"subdivisions must be >= 1, got {n}")
    if box is None:
        box = np.repeat([[0.0, 1.0]], dim, axis=0)
    box = np.asarray(box, dtype=float)
    if box.shape != (dim, 2):
        raise MeshError(f"box must be ({dim}, 2), got {box.shape}")
    if np.any(box[:, 1] <= box[:, 0]):
        raise MeshError("inverted box: each high must exceed its low")

    axes = [np.linspace(box[i, 0], box[i, 1], n + 1) for i in range(dim)]
    grids = np.meshgrid(*axes, indexing="ij")
    # Axis 0 is the fastest-running index, matching corner bit order.
    vertices = np.stack([g.T.ravel() for g in grids], axis=1)

    strides = (n + 1) ** np.arange(dim)
    base_axes = [np.arange(n) for _ in range(dim)]
    base_mesh = np.meshgrid(*base_axes, indexing="ij")
    base = sum(g.T.ravel() * s for g, s in zip(base_mesh, strides))
    offsets = corner_bits(dim).astype(np.intp) @ strides
    cells = base[:, None] + offsets[None, :]
    return Mesh(dim, vertices, cells, PARALLELOTOPE)


def apply_affine_map(mesh: Mesh, matrix, shift=None) -> Mesh:
    """Map every vertex to matrix @ v + shift; connectivity is unchanged."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.shape != (mesh.dim, mesh.dim):
        raise MeshError(f"matrix must be ({mesh.dim}, {mesh.dim}), got {matrix.shape}")
    det = float(np.linalg.det(matrix))
    if abs(det) < 1e-12:
        raise MeshError(f"affine map is singular: det = {det:.3e}")
    shift = np.zeros(mesh.dim) if shift is None else np.asarray(shift, dtype=float)
    vertices = mesh.vertices @ matrix.T + shift
    return Mesh(mesh.dim, vertices, mesh.cells, mesh.cell_kind)


def build_perturbed_quad_mesh_2d(n: int, delta: float, seed: int) -> Mesh:
    """2D tensor grid with interior vertices jittered by up to delta*spacing.

    All cells carry kind general_quad_2d.  If the perturbation destroys
    strict convexity anywhere, construction fails naming the offending cell.
    """
    if delta < 0:
        raise MeshError(f"delta must be >= 0, got {delta}")
    grid = build_tensor_grid(2, n)
    vertices = grid.vertices.copy()
    interior = ~grid.vertex_is_boundary
    rng = np.random.default_rng(seed)
    spacing = 1.0 / n
    jitter = rng.uniform(-delta, delta, size=(int(interior.sum()), 2)) * spacing
    vertices[interior] += jitter
    return Mesh(2, vertices, grid.cells, GENERAL_QUAD_2D)


def validate_midpoint_coincidence(mesh: Mesh) -> np.ndarray:
    """Per-cell relative deviation of the opposite-barycenter midpoints.

    Pure report; callers assert against their own tolerance (1e-12 is
    appropriate for any valid cell of this mesh family).
    """
    return midpoint_deviations(mesh.cell_corners())


def facet_measures(mesh: Mesh) -> np.ndarray:
    """(d-1)-dimensional volume of every facet.

    Facets are parallelotopes of dimension d-1 (segments in 2D), so the
    Gram determinant of the edge vectors from the first corner is exact.
    """
    dim = mesh.dim
    if dim == 2:
        diff = mesh.vertices[mesh.facet_vertices[:, 1]] - mesh.vertices[mesh.facet_vertices[:, 0]]
        return np.linalg.norm(diff, axis=1)
    unit = 1 << np.arange(dim - 1)
    coords = mesh.vertices[mesh.facet_vertices]
    edges = coords[:, unit, :] - coords[:, :1, :]
    gram = np.einsum("fid,fjd->fij", edges, edges)
    return np.sqrt(np.linalg.det(gram))


def save_mesh(mesh: Mesh, path) -> None:
    """Write the line-oriented text format: header, vertex lines, cell lines."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{mesh.dim} {mesh.n_vertices} {mesh.n_cells}\n")
        for v in mesh.vertices:
            fh.write(" ".join(f"{x:.17g}" for x in v) + "\n")
        for c in mesh.cells:
            fh.write(" ".join(str(i) for i in c) + "\n")


def load_mesh(path) -> Mesh:
    """Read the text format written by save_mesh; facets are rebuilt.

    Cell kinds are not serialized: each cell is classified as a
    parallelotope if it passes the affine-image check, otherwise (2D only)
    as a general quad.
    """
    with open(path, encoding="ascii") as fh:
        tokens = fh.read().split("\n")
    header = tokens[0].split()
    if len(header) != 3:
        raise MeshError(f"bad mesh header: {tokens[0]!r}")
    dim, n_vertices, n_cells = (int(t) for t in header)
    vertices = np.array(
        [[float(x) for x in tokens[1 + i].split()] for i in range(n_vertices)])
    cells = np.array(
        [[int(x) for x in tokens[1 + n_vertices + i].split()] for i in range(n_cells)],
        dtype=np.intp)
    kind = np.full(n_cells, PARALLELOTOPE, dtype=np.uint8)
    corners = vertices[cells]
    diam = cell_diameters(corners)
    unit = 1 << np.arange(dim)
    edges = corners[:, unit, :] - corners[:, :1, :]
    bits = corner_bits(dim)
    predicted = corners[:, :1, :] + np.einsum("cb,nbd->ncd", bits, edges)
    err = np.linalg.norm(corners - predicted, axis=2).max(axis=1)
    not_affine = err > PARALLELOTOPE_RTOL * diam
    if np.any(not_affine):
        if dim != 2:
            raise MeshError(
                f"imported cells are not parallelotopes: {np.flatnonzero(not_affine)[:8].tolist()}")
        kind[not_affine] = GENERAL_QUAD_2D
    return Mesh(dim, vertices, cells, kind)
