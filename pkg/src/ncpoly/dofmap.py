"""Global degree-of-freedom maps for the nonconforming spaces.

The main element couples one degree of freedom to every interior vertex
(its basis function takes facet value 1 on the facets containing the
vertex and 0 opposite, which every opposite pair sums to 1).  The
baseline elements couple one degree of freedom to every interior facet.
Boundary entities never carry unknowns; inhomogeneous data enters as a
lift vector over boundary entities.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .elements import ElementError, ElementKind, element_kind
from .mesh import Mesh, PARALLELOTOPE
from .quadrature import tensor_gauss_rule
from .simplex import SimplexMesh

__all__ = ["DofMap", "build_dof_map", "apply_dirichlet_inhomogeneous"]


@dataclass
class DofMap:
    mode: str  # "vertex_basis_p1nc" | "facet_basis"
    element: ElementKind
    mesh: object
    bc: str
    n_dofs: int
    entity_dof: np.ndarray  # per entity (vertex or facet): dof id or -1
    cell_entities: np.ndarray  # (n_cells, n_local) entity ids
    cell_dofs: np.ndarray = field(init=False)  # (n_cells, n_local) dof ids or -1

    def __post_init__(self):
        self.cell_dofs = self.entity_dof[self.cell_entities]

    @property
    def n_local(self) -> int:
        return self.cell_entities.shape[1]


def build_dof_map(mesh, kind, bc: str = "homogeneous_dirichlet") -> DofMap:
    """Number the active entities of the element's global space.

    p1nc: one dof per interior vertex; baselines: one dof per interior
    facet.  Boundary entities never carry unknowns.
    """
    if isinstance(kind, str):
        kind = element_kind(kind)
    if bc not in ("homogeneous_dirichlet", "facet_mean_dirichlet"):
        raise ValueError(f"unknown boundary condition {bc!r}")
    if not kind.supports_dim(mesh.dim):
        raise ElementError(f"element {kind.name} does not support dimension {mesh.dim}")
    if kind.mesh_family == "simplex" and not isinstance(mesh, SimplexMesh):
        raise ElementError(f"element {kind.name} requires a simplicial mesh")
    if kind.mesh_family == "cube" and not isinstance(mesh, Mesh):
        raise ElementError(f"element {kind.name} requires a cube-cell mesh")
    if kind.family == "rotated" and np.any(mesh.cell_kind != PARALLELOTOPE):
        raise ElementError(
            f"element {kind.name} is parametric and needs parallelotope cells")

    if kind.family == "p1nc":
        mode = "vertex_basis_p1nc"
        active = ~mesh.vertex_is_boundary
        cell_entities = mesh.cells
    else:
        mode = "facet_basis"
        active = ~mesh.facet_is_boundary
        cell_entities = mesh.cell_facets
    entity_dof = np.full(len(active), -1, dtype=np.intp)
    entity_dof[active] = np.arange(int(active.sum()))
    n_dofs = int(active.sum())
    if n_dofs == 0:
        warnings.warn("mesh has no interior entities; the system is empty",
                      stacklevel=2)
    return DofMap(mode, kind, mesh, bc, n_dofs, entity_dof, cell_entities)


def apply_dirichlet_inhomogeneous(mesh, dofs: DofMap, g) -> np.ndarray:
    """Boundary lift values per entity for facet-mean Dirichlet data.

    p1nc: boundary vertex V gets g(V) / 2^(d-1), which makes every boundary
    facet value the vertex mean of g (the facet-mean surrogate consistent
    with barycenter-value dofs).  Facet-basis elements: boundary facets get
    g at the facet barycenter (point dofs) or the true facet mean of g
    (integral dofs).  Interior entities are zero; assembly folds the lift
    into the right-hand side.
    """
    if dofs.bc != "facet_mean_dirichlet":
        raise ValueError("dof map was not built with facet_mean_dirichlet")
    lift = np.zeros(len(dofs.entity_dof))
    if dofs.mode == "vertex_basis_p1nc":
        on_boundary = mesh.vertex_is_boundary
        scale = 2.0 ** (1 - mesh.dim)
        lift[on_boundary] = scale * np.asarray(g(mesh.vertices[on_boundary]))
        return lift
    on_boundary = mesh.facet_is_boundary
    if dofs.element.dof_style == "integral":
        lift[on_boundary] = _facet_means(mesh, np.flatnonzero(on_boundary), g)
    else:
        lift[on_boundary] = np.asarray(g(mesh.facet_barycenters[on_boundary]))
    return lift


def _facet_means(mesh, facet_ids, g, k: int = 4) -> np.ndarray:
    """Mean of g over parallelogram facets by tensor Gauss quadrature."""
    dim = mesh.dim
    coords = mesh.vertices[mesh.facet_vertices[facet_ids]]
    origin = coords[:, 0]
    unit = 1 << np.arange(dim - 1)
    edges = coords[:, unit, :] - origin[:, None, :]
    rule = tensor_gauss_rule(dim - 1, k)
    lam = 0.5 * (rule.points + 1.0)
    pts = origin[:, None, :] + np.einsum("qi,nid->nqd", lam, edges)
    w = rule.weights / 2.0 ** (dim - 1)
    vals = np.asarray(g(pts.reshape(-1, dim))).reshape(len(facet_ids), -1)
    return vals @ w
