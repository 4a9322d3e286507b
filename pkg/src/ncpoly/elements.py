"""Local finite element spaces.

The main element keeps a plain linear polynomial a0 + a.x on every
combinatorial-cube cell and parametrizes it by its 2d facet-barycenter
values, which are admissible exactly when all d opposite-pair sums agree.
The classical nonconforming baselines (Crouzeix-Raviart on simplices,
rotated-Q1 and DSSY on cubes) are provided as reference-cell bases.
"""

from dataclasses import dataclass

import numpy as np

from .mesh import Mesh, slot_corner_table
from .quadrature import tensor_gauss_rule

__all__ = [
    "LocalP1",
    "ConstraintError",
    "ElementError",
    "ElementKind",
    "ELEMENTS",
    "element_kind",
    "check_constraints",
    "solve_local_from_facet_values",
    "solve_facet_batch",
    "facet_values_of",
    "local_interpolate",
    "corner_basis_coefficients",
    "corner_facet_values",
    "dssy_theta",
    "dssy_theta_prime",
    "ReferenceBasis",
    "reference_basis",
    "mvp_check",
]


class ConstraintError(ValueError):
    """Facet values violate the opposite-pair sum constraints."""

    def __init__(self, residuals):
        self.residuals = np.asarray(residuals)
        super().__init__(
            f"inadmissible facet values, constraint residuals {self.residuals}")


class ElementError(ValueError):
    """Degenerate cell or unsupported element/dimension combination."""


@dataclass
class LocalP1:
    """The linear polynomial x -> a0 + a . x on one cell."""

    a0: float
    a: np.ndarray

    def __call__(self, points):
        points = np.asarray(points, dtype=float)
        return self.a0 + points @ self.a

    @property
    def gradient(self) -> np.ndarray:
        return self.a


def check_constraints(values) -> np.ndarray:
    """Residuals r_j = (pair sum j+1) - (pair sum 1), j = 1..d-1.

    `values` holds the 2d facet values in slot order (axis-major, minus
    side first); all residuals vanish iff the values are admissible.
    """
    values = np.asarray(values, dtype=float)
    pair_sums = values[0::2] + values[1::2]
    return pair_sums[1:] - pair_sums[0]


def _facet_system(barycenters):
    """Coefficient matrices of the local solve, shape (n, d+1, d+1).

    Row 0 interpolates at the common opposite-pair midpoint, rows 1..d at
    the d minus-side barycenters (the simplex from the uniqueness proof).
    """
    n, _, dim = barycenters.shape
    centers = 0.5 * (barycenters[:, 0] + barycenters[:, 1])
    mat = np.empty((n, dim + 1, dim + 1))
    mat[:, :, 0] = 1.0
    mat[:, 0, 1:] = centers
    mat[:, 1:, 1:] = barycenters[:, 0::2]
    return mat


def solve_facet_batch(barycenters, targets):
    """Solve many local systems at once.

    barycenters: (n, 2d, d) facet barycenters in slot order per cell.
    targets: (n, 2d) admissible facet values, or (n, 2d, m) for m value
    sets per cell.  Returns coefficients (n, d+1) or (n, d+1, m) with
    component 0 the constant and 1.. the gradient.  Admissibility is the
    caller's contract; no constraint check happens here.
    """
    barycenters = np.asarray(barycenters, dtype=float)
    targets = np.asarray(targets, dtype=float)
    single = targets.ndim == 2
    if single:
        targets = targets[:, :, None]
    rhs = np.empty((targets.shape[0], barycenters.shape[2] + 1, targets.shape[2]))
    rhs[:, 0] = 0.5 * (targets[:, 0] + targets[:, 1])
    rhs[:, 1:] = targets[:, 0::2]
    try:
        coeffs = np.linalg.solve(_facet_system(barycenters), rhs)
    except np.linalg.LinAlgError as exc:
        raise ElementError(f"degenerate cell in local solve: {exc}") from exc
    return coeffs[:, :, 0] if single else coeffs


def solve_local_from_facet_values(mesh: Mesh, cell_id: int, values,
                                  tol: float = 1e-8) -> LocalP1:
    """Unique linear polynomial taking the given facet-barycenter values.

    Rejects values whose constraint residual exceeds tol * max(1, |values|).
    """
    values = np.asarray(values, dtype=float)
    if values.shape != (2 * mesh.dim,):
        raise ElementError(f"expected {2 * mesh.dim} facet values, got {values.shape}")
    residuals = check_constraints(values)
    scale = max(1.0, float(np.abs(values).max()))
    if np.abs(residuals).max(initial=0.0) > tol * scale:
        raise ConstraintError(residuals)
    mu = mesh.facet_barycenters[mesh.cell_facets[cell_id]]
    coeffs = solve_facet_batch(mu[None], values[None])[0]
    return LocalP1(float(coeffs[0]), coeffs[1:])


def facet_values_of(p: LocalP1, mesh: Mesh, cell_id: int) -> np.ndarray:
    """Evaluate a local polynomial at the cell's 2d facet barycenters."""
    mu = mesh.facet_barycenters[mesh.cell_facets[cell_id]]
    return p(mu)


def local_interpolate(u, mesh: Mesh, cell_id: int) -> LocalP1:
    """Local interpolant: facet values are the vertex means of u per facet.

    Vertex means are admissible by construction on combinatorial cubes
    (both facets of a pair partition the cell's vertex set); this is
    asserted numerically rather than trusted.
    """
    table = slot_corner_table(mesh.dim)
    corners = mesh.cell_corners([cell_id])[0]
    corner_u = np.asarray(u(corners), dtype=float)
    values = corner_u[table].mean(axis=1)
    return solve_local_from_facet_values(mesh, cell_id, values, tol=1e-10)


def corner_facet_values(dim: int) -> np.ndarray:
    """Facet values of the 2^d corner basis functions, shape (2d, 2^d).

    Column c is the value set of the basis function attached to corner c:
    1 on the d facets containing the corner, 0 on the opposite ones.  Every
    opposite pair sums to 1, so each column is admissible.
    """
    n_corners = 1 << dim
    c = np.arange(n_corners)
    values = np.empty((2 * dim, n_corners))
    for axis in range(dim):
        on_plus = (c >> axis) & 1
        values[2 * axis] = 1.0 - on_plus
        values[2 * axis + 1] = on_plus
    return values


def corner_basis_coefficients(mesh: Mesh, cell_ids=None) -> np.ndarray:
    """LocalP1 coefficients of all corner basis restrictions per cell.

    Returns (n_cells, d+1, 2^d); column c holds [a0, a] of the basis
    function that is 1 at the barycenters of the facets containing local
    corner c and 0 opposite.  Works for parallelotope and general-quad
    cells alike since the element is nonparametric.
    """
    facets = mesh.cell_facets if cell_ids is None else mesh.cell_facets[cell_ids]
    mu = mesh.facet_barycenters[facets]
    targets = np.broadcast_to(corner_facet_values(mesh.dim)[None],
                              (len(facets), 2 * mesh.dim, 1 << mesh.dim))
    return solve_facet_batch(mu, targets)


# -- classical baseline reference elements ---------------------------------


def dssy_theta(ell: int, t):
    """Profile functions t^2, t^2 - 5/3 t^4, t^2 - 25/6 t^4 + 7/2 t^6.

    ell = 0 reproduces the rotated-Q1 profile; ell = 1, 2 have zero mean
    over [-1, 1], which is what buys the mean value property.
    """
    t = np.asarray(t, dtype=float)
    t2 = t * t
    if ell == 0:
        return t2
    if ell == 1:
        return t2 - (5.0 / 3.0) * t2 * t2
    if ell == 2:
        return t2 - (25.0 / 6.0) * t2 * t2 + 3.5 * t2 * t2 * t2
    raise ValueError(f"theta index must be 0, 1 or 2, got {ell}")


def dssy_theta_prime(ell: int, t):
    t = np.asarray(t, dtype=float)
    if ell == 0:
        return 2.0 * t
    if ell == 1:
        return 2.0 * t - (20.0 / 3.0) * t ** 3
    if ell == 2:
        return 2.0 * t - (50.0 / 3.0) * t ** 3 + 21.0 * t ** 5
    raise ValueError(f"theta index must be 0, 1 or 2, got {ell}")


@dataclass(frozen=True)
class ElementKind:
    name: str
    family: str  # "p1nc" | "cr" | "rotated"
    dof_style: str  # "point" | "integral"
    theta_ell: int | None
    dims: tuple[int, ...] | None  # None: any dimension >= 2
    mesh_family: str  # "cube" | "simplex"

    def supports_dim(self, dim: int) -> bool:
        return dim >= 2 and (self.dims is None or dim in self.dims)


ELEMENTS = {
    "p1nc": ElementKind("p1nc", "p1nc", "point", None, None, "cube"),
    "cr": ElementKind("cr", "cr", "point", None, None, "simplex"),
    "rq1-point": ElementKind("rq1-point", "rotated", "point", 0, (2, 3), "cube"),
    "rq1-integral": ElementKind("rq1-integral", "rotated", "integral", 0, (2, 3), "cube"),
    "dssy1": ElementKind("dssy1", "rotated", "point", 1, (2, 3), "cube"),
    "dssy2": ElementKind("dssy2", "rotated", "point", 2, (2, 3), "cube"),
}


def element_kind(name: str) -> ElementKind:
    try:
        return ELEMENTS[name]
    except KeyError:
        raise ElementError(
            f"unknown element {name!r}; choose from {sorted(ELEMENTS)}") from None


def _modal_cube(dim: int, ell: int):
    """Spanning set {1, x_1..x_d, theta(x_m)-theta(x_d)} of the rotated space."""

    def values(pts):
        pts = np.asarray(pts, dtype=float)
        out = np.empty((len(pts), 2 * dim))
        out[:, 0] = 1.0
        out[:, 1:dim + 1] = pts
        last = dssy_theta(ell, pts[:, dim - 1])
        for m in range(dim - 1):
            out[:, dim + 1 + m] = dssy_theta(ell, pts[:, m]) - last
        return out

    def grads(pts):
        pts = np.asarray(pts, dtype=float)
        out = np.zeros((len(pts), dim, 2 * dim))
        for i in range(dim):
            out[:, i, 1 + i] = 1.0
        last = dssy_theta_prime(ell, pts[:, dim - 1])
        for m in range(dim - 1):
            out[:, m, dim + 1 + m] = dssy_theta_prime(ell, pts[:, m])
            out[:, dim - 1, dim + 1 + m] = -last
        return out

    return values, grads


def _modal_simplex(dim: int):
    def values(pts):
        pts = np.asarray(pts, dtype=float)
        out = np.empty((len(pts), dim + 1))
        out[:, 0] = 1.0
        out[:, 1:] = pts
        return out

    def grads(pts):
        pts = np.asarray(pts, dtype=float)
        out = np.zeros((len(pts), dim, dim + 1))
        for i in range(dim):
            out[:, i, 1 + i] = 1.0
        return out

    return values, grads


def cube_facet_barycenters(dim: int) -> np.ndarray:
    """Facet barycenters of [-1,1]^dim in slot order: -e_1, +e_1, -e_2, ..."""
    out = np.zeros((2 * dim, dim))
    for axis in range(dim):
        out[2 * axis, axis] = -1.0
        out[2 * axis + 1, axis] = 1.0
    return out


def cube_facet_quadrature(dim: int, k: int = 4):
    """Embedded Gauss points and mean-weights per facet of [-1,1]^dim.

    Returns (points, weights) with points (2*dim, k^(dim-1), dim) and
    weights (k^(dim-1),) summing to 1, so w . f(points) is the facet mean.
    """
    rule = tensor_gauss_rule(dim - 1, k)
    sub, w = rule.points, rule.weights / 2.0 ** (dim - 1)
    points = np.empty((2 * dim, len(w), dim))
    for axis in range(dim):
        rest = [i for i in range(dim) if i != axis]
        for side in (0, 1):
            sl = points[2 * axis + side]
            sl[:, axis] = -1.0 if side == 0 else 1.0
            sl[:, rest] = sub
    return points, w


def simplex_facet_barycenters(dim: int) -> np.ndarray:
    """Facet barycenters of conv{0, e_1, .., e_d}; slot i omits vertex i."""
    verts = np.vstack([np.zeros(dim), np.eye(dim)])
    out = np.empty((dim + 1, dim))
    for i in range(dim + 1):
        keep = [j for j in range(dim + 1) if j != i]
        out[i] = verts[keep].mean(axis=0)
    return out


class ReferenceBasis:
    """Reference-cell shape functions dual to an element's DOF functionals."""

    def __init__(self, kind: ElementKind, dim: int):
        if kind.family == "p1nc":
            raise ElementError(
                "p1nc has no parametric reference basis; it is built per cell "
                "from facet values (see corner_basis_coefficients)")
        if not kind.supports_dim(dim):
            raise ElementError(f"element {kind.name} does not support dimension {dim}")
        self.kind = kind
        self.dim = dim
        if kind.family == "cr":
            self.n_basis = dim + 1
            self._modal_values, self._modal_grads = _modal_simplex(dim)
            self.dof_points = simplex_facet_barycenters(dim)
            # phi_i = 1 - d*lambda_i expressed over the monomials [1, x].
            coeffs = np.empty((dim + 1, dim + 1))
            coeffs[0, 0] = 1.0 - dim
            coeffs[1:, 0] = dim
            coeffs[0, 1:] = 1.0
            coeffs[1:, 1:] = -dim * np.eye(dim)
            self.coeffs = coeffs
        else:
            self.n_basis = 2 * dim
            self._modal_values, self._modal_grads = _modal_cube(dim, kind.theta_ell)
            self.dof_points = cube_facet_barycenters(dim)
            dof = self._apply_dofs(self._modal_values)
            self.coeffs = np.linalg.inv(dof)

    def _apply_dofs(self, value_fn):
        """DOF functionals applied to a batch-evaluable function set."""
        if self.kind.dof_style == "point":
            return value_fn(self.dof_points)
        pts, w = cube_facet_quadrature(self.dim)
        return np.einsum("q,fqm->fm", w, np.stack([value_fn(p) for p in pts]))

    def values(self, points) -> np.ndarray:
        """Shape function values, shape (n_points, n_basis)."""
        return self._modal_values(points) @ self.coeffs

    def gradients(self, points) -> np.ndarray:
        """Shape function gradients, shape (n_points, dim, n_basis)."""
        return np.einsum("pdm,mb->pdb", self._modal_grads(points), self.coeffs)

    def dof_matrix(self) -> np.ndarray:
        """DOF_i(phi_j); the identity up to roundoff by construction."""
        return self._apply_dofs(self.values)


def reference_basis(kind, dim: int) -> ReferenceBasis:
    """Shape functions on the reference cell for a baseline element kind."""
    if isinstance(kind, str):
        kind = element_kind(kind)
    return ReferenceBasis(kind, dim)


def mvp_check(kind, dim: int) -> np.ndarray:
    """Barycenter-value vs facet-mean deviation over the local space.

    Returns |f(xi_j) - mean_{F_j} f| for every spanning function f of the
    cube element's local space (rows) and every facet (columns).  The mean
    value property holds for the space iff all entries vanish, so checking
    the spanning set is equivalent to checking every member.
    """
    if isinstance(kind, str):
        kind = element_kind(kind)
    if kind.mesh_family != "cube":
        raise ElementError(f"mvp_check applies to cube elements, not {kind.name}")
    if not kind.supports_dim(dim):
        raise ElementError(f"element {kind.name} does not support dimension {dim}")
    if kind.family == "rotated":
        values_fn, _ = _modal_cube(dim, kind.theta_ell)
    else:  # p1nc: local space is plain P1
        values_fn, _ = _modal_simplex(dim)
    bary = cube_facet_barycenters(dim)
    at_bary = values_fn(bary)  # (2d, n_modal)
    pts, w = cube_facet_quadrature(dim)
    means = np.einsum("q,fqm->fm", w, np.stack([values_fn(p) for p in pts]))
    return np.abs(at_bary - means).T
