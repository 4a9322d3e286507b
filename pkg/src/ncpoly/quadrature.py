"""Quadrature rules on the reference cube and reference simplex.

The cube rules are tensor products of 1D Gauss-Legendre rules on [-1, 1];
the simplex rules come from the Duffy (collapsed-coordinate) map of a
tensor Gauss rule on [0, 1]^d, which keeps them exact for polynomials of
any requested total degree in every dimension.
"""

from dataclasses import dataclass
from itertools import product
from math import ceil

import numpy as np

__all__ = ["QuadratureRule", "tensor_gauss_rule", "simplex_gauss_rule"]


@dataclass(frozen=True)
class QuadratureRule:
    """A fixed set of reference-domain points and positive weights."""

    domain: str  # "cube" ([-1,1]^d) or "simplex" (conv{0, e_1, ..., e_d})
    dim: int
    points: np.ndarray  # (n_points, dim)
    weights: np.ndarray  # (n_points,)

    @property
    def n_points(self) -> int:
        return self.points.shape[0]


def tensor_gauss_rule(dim: int, k: int) -> QuadratureRule:
    """Tensor-product Gauss-Legendre rule with k points per axis on [-1,1]^dim.

    Exact for polynomials of per-axis degree <= 2k-1; weights sum to 2^dim.
    """
    if dim < 1:
        raise ValueError(f"dimension must be >= 1, got {dim}")
    if k < 1:
        raise ValueError(f"points per axis must be >= 1, got {k}")
    nodes, w1 = np.polynomial.legendre.leggauss(k)
    idx = np.array(list(product(range(k), repeat=dim)), dtype=np.intp)
    points = nodes[idx]
    weights = np.prod(w1[idx], axis=1)
    return QuadratureRule("cube", dim, points, weights)


def simplex_gauss_rule(dim: int, degree: int) -> QuadratureRule:
    """Rule on the unit reference simplex, exact for total degree <= degree.

    Built by pushing a tensor Gauss rule on [0,1]^dim through the Duffy map
    x_i = t_i * (1 - x_1 - ... - x_{i-1}); the map raises per-axis degrees by
    at most dim-1 (Jacobian included), which fixes the Gauss order below.
    Weights sum to the simplex volume 1/dim!.
    """
    if dim < 1:
        raise ValueError(f"dimension must be >= 1, got {dim}")
    if degree < 0:
        raise ValueError(f"degree must be >= 0, got {degree}")
    k = max(1, ceil((degree + dim) / 2))
    nodes, w1 = np.polynomial.legendre.leggauss(k)
    t1 = 0.5 * (nodes + 1.0)  # shift to [0,1]
    wt1 = 0.5 * w1
    idx = np.array(list(product(range(k), repeat=dim)), dtype=np.intp)
    t = t1[idx]  # (nq, dim)
    w = np.prod(wt1[idx], axis=1)
    points = np.empty_like(t)
    remaining = np.ones(t.shape[0])
    for i in range(dim):
        points[:, i] = t[:, i] * remaining
        w *= remaining  # Jacobian factor d x_i / d t_i
        remaining = remaining * (1.0 - t[:, i])
    return QuadratureRule("simplex", dim, points, w)
