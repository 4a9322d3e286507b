"""Coefficient fields of the elliptic operator -div(A grad u) + c u."""

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = ["CoefficientField", "laplace_field", "helmholtz_like_field", "varcoef_field"]


@dataclass
class CoefficientField:
    """Diffusion matrix A, reaction c and forcing f.

    A is given either as a constant symmetric matrix (a_const) or as a
    diagonal field (a_diag with per-entry x-derivatives a_diag_div, needed
    only when forcings are derived analytically).  All callables take
    points shaped (n, d).
    """

    dim: int
    name: str = "custom"
    a_const: np.ndarray | None = None  # (d, d)
    a_diag: Callable | None = None  # (n, d) -> (n, d) diagonal entries
    a_diag_div: Callable | None = None  # (n, d) -> (n, d): d(a_ii)/dx_i
    c_const: float | None = 0.0
    c_fn: Callable | None = None
    f: Callable | None = None

    def __post_init__(self):
        if (self.a_const is None) == (self.a_diag is None):
            raise ValueError("exactly one of a_const / a_diag must be given")
        if self.a_const is not None:
            self.a_const = np.asarray(self.a_const, dtype=float)
            if self.a_const.shape != (self.dim, self.dim):
                raise ValueError(f"a_const must be ({self.dim}, {self.dim})")
            if not np.allclose(self.a_const, self.a_const.T, atol=1e-14):
                raise ValueError("a_const must be symmetric")

    @property
    def has_mass(self) -> bool:
        return self.c_fn is not None or (self.c_const is not None and self.c_const != 0.0)

    def c_at(self, pts) -> np.ndarray:
        if self.c_fn is not None:
            return np.asarray(self.c_fn(pts), dtype=float)
        return np.full(len(pts), float(self.c_const or 0.0))

    def with_forcing(self, f) -> "CoefficientField":
        return CoefficientField(self.dim, self.name, self.a_const, self.a_diag,
                                self.a_diag_div, self.c_const, self.c_fn, f)


def laplace_field(dim: int) -> CoefficientField:
    """A = I, c = 0."""
    return CoefficientField(dim, "laplace", a_const=np.eye(dim), c_const=0.0)


def helmholtz_like_field(dim: int) -> CoefficientField:
    """A = I, c = 1 (positive reaction, still SPD)."""
    return CoefficientField(dim, "helmholtz-like", a_const=np.eye(dim), c_const=1.0)


def varcoef_field(dim: int) -> CoefficientField:
    """A = diag(1 + x_i / 2), c = 1."""
    return CoefficientField(
        dim, "varcoef",
        a_diag=lambda pts: 1.0 + 0.5 * np.asarray(pts, dtype=float),
        a_diag_div=lambda pts: np.full_like(np.asarray(pts, dtype=float), 0.5),
        c_const=1.0)
