"""Manufactured solutions with analytically derived forcings.

The default solution is the product of sines on the (possibly affinely
mapped) unit box: it vanishes on the boundary, is smooth, and has a
nonzero second seminorm.  Gradients and Hessians are closed-form, so the
forcing -div(A grad u) + c u needs no symbolic algebra.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .coefficients import (CoefficientField, helmholtz_like_field,
                           laplace_field, varcoef_field)

__all__ = [
    "ManufacturedSolution",
    "product_sine_solution",
    "COEFF_PRESETS",
    "make_problem",
]


@dataclass
class ManufacturedSolution:
    """Exact solution with analytic gradient and Hessian (all batch callables)."""

    name: str
    dim: int
    u: Callable  # (n, d) -> (n,)
    grad_u: Callable  # (n, d) -> (n, d)
    hess_u: Callable  # (n, d) -> (n, d, d)
    hess_diag_u: Callable | None = None  # optional cheap (n, d) diagonal

    def _hess_diag(self, pts) -> np.ndarray:
        if self.hess_diag_u is not None:
            return np.asarray(self.hess_diag_u(pts))
        return np.einsum("ndd->nd", self.hess_u(pts))

    def forcing(self, coeff: CoefficientField) -> Callable:
        """The f with -div(A grad u) + c u = f for this solution."""

        def f(pts):
            pts = np.asarray(pts, dtype=float)
            if coeff.a_const is not None:
                a = coeff.a_const
                off_diag = a - np.diag(np.diagonal(a))
                if not np.any(off_diag):
                    div_flux = self._hess_diag(pts) @ np.diagonal(a)
                else:
                    div_flux = np.einsum("de,nde->n", a, self.hess_u(pts))
            else:
                div_flux = (np.asarray(coeff.a_diag(pts)) * self._hess_diag(pts)).sum(axis=1)
                div_flux += (np.asarray(coeff.a_diag_div(pts)) * self.grad_u(pts)).sum(axis=1)
            out = -div_flux
            if coeff.has_mass:
                out = out + coeff.c_at(pts) * self.u(pts)
            return out

        return f


def _leave_one_out(columns: np.ndarray) -> np.ndarray:
    """Products over all columns except i, per row; shape preserved."""
    n, d = columns.shape
    pre = np.ones((n, d + 1))
    np.cumprod(columns, axis=1, out=pre[:, 1:])
    suf = np.ones((n, d + 1))
    suf[:, :-1] = np.cumprod(columns[:, ::-1], axis=1)[:, ::-1]
    return pre[:, :d] * suf[:, 1:]


def product_sine_solution(dim: int, matrix=None, shift=None) -> ManufacturedSolution:
    """u(x) = prod_i sin(pi y_i) with y = S^-1 (x - t); zero on the box image.

    With matrix=None this is the classic product of sines on [0, 1]^dim.
    """
    identity = matrix is None
    inv = np.eye(dim) if identity else np.linalg.inv(np.asarray(matrix, dtype=float))
    name = "sinprod" if identity else "sinprod-mapped"
    t = np.zeros(dim) if shift is None else np.asarray(shift, dtype=float)
    shifted = shift is not None

    def pulled(pts):
        pts = np.asarray(pts, dtype=float)
        if identity:
            return pts - t if shifted else pts
        return (pts - t) @ inv.T

    def u(pts):
        return np.prod(np.sin(np.pi * pulled(pts)), axis=1)

    def grad_u(pts):
        y = pulled(pts)
        s, c = np.sin(np.pi * y), np.cos(np.pi * y)
        grad_y = np.pi * c * _leave_one_out(s)
        return grad_y if identity else grad_y @ inv

    def _hess_pulled(y):
        s, c = np.sin(np.pi * y), np.cos(np.pi * y)
        n, d = y.shape
        hess_y = np.empty((n, d, d))
        pi2 = np.pi * np.pi
        diag = -pi2 * np.prod(s, axis=1)
        for i in range(d):
            hess_y[:, i, i] = diag
            for j in range(i + 1, d):
                rest = [k for k in range(d) if k != i and k != j]
                cross = pi2 * c[:, i] * c[:, j] * np.prod(s[:, rest], axis=1)
                hess_y[:, i, j] = cross
                hess_y[:, j, i] = cross
        return hess_y

    def hess_u(pts):
        hess_y = _hess_pulled(pulled(pts))
        if identity:
            return hess_y
        return np.einsum("jk,njm,ml->nkl", inv, hess_y, inv)

    def hess_diag_u(pts):
        y = pulled(pts)
        if identity:
            diag = -np.pi * np.pi * np.prod(np.sin(np.pi * y), axis=1)
            return np.repeat(diag[:, None], dim, axis=1)
        return np.einsum("ji,njm,mi->ni", inv, _hess_pulled(y), inv)

    return ManufacturedSolution(name, dim, u, grad_u, hess_u, hess_diag_u)


COEFF_PRESETS = {
    "laplace": laplace_field,
    "helmholtz-like": helmholtz_like_field,
    "varcoef": varcoef_field,
}


def make_problem(preset: str, dim: int, matrix=None, shift=None):
    """Coefficient field (with forcing) and exact solution for a preset name."""
    try:
        field = COEFF_PRESETS[preset](dim)
    except KeyError:
        raise ValueError(
            f"unknown coefficient preset {preset!r}; choose from {sorted(COEFF_PRESETS)}"
        ) from None
    exact = product_sine_solution(dim, matrix, shift)
    return field.with_forcing(exact.forcing(field)), exact
