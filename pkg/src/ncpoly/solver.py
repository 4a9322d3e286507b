"""SPD solvers: kernel-backed conjugate gradients and a dense oracle."""

import numpy as np

from . import kernels

__all__ = ["SolverError", "solve_cg", "solve_dense"]


class SolverError(RuntimeError):
    """CG failed to reach the requested tolerance."""

    def __init__(self, message, residual):
        self.residual = residual
        super().__init__(message)


def solve_cg(system, rel_tol: float = 1e-10, max_iters: int | None = None,
             jacobi: bool = False):
    """Solve an assembled SPD system; returns (x, n_iterations).

    Deterministic for a fixed system (zero start, fixed update order).
    Raises SolverError with the final relative residual if max_iters is
    exhausted before ||Mx - b|| <= rel_tol * ||b||.
    """
    if max_iters is None:
        max_iters = max(100, 10 * system.n_dofs)
    precond = system.diagonal() if jacobi else None
    x, iters, rel_res = kernels.cg_csr(
        system.indptr, system.indices, system.data, system.rhs,
        rel_tol, max_iters, precond)
    if rel_res > rel_tol:
        raise SolverError(
            f"CG did not converge in {iters} iterations "
            f"(relative residual {rel_res:.3e} > {rel_tol:.3e})", rel_res)
    return x, iters


def solve_dense(system) -> np.ndarray:
    """Dense Cholesky factorization oracle for small systems.

    Independent of the CG path; intended for n_dofs up to a few thousand.
    Raises np.linalg.LinAlgError if the matrix is not positive definite.
    """
    dense = system.to_dense()
    chol = np.linalg.cholesky(dense)
    y = np.linalg.solve(chol, system.rhs)
    return np.linalg.solve(chol.T, y)
