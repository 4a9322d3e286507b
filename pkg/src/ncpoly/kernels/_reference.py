"""Pure-NumPy kernel implementations (fallback backend).

Same contracts as the compiled extension in _speedups.pyx; everything is
vectorized so the fallback stays usable at the full study sizes, just
slower than the compiled core.
"""

import numpy as np

BACKEND_NAME = "python"


def csr_matvec(indptr, indices, data, x):
    """y = M x for a CSR matrix given by (indptr, indices, data)."""
    n = len(indptr) - 1
    row_ids = np.repeat(np.arange(n, dtype=np.intp), np.diff(indptr))
    return np.bincount(row_ids, weights=data * x[indices], minlength=n)


def cg_csr(indptr, indices, data, b, rel_tol, max_iters, precond_diag=None):
    """Conjugate gradients on a CSR SPD system, zero initial guess.

    Returns (x, n_iters, rel_res) where ``rel_res = ||b - M x|| / ||b||``;
    convergence means rel_res <= rel_tol.  Optional Jacobi preconditioning
    via ``precond_diag`` (the matrix diagonal).
    """
    n = len(b)
    x = np.zeros(n)
    if n == 0:
        return x, 0, 0.0
    b_norm = float(np.sqrt(b @ b))
    if b_norm == 0.0:
        return x, 0, 0.0
    row_ids = np.repeat(np.arange(n, dtype=np.intp), np.diff(indptr))

    r = b.copy()
    z = r / precond_diag if precond_diag is not None else r.copy()
    p = z.copy()
    rz = float(r @ z)
    rel_res = float(np.sqrt(r @ r)) / b_norm
    for it in range(1, max_iters + 1):
        mp = np.bincount(row_ids, weights=data * p[indices], minlength=n)
        alpha = rz / float(p @ mp)
        x += alpha * p
        r -= alpha * mp
        rel_res = float(np.sqrt(r @ r)) / b_norm
        if rel_res <= rel_tol:
            return x, it, rel_res
        z = r / precond_diag if precond_diag is not None else r
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x, max_iters, rel_res


def local_matrices_const_grad(grads, a_weighted, vals=None, mass_w=None):
    """Cell matrices for elements with per-cell constant gradients.

    grads: (nc, d, nb) physical gradients; a_weighted: (nc, d, d) sum of
    weight*|J|*A over quadrature points; optional mass part adds
    sum_q mass_w[c,q] * vals[c,q,i] * vals[c,q,j].
    """
    out = np.einsum("cdi,cde,cej->cij", grads, a_weighted, grads, optimize=True)
    if mass_w is not None:
        out += np.einsum("cq,cqi,cqj->cij", mass_w, vals, vals, optimize=True)
    return out


def local_matrices_ref_grad(ref_grads, a_eff, vals=None, mass_w=None):
    """Cell matrices for parametric elements with point-dependent gradients.

    ref_grads: (nq, d, nb) reference gradients shared by all cells;
    a_eff: (nc, nq, d, d) holding weight*|J| * J^-1 A J^-T per point.
    """
    out = np.einsum("qdi,cqde,qej->cij", ref_grads, a_eff, ref_grads, optimize=True)
    if mass_w is not None:
        out += np.einsum("cq,cqi,cqj->cij", mass_w, vals, vals, optimize=True)
    return out
