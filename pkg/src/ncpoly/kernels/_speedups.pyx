# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernel implementations; contracts match _reference.py exactly."""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()

BACKEND_NAME = "compiled"


def csr_matvec(cnp.intp_t[::1] indptr, cnp.intp_t[::1] indices,
               double[::1] data, double[::1] x):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    out = np.zeros(n)
    cdef double[::1] y = out
    cdef Py_ssize_t i, k
    cdef double acc
    for i in range(n):
        acc = 0.0
        for k in range(indptr[i], indptr[i + 1]):
            acc += data[k] * x[indices[k]]
        y[i] = acc
    return out


cdef double _dot(double[::1] a, double[::1] b):
    cdef Py_ssize_t i
    cdef double acc = 0.0
    for i in range(a.shape[0]):
        acc += a[i] * b[i]
    return acc


def cg_csr(cnp.intp_t[::1] indptr, cnp.intp_t[::1] indices, double[::1] data,
           double[::1] b, double rel_tol, Py_ssize_t max_iters,
           precond_diag=None):
    cdef Py_ssize_t n = b.shape[0]
    x_arr = np.zeros(n)
    if n == 0:
        return x_arr, 0, 0.0
    cdef double b_norm = sqrt(_dot(b, b))
    if b_norm == 0.0:
        return x_arr, 0, 0.0

    cdef bint use_pc = precond_diag is not None
    pc_arr = np.ascontiguousarray(precond_diag, dtype=float) if use_pc else np.empty(0)
    r_arr = np.array(b, dtype=float, copy=True)
    cdef double[::1] x = x_arr
    cdef double[::1] r = r_arr
    cdef double[::1] pc = pc_arr
    z_arr = r_arr / pc_arr if use_pc else r_arr.copy()
    p_arr = z_arr.copy()
    mp_arr = np.empty(n)
    cdef double[::1] z = z_arr
    cdef double[::1] p = p_arr
    cdef double[::1] mp = mp_arr

    cdef double rz = _dot(r, z)
    cdef double rel_res = sqrt(_dot(r, r)) / b_norm
    cdef double alpha, beta, rz_new, acc
    cdef Py_ssize_t it, i, k
    for it in range(1, max_iters + 1):
        for i in range(n):
            acc = 0.0
            for k in range(indptr[i], indptr[i + 1]):
                acc += data[k] * p[indices[k]]
            mp[i] = acc
        alpha = rz / _dot(p, mp)
        for i in range(n):
            x[i] += alpha * p[i]
            r[i] -= alpha * mp[i]
        rel_res = sqrt(_dot(r, r)) / b_norm
        if rel_res <= rel_tol:
            return x_arr, it, rel_res
        if use_pc:
            for i in range(n):
                z[i] = r[i] / pc[i]
        else:
            for i in range(n):
                z[i] = r[i]
        rz_new = _dot(r, z)
        beta = rz_new / rz
        for i in range(n):
            p[i] = z[i] + beta * p[i]
        rz = rz_new
    return x_arr, max_iters, rel_res


def local_matrices_const_grad(double[:, :, ::1] grads, double[:, :, ::1] a_weighted,
                              vals=None, mass_w=None):
    cdef Py_ssize_t nc = grads.shape[0]
    cdef Py_ssize_t nd = grads.shape[1]
    cdef Py_ssize_t nb = grads.shape[2]
    out_arr = np.empty((nc, nb, nb))
    cdef double[:, :, ::1] out = out_arr
    tmp_arr = np.empty((nd, nb))
    cdef double[:, ::1] tmp = tmp_arr
    cdef bint with_mass = mass_w is not None
    cdef double[:, :, ::1] v
    cdef double[:, ::1] mw
    if with_mass:
        v = vals
        mw = mass_w
    cdef Py_ssize_t c, d, e, i, j, q, nq
    cdef double acc
    nq = mw.shape[1] if with_mass else 0
    for c in range(nc):
        for e in range(nd):
            for j in range(nb):
                acc = 0.0
                for d in range(nd):
                    acc += a_weighted[c, d, e] * grads[c, d, j]
                tmp[e, j] = acc
        for i in range(nb):
            for j in range(i, nb):
                acc = 0.0
                for e in range(nd):
                    acc += grads[c, e, i] * tmp[e, j]
                if with_mass:
                    for q in range(nq):
                        acc += mw[c, q] * v[c, q, i] * v[c, q, j]
                out[c, i, j] = acc
                out[c, j, i] = acc
    return out_arr


def local_matrices_ref_grad(double[:, :, ::1] ref_grads, double[:, :, :, ::1] a_eff,
                            vals=None, mass_w=None):
    cdef Py_ssize_t nq = ref_grads.shape[0]
    cdef Py_ssize_t nd = ref_grads.shape[1]
    cdef Py_ssize_t nb = ref_grads.shape[2]
    cdef Py_ssize_t nc = a_eff.shape[0]
    out_arr = np.zeros((nc, nb, nb))
    cdef double[:, :, ::1] out = out_arr
    tmp_arr = np.empty((nd, nb))
    cdef double[:, ::1] tmp = tmp_arr
    cdef bint with_mass = mass_w is not None
    cdef double[:, :, ::1] v
    cdef double[:, ::1] mw
    if with_mass:
        v = vals
        mw = mass_w
    cdef Py_ssize_t c, q, d, e, i, j
    cdef double acc
    for c in range(nc):
        for q in range(nq):
            for e in range(nd):
                for j in range(nb):
                    acc = 0.0
                    for d in range(nd):
                        acc += a_eff[c, q, d, e] * ref_grads[q, d, j]
                    tmp[e, j] = acc
            for i in range(nb):
                for j in range(i, nb):
                    acc = 0.0
                    for e in range(nd):
                        acc += ref_grads[q, e, i] * tmp[e, j]
                    out[c, i, j] += acc
        if with_mass:
            for i in range(nb):
                for j in range(i, nb):
                    acc = 0.0
                    for q in range(nq):
                        acc += mw[c, q] * v[c, q, i] * v[c, q, j]
                    out[c, i, j] += acc
        for i in range(nb):
            for j in range(i + 1, nb):
                out[c, j, i] = out[c, i, j]
    return out_arr
