#!/usr/bin/env python3
"""Compare the compiled kernel backend against the NumPy fallback.

Times the three hot paths (CSR matvec, full CG solve, local-matrix
accumulation) on a realistic assembled problem, then an end-to-end
assemble+solve with each backend swapped in.

    python benchmarks/bench_kernels.py [--dim 3] [--n 16] [--repeats 3]
"""

import argparse
import time

import numpy as np

import ncpoly.kernels as kernels
from ncpoly.assembly import assemble
from ncpoly.dofmap import build_dof_map
from ncpoly.manufactured import make_problem
from ncpoly.mesh import build_tensor_grid
from ncpoly.solver import solve_cg


def best_of(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


class backend_swap:
    """Temporarily rebind the kernel functions to a named backend."""

    NAMES = ("csr_matvec", "cg_csr", "local_matrices_const_grad",
             "local_matrices_ref_grad")

    def __init__(self, name):
        self.impl = kernels.get_backend(name)

    def __enter__(self):
        self.saved = {n: getattr(kernels, n) for n in self.NAMES}
        for n in self.NAMES:
            setattr(kernels, n, getattr(self.impl, n))

    def __exit__(self, *exc):
        for n, fn in self.saved.items():
            setattr(kernels, n, fn)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--dim", type=int, default=3)
    parser.add_argument("--n", type=int, default=16)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    backends = ["python"]
    try:
        kernels.get_backend("compiled")
        backends.append("compiled")
    except ImportError:
        print("note: compiled kernels not built; timing the fallback only")

    mesh = build_tensor_grid(args.dim, args.n)
    coeff, exact = make_problem("varcoef", args.dim)
    dofs = build_dof_map(mesh, "p1nc")
    system = assemble(mesh, dofs, coeff)
    rng = np.random.default_rng(0)
    x = rng.uniform(-1.0, 1.0, system.n_dofs)

    nb = 1 << args.dim
    nc, nq = 2048, 4 ** args.dim
    grads = rng.uniform(-1, 1, (nc, args.dim, nb))
    a_sym = rng.uniform(-1, 1, (nc, args.dim, args.dim))
    a_weighted = np.ascontiguousarray(a_sym + a_sym.transpose(0, 2, 1))
    vals = rng.uniform(-1, 1, (nc, nq, nb))
    mass_w = rng.uniform(0.1, 1.0, (nc, nq))

    print(f"problem: dim={args.dim} n={args.n} "
          f"({system.n_dofs} dofs, {system.nnz} nonzeros, {mesh.n_cells} cells)")
    header = f"{'kernel':<28}" + "".join(f"{b:>14}" for b in backends)
    print(header)
    print("-" * len(header))

    rows = {
        "csr_matvec": lambda k: k.csr_matvec(
            system.indptr, system.indices, system.data, x),
        "cg_csr (tol 1e-10)": lambda k: k.cg_csr(
            system.indptr, system.indices, system.data, system.rhs,
            1e-10, 10 * system.n_dofs),
        "local matrices (2048 cells)": lambda k: k.local_matrices_const_grad(
            grads, a_weighted, vals, mass_w),
    }
    times = {}
    for label, call in rows.items():
        cells = []
        for name in backends:
            impl = kernels.get_backend(name)
            t = best_of(lambda: call(impl), args.repeats)
            times[(label, name)] = t
            cells.append(f"{t * 1e3:12.2f}ms")
        print(f"{label:<28}" + "".join(f"{c:>14}" for c in cells))

    print()
    for name in backends:
        with backend_swap(name):
            t = best_of(lambda: solve_cg(assemble(mesh, build_dof_map(mesh, 'p1nc'),
                                                  coeff))[0], args.repeats)
        print(f"end-to-end assemble+solve [{name:>8}]: {t:8.3f}s")
    if len(backends) == 2:
        for label in rows:
            ratio = times[(label, "python")] / times[(label, "compiled")]
            print(f"speedup {label}: {ratio:.1f}x")


if __name__ == "__main__":
    main()
