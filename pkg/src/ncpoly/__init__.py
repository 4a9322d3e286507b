"""P1-nonconforming polyhedral finite elements on parallelotope meshes.

A dimension-generic library and CLI: cube-cell mesh generation, the
facet-value P1 element with classical nonconforming baselines, sparse
Galerkin assembly with conjugate gradients, and a manufactured-solution
convergence laboratory.
"""

__version__ = "0.1.0"

from .assembly import (SparseSystem, assemble, combined_local_p1,
                       jump_mean_check, jump_mean_from_local,
                       local_solution_coefficients, write_matrix_market,
                       write_rhs_vector)
from .coefficients import CoefficientField
from .dofmap import DofMap, apply_dirichlet_inhomogeneous, build_dof_map
from .elements import (ELEMENTS, ConstraintError, ElementError, ElementKind,
                       LocalP1, check_constraints, corner_basis_coefficients,
                       dssy_theta, element_kind, facet_values_of,
                       local_interpolate, mvp_check, reference_basis,
                       solve_local_from_facet_values)
from .femspace import AssemblyError
from .manufactured import (COEFF_PRESETS, ManufacturedSolution, make_problem,
                           product_sine_solution)
from .mesh import (GENERAL_QUAD_2D, PARALLELOTOPE, Mesh, MeshError,
                   apply_affine_map, build_perturbed_quad_mesh_2d,
                   build_tensor_grid, facet_measures, load_mesh,
                   midpoint_deviations, save_mesh, validate_midpoint_coincidence)
from .norms import error_broken_h1, error_l2, p1_errors, solution_errors
from .quadrature import QuadratureRule, simplex_gauss_rule, tensor_gauss_rule
from .simplex import SimplexMesh, kuhn_subdivide
from .solver import SolverError, solve_cg, solve_dense
from .study import (H1_WINDOW, L2_WINDOW, StudyReport, StudyRow, fit_rate,
                    interpolation_study, make_mesh_family, run_patch_test,
                    shear_matrix, solve_study, unisolvency_roundtrip)
