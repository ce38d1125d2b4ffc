"""Potential-theoretic reduction of the incompressible Navier-Stokes
equations on a periodic truncation of the layer R^n x [0,T]: exterior
calculus on sampled forms, weighted Holder norm estimators, Newton and heat
potentials, and the fixed-point solver for the reduced vorticity equation."""

from .geometry import INFINITY, CylinderPoint, GridSpec, compactify, cyl_metric, \
    pair_weight, weight
from .forms import FormField, bilinear_advective, codifferential, exterior_derivative, \
    heat_operator, hodge_star, laplacian_form, substantial_derivative, \
    verify_factorization, wedge
from .holder import HolderParams, NormReport, anisotropic_norm, f_norm, holder_seminorm, \
    l2_embedding_constant, spatial_norm, weighted_sup
from .potentials import PotentialConfig, corrected_kernel, grad_newton, heat_kernel, \
    key0_bound_check, newton_kernel, newton_potential, poisson_potential, trace, \
    volume_potential
from .analysis import AbelSeries, abel_coefficients, harmonic_basis, harmonic_poly_count, \
    moment_check, series_F
from .nse import FlowState, LinearizationData, SolverConfig, assemble_g0, energy_report, \
    frechet_apply, leray_project, nse_residual, op_D2, op_Q, op_U0, op_V0, op_W0, \
    recover_pressure, recover_velocity, solution_metric, solve_linear_reduced, \
    solve_nse, solve_reduced

__version__ = "0.1.0"
