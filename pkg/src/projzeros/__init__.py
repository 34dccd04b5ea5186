"""Zero statistics of Gaussian random polynomial systems on CP^m.

Sections of the N-th power of the hyperplane bundle with the
Fubini-Study Gaussian ensemble: exact kernels, zero finding, linear
statistics of zero sets, their exact variances, and the limiting
variance forms that govern asymptotic normality.
"""

__version__ = "0.1.0"

from .analysis import (Estimate, ExperimentConfig, HermitianFormMatrix,
                       VarianceQuad, bmk_form, counting_variance_experiment,
                       leading_constants, mc_estimate, normality_test,
                       run_experiment, universal_integral,
                       variance_quadrature)
from .bipotential import f_derivs, gtilde, li2, q_n, var_infty
from .ensemble import (Section, basis_dimension, basis_weights, eval_log_norm,
                       eval_poly, sample_section, section_from_json,
                       section_to_json)
from .errors import ProjZerosError
from .geometry import (CapRegion, ProjectivePoint, build_grid, cap_area,
                       cap_boundary_length, fs_distance, fs_volume,
                       normal_frame, random_point)
from .kernel import (far_decay_report, kernel_context, kernel_of_distance,
                     near_remainder, normalized_kernel)
from .roots import ZeroSet, find_roots
from .statistics import (count_in_cap, linear_stat_pl, linear_stat_roots,
                         pl_trials, roots_trials)
from .testforms import (TestForm, form_from_params, harmonic_form,
                        hermitian_form, list_families)

__all__ = [
    "__version__",
    "Estimate", "ExperimentConfig", "HermitianFormMatrix", "VarianceQuad",
    "bmk_form", "counting_variance_experiment", "leading_constants",
    "mc_estimate", "normality_test",
    "run_experiment", "universal_integral", "variance_quadrature",
    "f_derivs", "gtilde", "li2", "q_n", "var_infty",
    "Section", "basis_dimension", "basis_weights", "eval_log_norm",
    "eval_poly", "sample_section", "section_from_json", "section_to_json",
    "ProjZerosError",
    "CapRegion", "ProjectivePoint", "build_grid", "cap_area",
    "cap_boundary_length", "fs_distance", "fs_volume", "normal_frame",
    "random_point",
    "far_decay_report", "kernel_context", "kernel_of_distance",
    "near_remainder", "normalized_kernel",
    "ZeroSet", "find_roots",
    "count_in_cap", "linear_stat_pl", "linear_stat_roots", "pl_trials",
    "roots_trials",
    "TestForm", "form_from_params", "harmonic_form", "hermitian_form",
    "list_families",
]
