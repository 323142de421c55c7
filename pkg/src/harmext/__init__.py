"""Harmonic extension extremal problem on the unit ball: quadrature, operators, functionals and solvers."""

__version__ = "0.1.0"

from .carleman import CarlemanSeries, DiskPoint, carleman_sides, disk_harmonic_eval
from .functionals import (
    FunctionalConfig,
    carleman_check,
    critical_exponent,
    extremal_degree,
    extremal_family,
    q_functional,
    random_positive_field,
    second_order_coefficient,
    second_order_fit,
    sharp_constant_critical,
    supercritical_constant,
    theta_ratio,
    weighted_iso_ratio,
)
from .kernel_expansion import (
    GeometryData,
    HemisphereField,
    a0,
    ball_a1_closed_form,
    ball_kernel_fermi_oracle,
    rhs_b0,
    solve_a1,
)
from .poisson import (
    BallSample,
    apply_T,
    extend,
    extension_by_kernel,
    extension_lq_norm,
    harmonic_extension,
    poisson_kernel_ball,
    poisson_kernel_halfspace,
)
from .rearrangement import AxisymmetricField, distribution_function, extension_comparison, symmetric_rearrangement
from .sht import SpectralField, analyze, tangential_gradient, tangential_gradient_pairing, with_spectrum
from .solver import (
    KWWeight,
    SolverConfig,
    SolverReport,
    concentration_profile,
    el_residual,
    kw_defect,
    manufacture_weight,
    solve_el,
)
from .sphere import (
    BoundaryField,
    DomainError,
    RadialRule,
    SphereGrid,
    ball_volume,
    build_radial_rule,
    build_sphere_grid,
    lp_norm_boundary,
    sphere_area,
)
