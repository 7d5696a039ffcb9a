"""Solver and regularity diagnostics for Dirichlet problems whose source
depends on the superlevel-set measure of the unknown, driven by fully
nonlinear uniformly elliptic operators."""

from .calculus import (EIGEN, DiscreteDerivatives, WideStencil,
                       assemble_residual, derivatives, directional_dd,
                       lip_seminorm, residual_values)
from .diagnostics import (NormReport, apriori_ratios, c01_norm,
                          compute_norm_report, holder_gradient, lp_norm,
                          pbmo_of_field, pbmo_of_hessian, pbmo_seminorm,
                          w2p_norm)
from .driver import (ContinuationTrace, OuterConfig, RadialProfile,
                     delta_continuation, delta_schedule, fixed_point_solve,
                     interp_to_grid, picard_step, radial_oracle, sup_diff)
from .errors import (ConfigurationError, DiagnosticError, DivergenceError,
                     GeometryError, GradMercierError, NonConvergenceError,
                     OracleError)
from .frozen import (AbpRecord, FrozenConfig, SolveReport, abp_check,
                     auto_tau, sandwich_check, solve_frozen)
from .grid import (DomainGrid, DomainShape, ScalarField, boundary_average,
                   build_grid, constant_field, field_from_function,
                   interp_boundary, load_field_csv, load_field_json,
                   sample_boundary, save_field_csv, save_field_json)
from .operators import (Ellipticity, OperatorSpec, SymMat2,
                        asym_convex_operator, bellman_operator,
                        check_smallness, check_structure_condition,
                        eval_operator, linear_operator, oscillation_beta,
                        pucci_minus, pucci_operator, pucci_plus,
                        quad_trace_probe, recession_eval, trace_operator)
from .source import (DistributionFunction, SourceSpec, build_distribution,
                     grad_mercier_source, level_flatness, mollified_source,
                     source_field, superlevel_measure)

__version__ = "0.1.0"
