"""Online approximate optimal control with state-following kernel bases.

A model-based actor-critic learns the value function of a continuous-time
control-affine problem along the trajectory: the kernel centers travel
with the state, the Bellman error is also evaluated at model-extrapolated
points around the state, and a forgetting-factor least-squares gain matrix
conditions the critic update.  Two benchmark experiments ship with the
package: regulation of a planar system whose optimal solution is known in
closed form, and trajectory tracking with a concurrently identified drift.
"""

from .adp import (AdpGains, BePoint, actor_rhs, bellman_point, critic_rhs,
                  gamma_bounds, gamma_lower_bound, gamma_rhs, policy,
                  value_estimate)
from .basis import (ShrinkFunction, StaFBasis, centers, grad_sigma,
                    grad_sigma_at, sigma, sigma_at, simplex_offsets,
                    triangle_offsets)
from .config import ExperimentSetup, effective_dict, from_dict, load
from .dynamics import (AnalyticSolution, ControlAffineSystem, CostSpec,
                       TrackingProblem, hjb_residual, optimal_policy_from_gradient,
                       regulation_benchmark, running_cost, tracking_benchmark,
                       tracking_feedforward, tracking_transform)
from .errors import NumericRangeError, ValidationError
from .excitation import (ExtrapolationPolicy, PeEstimate, min_effective_eig,
                         pe_windows, sample_points, sufficient_condition_report)
from .sim import (SimConfig, Trajectory, metrics, regulation_defaults,
                  run_regulation, run_tracking, tracking_defaults)
from .sysid import (DerivativeFilter, HistoryStack, LinearDriftModel,
                    SysIdGains, THETA_TRUE, features_benchmark,
                    identifier_rhs, identifier_step, stack_insert)

__version__ = "0.1.0"

__all__ = [
    "AdpGains", "AnalyticSolution", "BePoint", "ControlAffineSystem",
    "CostSpec", "DerivativeFilter", "ExperimentSetup", "ExtrapolationPolicy",
    "HistoryStack", "LinearDriftModel", "NumericRangeError", "PeEstimate",
    "ShrinkFunction", "SimConfig", "StaFBasis", "SysIdGains", "THETA_TRUE",
    "TrackingProblem", "Trajectory", "ValidationError", "actor_rhs",
    "bellman_point", "centers", "critic_rhs", "effective_dict",
    "features_benchmark", "from_dict", "gamma_bounds", "gamma_lower_bound",
    "gamma_rhs", "grad_sigma", "grad_sigma_at", "hjb_residual",
    "identifier_rhs", "identifier_step", "load", "metrics",
    "min_effective_eig", "optimal_policy_from_gradient", "pe_windows", "policy",
    "regulation_benchmark", "regulation_defaults", "run_regulation",
    "run_tracking", "running_cost", "sample_points", "sigma", "sigma_at",
    "simplex_offsets", "stack_insert", "sufficient_condition_report",
    "tracking_benchmark", "tracking_defaults", "tracking_feedforward",
    "tracking_transform", "triangle_offsets", "value_estimate",
]
