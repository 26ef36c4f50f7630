"""Reference oracles and the randomized estimate suite."""

from .oracles import analytic_free_rotation, dense_elliptic_oracle, rk4_reference
from .suite import (
    CHECKS,
    OracleReport,
    coarse_config,
    derivative_moduli,
    load_tolerances,
    observed_orders,
    run_estimate_suite,
    tangent_fd_errors,
)

__all__ = [
    "CHECKS",
    "OracleReport",
    "analytic_free_rotation",
    "coarse_config",
    "dense_elliptic_oracle",
    "derivative_moduli",
    "load_tolerances",
    "observed_orders",
    "rk4_reference",
    "run_estimate_suite",
    "tangent_fd_errors",
]
