"""Plate and squeeze-film pressure model on an interval or rectangle.

The plate deflection gap w and the film pressure u evolve under a pinned
fourth-order plate equation forced electrostatically and by the pressure,
with a Reynolds-type elliptic constraint for u. Time stepping works on the
lifted state (v~, w~) in the energy space L2 x H2o.
"""

__version__ = "0.1.0"

from .config import SimConfig, load_config, reference_config
from .elliptic import EllipticProblem, EllipticSolution, dv_S_o, dw_S_o, measure_C_o, measure_C_o_star, solve_S_o
from .errors import (
    ConfigurationError,
    DomainViolationError,
    IterationFailure,
    OracleFailure,
    QuenchError,
    SqueezeSimError,
)
from .evolution import (
    ConstantsLedger,
    compute_constants,
    duhamel_step,
    evolve,
    lipschitz_in_time_report,
    picard_solve,
    tangent_solve,
)
from .nonlinearity import BallSpec, PhysParams, ball_check, eval_G, eval_Gprime
from .semigroup import PinnedOperator, StateX, apply_Aop, generator_check, inner_X, norm_X, semigroup_apply
from .spectral import (
    Grid1D,
    Grid2DRect,
    GridField,
    SpectralCoeffs,
    dst_forward,
    dst_inverse,
    embedding_constant_estimate,
    laplace_eigenvalue,
    norm_H2,
    norm_H2o,
    norm_Hneg1,
    norm_L2,
)
from .trajectory import QuenchEvent, Trajectory
