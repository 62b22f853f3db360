"""
Gaussian-process branch and bound for noise-free global optimization.

The optimizer alternates two steps on a dyadic lattice: sample a cover of
the current search region at half the previous resolution, then shrink the
region to the ball around all points whose upper confidence bound still
beats the best lower bound.
"""

__version__ = "0.1.0"

from .baselines import (
    LipschitzConfig,
    UcbBaselineConfig,
    lipschitz_eliminate,
    lipschitz_run,
    lipschitz_upper_bound,
    plain_ucb_run,
)
from .bnb import (
    BnbConfig,
    IterationRecord,
    OptimizerState,
    RegretTrace,
    TraceRow,
    beta_schedule,
    densify,
    initial_state,
    relevant_mask,
    run,
    shrink,
)
from .errors import (
    ConfigError,
    GpBnbError,
    InvalidInputError,
    ResolutionExhausted,
    SingularGramError,
    UnsupportedKernelError,
)
from .gp import CandidatePredictor, GpPosterior, Interpolant, fit, interpolation_error_bound
from .kernels import (
    DerivativeBounds,
    KernelSpec,
    derivative_bound_L,
    derivative_bound_Q,
    derivative_bounds,
    eval_kernel,
    gram_matrix,
    kernel_matrix,
)
from .lattice import (
    BoxDomain,
    DyadicLattice,
    LatticeReport,
    Region,
    check_lattice_conditions,
    cover_points,
    covering_number,
    enclosing_ball,
    farthest_pair,
    lattice_points,
)
from .sampler import (
    TabulatedObjective,
    estimate_peak_constants,
    make_rng,
    sample_gp_prior,
    synthetic_peak,
    verify_peak_condition,
)
