"""Caputo fractional differential equations with non-instantaneous impulses.

A numpy/scipy toolkit for solving scalar and vector Caputo fractional
initial value problems whose state is overridden by explicit impulse maps
on whole intervals, for evaluating fractional Dini derivatives of Lyapunov
candidates along such systems, and for checking comparison bounds and
epsilon-delta stability on the computed trajectories.
"""

from .special_functions import (
    ML_MAX_ARG,
    GammaPoleError,
    MLParameterError,
    MLRangeError,
    SpecialFunctionError,
    gamma,
    ml_one,
    ml_two,
)
from .fractional_calculus import (
    DiniEstimate,
    GlWeights,
    SampledFunction,
    caputo_derivative_quadrature,
    caputo_dini_estimate,
    gl_weights,
    rl_kernel,
)
from .solver import (
    FlowProblem,
    FlowSolution,
    SolverDivergenceError,
    integral_residual,
    solve_frde,
)
from .impulsive import (
    ImpulseSchedule,
    NifrdeProblem,
    ScheduleCheck,
    Segment,
    Trajectory,
    check_zero_conditions,
    left_limit,
    locate,
    solve_nifrde,
    validate_schedule,
)
from .lyapunov import (
    DiniEvalContext,
    FlowDomainError,
    LimitEstimate,
    LyapunovFunction,
    ProductForm,
    caputo_fractional_dini,
    check_impulse_decrease,
    closed_form_product,
    dini_fractional,
    quadratic_candidate,
)
from .stability import (
    ClassKFunction,
    StabilityReport,
    attraction_time_bound,
    probe_uniform_stability,
    reports_to_csv,
    schedule_impulse_mass,
    verify_comparison,
    verify_comparison_decay,
    verify_quadratic_corollary,
)

__version__ = "0.1.0"
