"""One-shot optimization of unsteady time-marching solvers.

Instead of converging the PDE/ODE solve before every design update,
the coupled iteration advances primal state, adjoint state and design
together, one cheap sweep of each per iteration.  The forward sweep
applies a single quasi-Newton update per time step; the backward sweep
is its exact linearization, so the gradient needs no hand-derived
adjoint; an adaptive time rescaling keeps the iteration count from
growing with the number of time steps.
"""

from .adjoint import (
    StepJacobians,
    adjoint_sweep,
    jacobian_transpose_product,
    jacobian_vector_product,
    objective_JN,
    reduced_gradient,
)
from .core import (
    AdjointTrajectory,
    ConvergenceError,
    DivergenceError,
    Model,
    TimeGrid,
    Trajectory,
    make_time_grid,
    trajectory_norm,
)
from .inner import (
    CirculantFactorization,
    DenseFactorization,
    Factor2x2,
    InnerPreconditioner,
    be_residual,
    build_preconditioner,
    qn_step,
    solve_timestep,
    time_march,
)
from .models import AdvectionDiffusionModel, ControlledVdpModel, VanDerPolModel
from .oneshot import (
    BfgsState,
    OneShotConfig,
    OneShotState,
    OptimizationReport,
    bfgs_update,
    make_initial_state,
    oneshot_step,
    run_nested,
    run_oneshot,
)
from .sweep import (
    HistoryRow,
    RescaledTimes,
    SimulationResult,
    SweepReport,
    estimate_contraction,
    march_init,
    rescale_times,
    resample_to_grid,
    residual_report,
    simulate,
    sweep_H,
    sweep_with_rescaling,
)

__version__ = "0.1.0"

__all__ = [
    "AdjointTrajectory",
    "AdvectionDiffusionModel",
    "BfgsState",
    "CirculantFactorization",
    "ControlledVdpModel",
    "ConvergenceError",
    "DenseFactorization",
    "DivergenceError",
    "Factor2x2",
    "HistoryRow",
    "InnerPreconditioner",
    "Model",
    "OneShotConfig",
    "OneShotState",
    "OptimizationReport",
    "RescaledTimes",
    "SimulationResult",
    "StepJacobians",
    "SweepReport",
    "TimeGrid",
    "Trajectory",
    "VanDerPolModel",
    "adjoint_sweep",
    "be_residual",
    "bfgs_update",
    "build_preconditioner",
    "estimate_contraction",
    "jacobian_transpose_product",
    "jacobian_vector_product",
    "make_initial_state",
    "make_time_grid",
    "march_init",
    "objective_JN",
    "oneshot_step",
    "qn_step",
    "reduced_gradient",
    "resample_to_grid",
    "rescale_times",
    "residual_report",
    "run_nested",
    "run_oneshot",
    "simulate",
    "solve_timestep",
    "sweep_H",
    "sweep_with_rescaling",
    "time_march",
    "trajectory_norm",
]
