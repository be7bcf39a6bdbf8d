"""Coupled one-shot optimization and the nested baseline.

The one-shot iteration advances primal, adjoint and design
simultaneously in Jacobi fashion: every block of iteration k+1 is
evaluated at the iteration-k values.

    y^{k+1}    = H(y^k, u^k)                (one forward sweep)
    ybar^{k+1} = dJ_N/dy + (dH/dy)^T ybar^k (one backward sweep)
    u^{k+1}    = u^k - B_k^{-1} g^k         (preconditioned design step)

with g the reduced gradient assembled from the same linearization and
B_k a BFGS approximation of the reduced Hessian.  The iteration stops
when primal residual, adjoint increment and reduced gradient are all
below eps_stop; a fresh evaluation at the accepted triple confirms the
lagged in-loop test before convergence is declared.

``run_nested`` is the classical alternative (fully converge the primal
and adjoint for every design step); it exists as the correctness and
cost baseline.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .adjoint import StepJacobians, adjoint_sweep, objective_JN, reduced_gradient
from .core import (
    AdjointTrajectory,
    DivergenceError,
    Model,
    TimeGrid,
    Trajectory,
    Vector,
    trajectory_norm,
)
from .inner import time_march
from .sweep import (
    HistoryRow,
    march_init,
    residual_report,
    simulate,
    sweep_H,
    sweep_with_rescaling,
)

__all__ = [
    "BfgsState",
    "OneShotConfig",
    "OneShotState",
    "OptimizationReport",
    "bfgs_update",
    "make_initial_state",
    "oneshot_step",
    "run_oneshot",
    "run_nested",
]

# relative curvature threshold below which a BFGS pair is discarded
CURVATURE_GUARD = 1e-12


@dataclass(frozen=True)
class BfgsState:
    """Direct BFGS approximation of the reduced Hessian plus its memory."""

    B: Vector
    last_u: Vector | None = None
    last_g: Vector | None = None


@dataclass(frozen=True)
class OneShotConfig:
    """Knobs of the coupled iteration.

    alpha and beta are the augmented-Lagrangian weights of the design
    preconditioner; only the plain BFGS variant (both zero) is
    implemented, and nonzero values are rejected up front rather than
    silently ignored.

    The defaults run the damped inner step (p_scale 2.0) with a
    conservative cap on the design step.  The coupled iteration needs
    the state to lag the design a little; an exactly solved primal with
    full-length design steps tends to limit-cycle instead of settling.
    """

    eps_stop: float = 1e-3
    max_iter: int = 3000
    alpha: float = 0.0
    beta: float = 0.0
    b0_scale: float = 1.0
    rescaling: bool = True
    design_freeze: int = 10
    p_scale: float = 2.0
    inner_tol: float = 1e-10
    max_design_step: float = 0.25
    use_kernels: bool = True
    u0: tuple | None = None

    def __post_init__(self):
        if not self.eps_stop > 0.0:
            raise ValueError(f"eps_stop must be positive, got {self.eps_stop}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be at least 1, got {self.max_iter}")
        if self.alpha != 0.0 or self.beta != 0.0:
            raise ValueError(
                "augmented-Lagrangian design preconditioning is not "
                "implemented: alpha and beta must be 0.0"
            )
        if not self.b0_scale > 0.0:
            raise ValueError(f"b0_scale must be positive, got {self.b0_scale}")
        if self.design_freeze < 0:
            raise ValueError(f"design_freeze must be >= 0, got {self.design_freeze}")
        if not self.p_scale > 0.0:
            raise ValueError(f"p_scale must be positive, got {self.p_scale}")
        if not self.inner_tol > 0.0:
            raise ValueError(f"inner_tol must be positive, got {self.inner_tol}")
        if not self.max_design_step > 0.0:
            raise ValueError(
                f"max_design_step must be positive, got {self.max_design_step}"
            )


@dataclass
class OneShotState:
    """Current triple (trajectory, adjoint, design) plus optimizer memory."""

    traj: Trajectory
    adj: AdjointTrajectory
    u: Vector
    bfgs: BfgsState
    k: int
    history: list

    def __post_init__(self):
        if len(self.history) != self.k:
            raise ValueError("history length must equal the iteration count")


@dataclass
class OptimizationReport:
    """Outcome of an optimization (or pure simulation) run."""

    converged: bool
    iterations: int
    u: Vector
    jn: float
    reduced_grad_norm: float
    primal_residual: float
    adjoint_delta: float
    history: list
    retardation_factor: float | None = None
    simulation_iterations: int | None = None
    total_inner_iterations: int | None = None
    message: str = ""


def bfgs_update(B: Vector, s: Vector, w: Vector):
    """Direct BFGS update of the Hessian approximation.

        B <- B - (B s s^T B) / (s^T B s) + (w w^T) / (s^T w)

    The pair is skipped (B returned unchanged) when the curvature
    ``<s, w>`` is not safely positive; the result is symmetrized to kill
    rounding drift, which together with the curvature guard keeps B
    symmetric positive definite.

    Returns:
        (B_new, applied) where applied says whether the pair was used.
    """
    sw = float(s @ w)
    if sw <= CURVATURE_GUARD * np.linalg.norm(s) * np.linalg.norm(w):
        return B, False
    Bs = B @ s
    sBs = float(s @ Bs)
    if sBs <= 0.0:
        return B, False
    B_new = B - np.outer(Bs, Bs) / sBs + np.outer(w, w) / sw
    B_new = 0.5 * (B_new + B_new.T)
    return B_new, True


def make_initial_state(model: Model, grid: TimeGrid, config: OneShotConfig) -> OneShotState:
    """Single-pass marching primal start, zero adjoint, scaled-identity BFGS."""
    u0 = (
        np.asarray(config.u0, dtype=float)
        if config.u0 is not None
        else model.initial_design()
    )
    if u0.shape != (model.design_dim,):
        raise ValueError(
            f"initial design has shape {u0.shape}, expected ({model.design_dim},)"
        )
    traj = march_init(model, grid, u0, p_scale=config.p_scale)
    adj = AdjointTrajectory(np.zeros_like(traj.states))
    bfgs = BfgsState(B=config.b0_scale * np.eye(model.design_dim))
    return OneShotState(traj=traj, adj=adj, u=u0, bfgs=bfgs, k=0, history=[])


def _design_step(state: OneShotState, g: Vector, config: OneShotConfig):
    """BFGS-preconditioned design update from the iteration-k gradient."""
    bfgs = state.bfgs
    B = bfgs.B
    if bfgs.last_u is not None and np.linalg.norm(state.u - bfgs.last_u) > 0.0:
        B, _ = bfgs_update(B, state.u - bfgs.last_u, g - bfgs.last_g)
    if state.k + 1 > config.design_freeze and state.u.size:
        step = np.linalg.solve(B, g)
        norm = float(np.linalg.norm(step))
        if norm > config.max_design_step:
            step *= config.max_design_step / norm
        u_new = state.u - step
    else:
        u_new = state.u.copy()
    return u_new, BfgsState(B=B, last_u=state.u.copy(), last_g=g.copy())


def oneshot_step(
    state: OneShotState, model: Model, grid: TimeGrid, config: OneShotConfig
) -> OneShotState:
    """One coupled Jacobi update of (trajectory, adjoint, design).

    All three blocks read the iteration-k values; nothing within the
    step sees another block's fresh output.  Non-finite values in any
    block raise DivergenceError naming the offending block.
    """
    jacs = StepJacobians(state.traj, state.u, model, p_scale=config.p_scale)
    g = reduced_gradient(
        state.traj, state.adj, state.u, model, jacobians=jacs
    )
    if not np.isfinite(g).all():
        raise DivergenceError(
            "design gradient produced non-finite values", block="design"
        )
    try:
        adj_new = adjoint_sweep(
            state.traj, state.adj, state.u, model, jacobians=jacs
        )
    except ValueError as err:
        raise DivergenceError(
            f"adjoint update produced non-finite values: {err}", block="adjoint"
        ) from err
    try:
        if config.rescaling:
            traj_new, report = sweep_with_rescaling(
                state.traj, state.u, model,
                p_scale=config.p_scale, use_kernels=config.use_kernels,
                iteration_index=state.k + 1,
            )
        else:
            traj_new = sweep_H(
                state.traj, state.u, model,
                p_scale=config.p_scale, use_kernels=config.use_kernels,
            )
            report = residual_report(
                traj_new, state.u, model, iteration_index=state.k + 1
            )
    except ValueError as err:
        raise DivergenceError(
            f"primal sweep produced non-finite values: {err}", block="primal"
        ) from err
    u_new, bfgs_new = _design_step(state, g, config)
    if not np.isfinite(u_new).all():
        raise DivergenceError(
            "design update produced non-finite values", block="design"
        )
    prev_total = state.history[-1].total_residual if state.history else None
    row = HistoryRow(
        iter=state.k + 1,
        total_residual=report.total_residual,
        per_step_residual_max=float(report.per_step_residual.max()),
        jn=objective_JN(traj_new, u_new, model),
        reduced_grad_norm=float(np.linalg.norm(g)),
        rho_estimate=report.total_residual / prev_total if prev_total else 0.0,
        rescaling_accepted_fraction=report.rescaling_accepted_fraction,
    )
    return OneShotState(
        traj=traj_new,
        adj=adj_new,
        u=u_new,
        bfgs=bfgs_new,
        k=state.k + 1,
        history=state.history + [row],
    )


def _kkt_residuals(state: OneShotState, model: Model, config: OneShotConfig):
    """Fresh primal/adjoint/gradient residuals at the state's own triple."""
    report = residual_report(state.traj, state.u, model)
    jacs = StepJacobians(state.traj, state.u, model, p_scale=config.p_scale)
    adj_next = adjoint_sweep(
        state.traj, state.adj, state.u, model, jacobians=jacs
    )
    delta = trajectory_norm(adj_next.multipliers - state.adj.multipliers)
    g = reduced_gradient(state.traj, state.adj, state.u, model, jacobians=jacs)
    return report.total_residual, delta, float(np.linalg.norm(g))


def run_oneshot(model: Model, grid: TimeGrid, config: OneShotConfig) -> OptimizationReport:
    """Drive the coupled iteration to the eps_stop stationarity test.

    Convergence requires primal residual, adjoint increment and reduced
    gradient norm to drop below ``config.eps_stop`` together, verified
    by a fresh evaluation at the accepted triple.  Hitting max_iter
    returns a report with ``converged=False`` instead of raising.  The
    report carries the retardation factor: iterations of this coupled
    run divided by the sweep count of a plain simulation at the final
    design (same tolerance, same rescaling setting).
    """
    state = make_initial_state(model, grid, config)
    converged = False
    primal = adjoint_delta = grad_norm = np.inf
    while state.k < config.max_iter:
        prev_adj = state.adj
        state = oneshot_step(state, model, grid, config)
        row = state.history[-1]
        lagged_delta = trajectory_norm(
            state.adj.multipliers - prev_adj.multipliers
        )
        primal = row.total_residual
        adjoint_delta = lagged_delta
        grad_norm = row.reduced_grad_norm
        if (
            primal <= config.eps_stop
            and lagged_delta <= config.eps_stop
            and grad_norm <= config.eps_stop
        ):
            primal, adjoint_delta, grad_norm = _kkt_residuals(state, model, config)
            if max(primal, adjoint_delta, grad_norm) <= config.eps_stop:
                converged = True
                break
    sim = simulate(
        model,
        grid,
        state.u,
        tol=config.eps_stop,
        max_iter=config.max_iter,
        rescaling=config.rescaling,
        p_scale=config.p_scale,
        use_kernels=config.use_kernels,
    )
    retardation = state.k / sim.iterations if sim.iterations else None
    return OptimizationReport(
        converged=converged,
        iterations=state.k,
        u=state.u,
        jn=objective_JN(state.traj, state.u, model),
        reduced_grad_norm=grad_norm,
        primal_residual=primal,
        adjoint_delta=adjoint_delta,
        history=state.history,
        retardation_factor=retardation,
        simulation_iterations=sim.iterations,
        message="" if converged else f"stopped at max_iter={config.max_iter}",
    )


def run_nested(model: Model, grid: TimeGrid, config: OneShotConfig) -> OptimizationReport:
    """Reduced-space BFGS with fully converged primal and adjoint solves.

    Every design iteration time-marches the primal to ``inner_tol``,
    converges the adjoint fixed point, and only then takes one BFGS
    step.  ``total_inner_iterations`` counts the per-step Newton
    iterations plus the adjoint sweeps, the honest cost this method
    pays compared to the coupled one.
    """
    u = (
        np.asarray(config.u0, dtype=float)
        if config.u0 is not None
        else model.initial_design()
    )
    B = config.b0_scale * np.eye(model.design_dim)
    last_u = last_g = None
    total_inner = 0
    history: list[HistoryRow] = []
    converged = False
    g = np.zeros(model.design_dim)
    jn = np.nan
    primal = np.nan
    traj = None
    for k in range(1, config.max_iter + 1):
        states, inner, per_res = time_march(
            model, grid, u, tol=config.inner_tol
        )
        traj = Trajectory(states, grid)
        total_inner += inner
        adj = AdjointTrajectory(np.zeros_like(states))
        delta = np.inf
        for _ in range(64):
            adj_next = adjoint_sweep(traj, adj, u, model)
            delta = trajectory_norm(adj_next.multipliers - adj.multipliers)
            adj = adj_next
            total_inner += 1
            if delta <= config.inner_tol:
                break
        g = reduced_gradient(traj, adj, u, model)
        jn = objective_JN(traj, u, model)
        primal = float(np.linalg.norm(per_res))
        history.append(
            HistoryRow(
                iter=k,
                total_residual=primal,
                per_step_residual_max=float(per_res.max()),
                jn=jn,
                reduced_grad_norm=float(np.linalg.norm(g)),
                rho_estimate=0.0,
                rescaling_accepted_fraction=0.0,
            )
        )
        if np.linalg.norm(g) <= config.eps_stop:
            converged = True
            break
        if last_u is not None and np.linalg.norm(u - last_u) > 0.0:
            B, _ = bfgs_update(B, u - last_u, g - last_g)
        step = np.linalg.solve(B, g) if u.size else np.zeros(0)
        norm = float(np.linalg.norm(step))
        if norm > config.max_design_step:
            step *= config.max_design_step / norm
        last_u, last_g = u.copy(), g.copy()
        u = u - step
        if not np.isfinite(u).all():
            raise DivergenceError(
                "design update produced non-finite values", block="design"
            )
    return OptimizationReport(
        converged=converged,
        iterations=len(history),
        u=u,
        jn=jn,
        reduced_grad_norm=float(np.linalg.norm(g)),
        primal_residual=primal,
        adjoint_delta=0.0,
        history=history,
        total_inner_iterations=total_inner,
        message="" if converged else f"stopped at max_iter={config.max_iter}",
    )
