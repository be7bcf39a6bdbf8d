"""Whole-trajectory sweep, residual diagnostics, adaptive time rescaling.

The sweep map H applies one quasi-Newton update per time step in a
single forward pass, feeding each step the already-updated previous
state.  Fixed points of H are exactly the implicit Euler solutions.  The
rescaling pass reinterprets the current iterate as samples at shifted
times (projection of the step increment onto the local dynamics) and
resamples it back to the physical grid, which collapses the transport
lag that otherwise makes the iteration count grow with the number of
time steps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .adjoint import StepJacobians, _jvp, _vjp, objective_JN
from .core import Model, Trajectory, Vector
from .inner import build_preconditioner, qn_step

__all__ = [
    "SweepReport",
    "RescaledTimes",
    "HistoryRow",
    "SimulationResult",
    "sweep_H",
    "residual_report",
    "estimate_contraction",
    "rescale_times",
    "resample_to_grid",
    "sweep_with_rescaling",
    "march_init",
    "simulate",
]

# floor under which the dynamics are considered stalled and the
# projection formula untrustworthy
F_NORM_FLOOR = 1e-14


@dataclass(frozen=True)
class SweepReport:
    """Residual diagnostics of one sweep iterate.

    total_residual is the space-time norm; per_step_residual the per-step
    norms, so total^2 == sum(per_step^2) up to rounding.
    """

    per_step_residual: Vector
    total_residual: float
    iteration_index: int
    rho_estimate: float | None = None
    rescaling_accepted_fraction: float = 0.0

    def __post_init__(self):
        per2 = float(np.dot(self.per_step_residual, self.per_step_residual))
        tot2 = self.total_residual**2
        if abs(tot2 - per2) > 1e-12 * max(tot2, per2, 1e-300):
            raise ValueError("total residual inconsistent with per-step residuals")


@dataclass(frozen=True)
class RescaledTimes:
    """Safeguarded rescaled times, one per step, strictly increasing.

    accepted[i] is False where a safeguard (stalled dynamics or a
    monotonicity violation) replaced the projection formula by the
    physical time.  raw_dt holds the unsafeguarded per-step projections
    (the effective step sizes before any fallback).
    """

    t_tilde: Vector
    accepted: np.ndarray
    raw_dt: Vector

    @property
    def accepted_fraction(self) -> float:
        return float(np.mean(self.accepted)) if self.accepted.size else 0.0


@dataclass(frozen=True)
class HistoryRow:
    """One optimization/simulation iteration as logged to history.csv."""

    iter: int
    total_residual: float
    per_step_residual_max: float
    jn: float
    reduced_grad_norm: float
    rho_estimate: float
    rescaling_accepted_fraction: float


@dataclass
class SimulationResult:
    traj: Trajectory
    rows: list
    converged: bool
    iterations: int


def _previous_states(traj: Trajectory, u: Vector, model: Model) -> Vector:
    prev = np.empty_like(traj.states)
    prev[0] = model.initial_state(u)
    prev[1:] = traj.states[:-1]
    return prev


def sweep_H(
    traj: Trajectory,
    u: Vector,
    model: Model,
    *,
    p_scale: float = 1.0,
    use_kernels: bool = True,
) -> Trajectory:
    """One forward sweep of the modified time-marching map.

    Every step takes a single quasi-Newton update of its implicit Euler
    residual, with the previous state read from the step just updated in
    this same sweep (step 1 reads the model's initial state).

    Args:
        traj: incoming trajectory iterate.
        u: design vector.
        model: problem definition.
        p_scale: preconditioner damping; 1.0 is the exact Newton matrix.
        use_kernels: allow the compiled kernel for models that have one.

    Returns:
        The updated trajectory (same grid).
    """
    if traj.m != model.state_dim:
        raise ValueError(
            f"trajectory dimension {traj.m} does not match model "
            f"state dimension {model.state_dim}"
        )
    grid = traj.grid
    u = np.asarray(u, dtype=float)
    if use_kernels and model.kernel_family == "vdp":
        states = _kernels.vdp_forward_sweep(
            traj.states, model.initial_state(u), grid.dt, u[0], p_scale
        )
        return traj.with_states(states)
    out = np.empty_like(traj.states)
    y_prev = model.initial_state(u)
    for i in range(grid.N):
        try:
            p = build_preconditioner(model, traj.states[i], u, grid.dt[i], p_scale)
        except np.linalg.LinAlgError as err:
            raise np.linalg.LinAlgError(
                f"singular step matrix at time index {i}: {err}"
            ) from err
        y_prev = qn_step(traj.states[i], y_prev, grid.dt[i], u, p, model)
        out[i] = y_prev
    return traj.with_states(out)


def residual_report(
    traj: Trajectory,
    u: Vector,
    model: Model,
    *,
    iteration_index: int = 0,
    rho_estimate: float | None = None,
    rescaling_accepted_fraction: float = 0.0,
) -> SweepReport:
    """Per-step and total implicit Euler residual norms of an iterate."""
    u = np.asarray(u, dtype=float)
    prev = _previous_states(traj, u, model)
    res = (traj.states - prev) / traj.grid.dt[:, None] - model.rhs_batch(
        traj.states, u
    )
    per_step = np.linalg.norm(res, axis=1)
    return SweepReport(
        per_step_residual=per_step,
        total_residual=float(np.linalg.norm(res.ravel())),
        iteration_index=iteration_index,
        rho_estimate=rho_estimate,
        rescaling_accepted_fraction=rescaling_accepted_fraction,
    )


def estimate_contraction(
    traj: Trajectory,
    u: Vector,
    model: Model,
    probes: int = 8,
    *,
    p_scale: float = 1.0,
    rng=None,
) -> float:
    """Power-iteration estimate of the sweep map's contraction factor.

    Runs ``probes`` rounds of power iteration on (dH/dy)^T (dH/dy) using
    the Jacobian-vector products, returning the largest-singular-value
    estimate of dH/dy at the given iterate.  A value below one certifies
    local convergence of the sweep.

    Args:
        probes: number of power iterations, at least 1.
        rng: seed or numpy Generator for the start vector.
    """
    if probes < 1:
        raise ValueError(f"need at least one probe, got probes={probes}")
    rng = np.random.default_rng(0 if rng is None else rng)
    jacs = StepJacobians(traj, np.asarray(u, dtype=float), model, p_scale=p_scale)
    v = rng.standard_normal(traj.states.shape)
    v /= np.linalg.norm(v.ravel())
    sigma = 0.0
    for _ in range(probes):
        w = _jvp(jacs, v)
        sigma = float(np.linalg.norm(w.ravel()))
        if sigma < 1e-300:
            return 0.0
        z, _ = _vjp(jacs, w)
        znorm = np.linalg.norm(z.ravel())
        if znorm < 1e-300:
            return sigma
        v = z / znorm
    return sigma


def rescale_times(traj: Trajectory, u: Vector, model: Model) -> RescaledTimes:
    """Reconstruct the iterate's internal clock from its increments.

    Each step increment is read as one implicit Euler step of unknown
    size; the least-squares fit of

        (y^i - y^{i-1}) / dt~ = f(y^i, u)

    gives the effective step dt~_i = <y^i - y^{i-1}, f> / ||f||^2, and
    chaining the recovered steps from t = 0 yields the time t~_i each
    sample actually represents.  During transient iterations this clock
    runs slow (numerical time dilation); resampling the iterate from t~
    back to the physical grid removes the lag.  Two safeguards pin a
    step back to its physical time t_i (nudged forward if needed to keep
    strict monotonicity): stalled dynamics ``||f|| < 1e-14`` and a
    non-increasing reconstructed time.
    """
    grid = traj.grid
    u = np.asarray(u, dtype=float)
    f = model.rhs_batch(traj.states, u)
    fn2 = np.einsum("ij,ij->i", f, f)
    prev = _previous_states(traj, u, model)
    inc = np.einsum("ij,ij->i", traj.states - prev, f)
    eps_t = 1e-10 * grid.T
    floor2 = F_NORM_FLOOR * F_NORM_FLOOR
    raw_dt = np.divide(inc, fn2, out=np.zeros_like(inc), where=fn2 >= floor2)
    t_tilde = np.empty(grid.N)
    accepted = np.zeros(grid.N, dtype=bool)
    t_prev = 0.0
    for i in range(grid.N):
        if fn2[i] >= floor2 and raw_dt[i] >= eps_t:
            t_tilde[i] = t_prev + raw_dt[i]
            accepted[i] = True
        else:
            t_tilde[i] = max(grid.t[i + 1], t_prev + eps_t)
        t_prev = t_tilde[i]
    return RescaledTimes(t_tilde=t_tilde, accepted=accepted, raw_dt=raw_dt)


def resample_to_grid(traj: Trajectory, times: RescaledTimes) -> Trajectory:
    """Piecewise-linear resample from rescaled times back to the grid.

    Queries beyond the rescaled range take the nearest endpoint value
    (constant extrapolation).  Raises ValueError if the rescaled times
    are not strictly increasing.
    """
    t_tilde = np.asarray(times.t_tilde, dtype=float)
    if t_tilde.shape[0] != traj.grid.N:
        raise ValueError("rescaled times length does not match the grid")
    if not np.all(np.diff(t_tilde) > 0.0):
        raise ValueError("rescaled times must be strictly increasing")
    query = traj.grid.t[1:]
    out = np.empty_like(traj.states)
    for c in range(traj.m):
        out[:, c] = np.interp(query, t_tilde, traj.states[:, c])
    return traj.with_states(out)


def sweep_with_rescaling(
    traj: Trajectory,
    u: Vector,
    model: Model,
    *,
    p_scale: float = 1.0,
    use_kernels: bool = True,
    iteration_index: int = 0,
) -> tuple[Trajectory, SweepReport]:
    """Sweep, rescale, resample; keep the variant with the smaller residual.

    The resample is applied where the reconstructed clock provides data.
    Grid times beyond the last rescaled time are regenerated by marching
    on from the last resampled state (one quasi-Newton step per slot, as
    in march_init), since the iterate carries no information about that
    part of the horizon yet and clamping the final state across it only
    raises the residual.  Each accepted rescaling therefore extends the
    correctly-timed head of the trajectory while the marched tail feeds
    the next reconstruction.

    The candidate replaces the plain sweep result only when its total
    residual does not exceed the sweep's own, so rescaling can never
    push the iteration backward.  The report's
    ``rescaling_accepted_fraction`` is the per-step acceptance rate of
    the applied variant (0.0 when the resample was rejected outright).
    """
    swept = sweep_H(traj, u, model, p_scale=p_scale, use_kernels=use_kernels)
    report = residual_report(swept, u, model, iteration_index=iteration_index)
    times = rescale_times(swept, u, model)
    resampled = resample_to_grid(swept, times)
    grid = swept.grid
    n_covered = int(np.searchsorted(grid.t[1:], times.t_tilde[-1], side="right"))
    if n_covered < grid.N:
        states = resampled.states.copy()
        prev = states[n_covered - 1] if n_covered > 0 else model.initial_state(u)
        for i in range(n_covered, grid.N):
            p = build_preconditioner(model, prev, u, grid.dt[i], p_scale)
            prev = qn_step(prev, prev, grid.dt[i], u, p, model)
            states[i] = prev
        candidate_traj = swept.with_states(states)
    else:
        candidate_traj = resampled
    candidate = residual_report(
        candidate_traj,
        u,
        model,
        iteration_index=iteration_index,
        rescaling_accepted_fraction=times.accepted_fraction,
    )
    if candidate.total_residual <= report.total_residual:
        return candidate_traj, candidate
    return swept, report


def march_init(
    model: Model,
    grid,
    u: Vector,
    *,
    p_scale: float = 1.0,
) -> Trajectory:
    """Initial trajectory from a single inexact time-marching pass.

    Marches once through the grid taking one quasi-Newton step per time
    step, each based at its own predecessor (the standard warm start of
    a marching scheme).  With an exact step matrix and a linear model
    this is already the implicit Euler solution; with damping it yields
    a time-dilated approximation whose amplitude is roughly right but
    whose internal clock runs slow, exactly the transient the rescaling
    pass is built to collapse.  For f == 0 it degenerates to the
    constant-in-time trajectory.
    """
    u = np.asarray(u, dtype=float)
    states = np.empty((grid.N, model.state_dim))
    prev = model.initial_state(u)
    for i in range(grid.N):
        p = build_preconditioner(model, prev, u, grid.dt[i], p_scale)
        prev = qn_step(prev, prev, grid.dt[i], u, p, model)
        states[i] = prev
    return Trajectory(states, grid)


def _has_objective(model: Model) -> bool:
    return type(model).objective_instant is not Model.objective_instant


def simulate(
    model: Model,
    grid,
    u: Vector | None = None,
    *,
    tol: float = 1e-10,
    max_iter: int = 10000,
    rescaling: bool = False,
    p_scale: float = 1.0,
    use_kernels: bool = True,
    initial_traj: Trajectory | None = None,
    callback=None,
) -> SimulationResult:
    """Iterate the sweep map to a fixed point at frozen design.

    Starts from the single-pass marching trajectory of ``march_init``
    unless an iterate is supplied, and sweeps until the total residual
    drops to ``tol`` or ``max_iter`` is hit.  The per iteration
    HistoryRow list matches the CSV schema of the command-line driver;
    ``callback(k, report, traj)`` is invoked per iteration when given.
    """
    if tol <= 0.0:
        raise ValueError(f"tolerance must be positive, got tol={tol}")
    u = model.initial_design() if u is None else np.asarray(u, dtype=float)
    if initial_traj is None:
        initial_traj = march_init(model, grid, u, p_scale=p_scale)
    traj = initial_traj
    rows: list[HistoryRow] = []
    prev_total = None
    converged = False
    iterations = 0
    track_jn = _has_objective(model)
    for k in range(1, max_iter + 1):
        if rescaling:
            traj, report = sweep_with_rescaling(
                traj, u, model, p_scale=p_scale, use_kernels=use_kernels,
                iteration_index=k,
            )
        else:
            traj = sweep_H(traj, u, model, p_scale=p_scale, use_kernels=use_kernels)
            report = residual_report(traj, u, model, iteration_index=k)
        rho = report.total_residual / prev_total if prev_total else 0.0
        rows.append(
            HistoryRow(
                iter=k,
                total_residual=report.total_residual,
                per_step_residual_max=float(report.per_step_residual.max()),
                jn=objective_JN(traj, u, model) if track_jn else 0.0,
                reduced_grad_norm=0.0,
                rho_estimate=rho,
                rescaling_accepted_fraction=report.rescaling_accepted_fraction,
            )
        )
        if callback is not None:
            callback(k, report, traj)
        iterations = k
        prev_total = report.total_residual
        if report.total_residual <= tol:
            converged = True
            break
    return SimulationResult(traj=traj, rows=rows, converged=converged, iterations=iterations)
