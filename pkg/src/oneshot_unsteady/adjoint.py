"""Discrete objective, sweep linearization, adjoint sweep, reduced gradient.

One forward sweep applies, per time step, the map

    G^i(y^i, y^{i-1}, u) = y^i - P_i^{-1} R(y^i, y^{i-1}, u)

with the preconditioner frozen at the incoming iterate.  Its partial
derivatives in that frozen-P sense are

    A_i = dG^i/dy^i     = I - P_i^{-1} (I/dt_i - df/dy(y^i))
    B_i = dG^i/dy^{i-1} = P_i^{-1} / dt_i

and the whole-sweep map H chains them recursively (step i sees the
already-updated step i-1).  Everything here -- the adjoint sweep, the
Jacobian-vector products and the reduced gradient -- is built from A_i,
B_i and the design derivative dG^i/du = P_i^{-1} df/du, so the adjoint
is consistent with the primal update by construction instead of being
derived separately.
"""

from __future__ import annotations

import numpy as np

from .core import AdjointTrajectory, Model, Trajectory, Vector
from .inner import build_preconditioner

__all__ = [
    "StepJacobians",
    "objective_JN",
    "adjoint_sweep",
    "jacobian_vector_product",
    "jacobian_transpose_product",
    "reduced_gradient",
]


class StepJacobians:
    """Per-step sweep derivatives frozen at one (trajectory, design) pair.

    Holds the factorized preconditioners for every time step and exposes
    the actions of A_i, B_i, their transposes, and the design block.
    Step indices are 0-based (array row i holds step i+1).
    """

    def __init__(self, traj: Trajectory, u: Vector, model: Model, p_scale: float = 1.0):
        if traj.m != model.state_dim:
            raise ValueError(
                f"trajectory dimension {traj.m} does not match model "
                f"state dimension {model.state_dim}"
            )
        self.states = traj.states
        self.dt = traj.grid.dt
        self.u = np.asarray(u, dtype=float)
        self.model = model
        self.p_scale = p_scale
        self.precond = [
            build_preconditioner(model, traj.states[i], self.u, traj.grid.dt[i], p_scale)
            for i in range(traj.grid.N)
        ]

    @property
    def n_steps(self) -> int:
        return len(self.precond)

    def apply_A(self, i: int, v: Vector) -> Vector:
        mv = v / self.dt[i] - self.model.rhs_jac_y_apply(self.states[i], self.u, v)
        return v - self.precond[i].solve(mv)

    def apply_A_transpose(self, i: int, w: Vector) -> Vector:
        z = self.precond[i].solve_transpose(w)
        mtz = z / self.dt[i] - self.model.rhs_jac_y_transpose_apply(
            self.states[i], self.u, z
        )
        return w - mtz

    def apply_B(self, i: int, v: Vector) -> Vector:
        return self.precond[i].solve(v) / self.dt[i]

    def apply_B_transpose(self, i: int, w: Vector) -> Vector:
        return self.precond[i].solve_transpose(w) / self.dt[i]

    def apply_Gu_transpose(self, i: int, w: Vector) -> Vector:
        z = self.precond[i].solve_transpose(w)
        return self.model.rhs_jac_u_transpose_apply(self.states[i], self.u, z)


def objective_JN(traj: Trajectory, u: Vector, model: Model) -> float:
    """Discrete time-averaged objective ``(1/T) sum_i dt_i Jhat(y^i, u)``."""
    grid = traj.grid
    total = 0.0
    for i in range(grid.N):
        total += grid.dt[i] * model.objective_instant(traj.states[i], u)
    return total / grid.T


def _weighted_objective_grad_y(traj: Trajectory, u: Vector, model: Model) -> Vector:
    grid = traj.grid
    out = np.empty_like(traj.states)
    for i in range(grid.N):
        out[i] = (grid.dt[i] / grid.T) * model.objective_grad_y(traj.states[i], u)
    return out


def _vjp(jacs: StepJacobians, warr: Vector, gy: Vector | None = None):
    """Backward chain: returns (out, v0) with out_j = gy_j + A_j^T v_j.

    v_j = w_j + B_{j+1}^T v_{j+1} runs backward through the sweep; v0 is
    the chain value propagated through step 1 (the initial-state slot).
    """
    n = jacs.n_steps
    out = np.empty_like(warr)
    v = warr[n - 1]
    for j in range(n - 1, -1, -1):
        out[j] = jacs.apply_A_transpose(j, v)
        if gy is not None:
            out[j] = out[j] + gy[j]
        vb = jacs.apply_B_transpose(j, v)
        v = warr[j - 1] + vb if j > 0 else vb
    return out, v


def _jvp(jacs: StepJacobians, varr: Vector) -> Vector:
    """Forward chain w_i = A_i v_i + B_i w_{i-1}, w_0 = 0."""
    n = jacs.n_steps
    out = np.empty_like(varr)
    w = np.zeros(varr.shape[1])
    for i in range(n):
        w = jacs.apply_A(i, varr[i]) + jacs.apply_B(i, w)
        out[i] = w
    return out


def _resolve_jacobians(traj, u, model, p_scale, jacobians):
    if jacobians is not None:
        return jacobians
    return StepJacobians(traj, u, model, p_scale=p_scale)


def adjoint_sweep(
    traj: Trajectory,
    adj: AdjointTrajectory,
    u: Vector,
    model: Model,
    *,
    p_scale: float = 1.0,
    jacobians: StepJacobians | None = None,
) -> AdjointTrajectory:
    """One backward sweep of the adjoint fixed-point map.

    Applies ``ybar <- dJ_N/dy + (dH/dy)^T ybar`` in a single backward
    pass, reusing the same per-step blocks as the forward sweep.  At a
    primal/adjoint fixed point the result satisfies the discrete adjoint
    equation of the implicit Euler scheme.

    Args:
        traj: primal trajectory the linearization is frozen at.
        adj: incoming multipliers.
        u: design.
        model: problem definition.
        p_scale: preconditioner damping (match the forward sweep).
        jacobians: optionally reuse a prebuilt StepJacobians.

    Returns:
        Updated AdjointTrajectory.
    """
    if adj.multipliers.shape != traj.states.shape:
        raise ValueError("adjoint and primal trajectory shapes differ")
    jacs = _resolve_jacobians(traj, u, model, p_scale, jacobians)
    gy = _weighted_objective_grad_y(traj, u, model)
    out, _ = _vjp(jacs, adj.multipliers, gy=gy)
    return adj.with_multipliers(out)


def jacobian_vector_product(
    traj: Trajectory,
    v: Trajectory,
    u: Vector,
    model: Model,
    *,
    p_scale: float = 1.0,
    jacobians: StepJacobians | None = None,
) -> Trajectory:
    """Directional derivative ``(dH/dy) v`` of the sweep map at traj."""
    jacs = _resolve_jacobians(traj, u, model, p_scale, jacobians)
    return v.with_states(_jvp(jacs, v.states))


def jacobian_transpose_product(
    traj: Trajectory,
    w: Trajectory,
    u: Vector,
    model: Model,
    *,
    p_scale: float = 1.0,
    jacobians: StepJacobians | None = None,
) -> Trajectory:
    """Transpose action ``(dH/dy)^T w`` of the sweep map at traj."""
    jacs = _resolve_jacobians(traj, u, model, p_scale, jacobians)
    out, _ = _vjp(jacs, w.states)
    return w.with_states(out)


def reduced_gradient(
    traj: Trajectory,
    adj: AdjointTrajectory,
    u: Vector,
    model: Model,
    *,
    p_scale: float = 1.0,
    jacobians: StepJacobians | None = None,
) -> Vector:
    """Design-space gradient ``dJ_N/du + (dH/du)^T ybar``.

    Runs the same backward chain as the adjoint sweep, accumulating the
    design block ``(dG^i/du)^T v_i`` per step and finishing with the
    initial-state sensitivity.  At a converged primal/adjoint pair this
    equals the exact gradient of the reduced (design-only) objective.
    """
    if adj.multipliers.shape != traj.states.shape:
        raise ValueError("adjoint and primal trajectory shapes differ")
    jacs = _resolve_jacobians(traj, u, model, p_scale, jacobians)
    grid = traj.grid
    g = np.zeros(model.design_dim)
    for i in range(grid.N):
        g += (grid.dt[i] / grid.T) * model.objective_grad_u(traj.states[i], u)
    mult = adj.multipliers
    v = mult[grid.N - 1]
    for j in range(grid.N - 1, -1, -1):
        g += jacs.apply_Gu_transpose(j, v)
        vb = jacs.apply_B_transpose(j, v)
        v = mult[j - 1] + vb if j > 0 else vb
    g += model.initial_state_jac_u_transpose_apply(u, v)
    return g
