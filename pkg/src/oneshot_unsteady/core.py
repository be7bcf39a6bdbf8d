"""Shared containers and the model interface.

Conventions used everywhere in this package:

* a *state* is a 1-d float64 array of length ``m`` (the spatial/phase
  dimension), a *design* is a 1-d float64 array of length ``n``;
* a trajectory stores the states ``y^1 .. y^N`` row by row, shape
  ``(N, m)``; the initial state ``y^0`` is produced by the model and is
  not part of the trajectory;
* time grids carry ``t_0 < t_1 < ... < t_N`` and the step sizes
  ``dt_i = t_i - t_{i-1}``.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, replace

import numpy as np
from numpy.typing import NDArray

Vector = NDArray[np.float64]

__all__ = [
    "ConvergenceError",
    "DivergenceError",
    "TimeGrid",
    "Trajectory",
    "AdjointTrajectory",
    "Model",
    "make_time_grid",
    "trajectory_norm",
]


class ConvergenceError(RuntimeError):
    """Raised when an iterative solve exhausts its iteration budget.

    Attributes:
        residual_norm: norm of the residual at the final iterate, if known.
    """

    def __init__(self, message: str, residual_norm: float | None = None):
        super().__init__(message)
        self.residual_norm = residual_norm


class DivergenceError(RuntimeError):
    """Raised when an iteration produces non-finite values.

    Attributes:
        block: which update block blew up ("primal", "adjoint" or "design").
    """

    def __init__(self, message: str, block: str | None = None):
        super().__init__(message)
        self.block = block


def _readonly(a, dtype=np.float64) -> Vector:
    out = np.ascontiguousarray(a, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class TimeGrid:
    """Discrete times ``t_0 < ... < t_N`` on ``[0, T]`` with steps ``dt``.

    Attributes:
        T: horizon length, ``t_N == T``.
        N: number of time steps.
        t: node array of shape ``(N + 1,)`` with ``t[0] == 0``.
        dt: step array of shape ``(N,)``, ``dt[i] = t[i+1] - t[i]``.
    """

    T: float
    N: int
    t: Vector
    dt: Vector

    def __post_init__(self):
        object.__setattr__(self, "t", _readonly(self.t))
        object.__setattr__(self, "dt", _readonly(self.dt))
        if self.N < 1:
            raise ValueError(f"need at least one time step, got N={self.N}")
        if self.t.shape != (self.N + 1,) or self.dt.shape != (self.N,):
            raise ValueError("time grid arrays do not match N")
        if self.t[0] != 0.0:
            raise ValueError("time grid must start at t=0")
        if not np.all(self.dt > 0.0):
            raise ValueError("time grid nodes must be strictly increasing")
        tol = 1e-12 * self.T
        if abs(self.t[-1] - self.T) > tol or abs(self.dt.sum() - self.T) > tol:
            raise ValueError("time steps do not add up to the horizon T")


def make_time_grid(T: float, N: int) -> TimeGrid:
    """Build the uniform grid with N steps on [0, T].

    Args:
        T: horizon, must be positive.
        N: number of steps, must be a positive integer.
    """
    if not T > 0.0:
        raise ValueError(f"horizon must be positive, got T={T}")
    if int(N) != N or N < 1:
        raise ValueError(f"step count must be a positive integer, got N={N}")
    t = np.linspace(0.0, float(T), int(N) + 1)
    return TimeGrid(T=float(T), N=int(N), t=t, dt=np.diff(t))


@dataclass(frozen=True)
class Trajectory:
    """States ``y^1 .. y^N`` on a time grid, one row per step.

    Raises ValueError on construction if any entry is non-finite, so a
    diverging sweep surfaces immediately instead of poisoning later
    algebra with NaNs.
    """

    states: Vector
    grid: TimeGrid

    def __post_init__(self):
        object.__setattr__(self, "states", _readonly(self.states))
        if self.states.ndim != 2 or self.states.shape[0] != self.grid.N:
            raise ValueError(
                f"expected (N, m) states with N={self.grid.N}, "
                f"got shape {self.states.shape}"
            )
        if not np.isfinite(self.states).all():
            raise ValueError("trajectory contains non-finite states")

    @property
    def m(self) -> int:
        return self.states.shape[1]

    def with_states(self, states) -> "Trajectory":
        """Same grid, new states."""
        return replace(self, states=states)


@dataclass(frozen=True)
class AdjointTrajectory:
    """Multipliers ``ybar^1 .. ybar^N`` paired with a primal trajectory."""

    multipliers: Vector

    def __post_init__(self):
        object.__setattr__(self, "multipliers", _readonly(self.multipliers))
        if self.multipliers.ndim != 2:
            raise ValueError("adjoint multipliers must be a (N, m) array")
        if not np.isfinite(self.multipliers).all():
            raise ValueError("adjoint trajectory contains non-finite values")

    @property
    def m(self) -> int:
        return self.multipliers.shape[1]

    def with_multipliers(self, multipliers) -> "AdjointTrajectory":
        return replace(self, multipliers=multipliers)


class Model(ABC):
    """Problem definition: dynamics, Jacobian actions, objective.

    A model owns the semi-discrete right-hand side ``f(y, u)``, its
    Jacobian actions, the (possibly design-dependent) initial state and
    the instantaneous objective ``Jhat(y, u)`` whose time average is
    minimized.  All Jacobians are exposed as matrix-vector actions so
    that large sparse models never assemble anything dense.

    Concrete models define ``state_dim`` and ``design_dim``; models whose
    forward sweep has a compiled kernel advertise it via
    ``kernel_family``.
    """

    state_dim: int
    design_dim: int
    kernel_family: str | None = None

    @abstractmethod
    def rhs(self, y: Vector, u: Vector) -> Vector:
        """Right-hand side ``f(y, u)``."""

    @abstractmethod
    def rhs_jac_y_apply(self, y: Vector, u: Vector, v: Vector) -> Vector:
        """Action ``(df/dy) v`` at ``(y, u)``."""

    @abstractmethod
    def rhs_jac_y_transpose_apply(self, y: Vector, u: Vector, w: Vector) -> Vector:
        """Action ``(df/dy)^T w`` at ``(y, u)``."""

    @abstractmethod
    def rhs_jac_u_transpose_apply(self, y: Vector, u: Vector, w: Vector) -> Vector:
        """Action ``(df/du)^T w`` at ``(y, u)``, returns a design-space vector."""

    @abstractmethod
    def initial_state(self, u: Vector) -> Vector:
        """Initial state ``y^0(u)``."""

    def initial_state_jac_u_transpose_apply(self, u: Vector, w: Vector) -> Vector:
        """Action ``(dy^0/du)^T w``; zero for design-independent starts."""
        return np.zeros(self.design_dim)

    def objective_instant(self, y: Vector, u: Vector) -> float:
        """Instantaneous objective ``Jhat(y, u)``; zero if the model has none."""
        return 0.0

    def objective_grad_y(self, y: Vector, u: Vector) -> Vector:
        """Gradient ``dJhat/dy``."""
        return np.zeros_like(y)

    def objective_grad_u(self, y: Vector, u: Vector) -> Vector:
        """Gradient ``dJhat/du``."""
        return np.zeros(self.design_dim)

    def initial_design(self) -> Vector:
        """Default starting design for optimization drivers."""
        return np.zeros(self.design_dim)

    def rhs_batch(self, states: Vector, u: Vector) -> Vector:
        """Row-wise ``f(y, u)`` over a whole (N, m) block.

        The generic implementation just loops; models override it with a
        vectorized version when the rescaling diagnostics matter for
        speed.
        """
        return np.stack([self.rhs(y, u) for y in states])


def trajectory_norm(traj) -> float:
    """Space-time 2-norm ``sqrt(sum_i ||y^i||^2)``.

    Accepts a Trajectory, an AdjointTrajectory or a plain array.
    """
    if isinstance(traj, Trajectory):
        arr = traj.states
    elif isinstance(traj, AdjointTrajectory):
        arr = traj.multipliers
    else:
        arr = np.asarray(traj)
    return float(np.linalg.norm(arr.ravel()))
