"""Concrete models: Van der Pol oscillator and periodic advection-diffusion.

The Van der Pol oscillator is the stiff nonlinear benchmark (the damping
parameter doubles as the design variable); the linear advection-diffusion
equation on a periodic interval exercises the PDE side.  A controlled
variant of the oscillator adds a quadratic tracking-plus-penalty
objective so the optimization drivers have something to minimize.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .core import Model, Vector
from .inner import CirculantFactorization, Factor2x2

__all__ = [
    "VanDerPolModel",
    "ControlledVdpModel",
    "AdvectionDiffusionModel",
]


@dataclass(frozen=True)
class VanDerPolModel(Model):
    """Van der Pol oscillator x'' - u (1 - x^2) x' + x = 0.

    State is (x, v); the scalar design u is the damping strength.

    Attributes:
        u_default: damping used by ``initial_design``.
        x0, v0: initial position and velocity.
    """

    u_default: float = 1.0
    x0: float = 2.0
    v0: float = 0.0

    state_dim = 2
    design_dim = 1
    kernel_family = "vdp"

    def rhs(self, y, u):
        x, v = y
        mu = u[0]
        return np.array([v, -x + mu * (1.0 - x * x) * v])

    def rhs_jac_y_apply(self, y, u, v_in):
        x, v = y
        mu = u[0]
        return np.array(
            [v_in[1],
             (-1.0 - 2.0 * mu * x * v) * v_in[0] + mu * (1.0 - x * x) * v_in[1]]
        )

    def rhs_jac_y_transpose_apply(self, y, u, w):
        x, v = y
        mu = u[0]
        return np.array(
            [(-1.0 - 2.0 * mu * x * v) * w[1],
             w[0] + mu * (1.0 - x * x) * w[1]]
        )

    def rhs_jac_u_transpose_apply(self, y, u, w):
        x, v = y
        return np.array([(1.0 - x * x) * v * w[1]])

    def initial_state(self, u):
        return np.array([self.x0, self.v0])

    def initial_design(self):
        return np.array([self.u_default])

    def rhs_batch(self, states, u):
        x = states[:, 0]
        v = states[:, 1]
        mu = u[0]
        return np.column_stack([v, -x + mu * (1.0 - x * x) * v])

    def step_factorization(self, y, u, dt, p_scale=1.0):
        # P = p_scale * (I/dt - df/dy), closed-form 2x2
        x, v = y
        mu = u[0]
        return Factor2x2(
            p_scale / dt,
            -p_scale,
            p_scale * (1.0 + 2.0 * mu * x * v),
            p_scale * (1.0 / dt - mu * (1.0 - x * x)),
        )


@dataclass(frozen=True)
class ControlledVdpModel(VanDerPolModel):
    """Van der Pol dynamics with objective Jhat = x^2 + v^2 + u_pen (u - u_ref)^2.

    The tracking term pulls the oscillation toward rest, the quadratic
    penalty keeps the damping bounded, so the reduced objective has an
    interior optimum.  The default initial state sits inside the unit
    amplitude region where the dynamics stay bounded for every damping
    the optimizer visits.
    """

    x0: float = 1.0
    u_pen: float = 0.1
    u_ref: float = 0.0

    def objective_instant(self, y, u):
        du = u[0] - self.u_ref
        return float(y[0] * y[0] + y[1] * y[1] + self.u_pen * du * du)

    def objective_grad_y(self, y, u):
        return 2.0 * y

    def objective_grad_u(self, y, u):
        return np.array([2.0 * self.u_pen * (u[0] - self.u_ref)])


@dataclass(frozen=True)
class AdvectionDiffusionModel(Model):
    """Linear advection-diffusion on the periodic unit interval.

    Second-order central differences on M cells of width dx = 1/M:

        f_j = -a (y_{j+1} - y_{j-1}) / (2 dx)
              + mu (y_{j+1} - 2 y_j + y_{j-1}) / dx^2

    with periodic wraparound.  The model has no design variables; it is
    the linear PDE testbed for the sweep and rescaling machinery.
    """

    a: float = 1.0
    mu: float = 1e-5
    M: int = 100

    design_dim = 0
    kernel_family = None

    def __post_init__(self):
        if self.M < 3:
            raise ValueError(f"periodic stencil needs M >= 3 cells, got M={self.M}")
        if not self.mu > 0.0:
            raise ValueError(f"diffusion coefficient must be positive, got mu={self.mu}")

    @property
    def state_dim(self) -> int:
        return self.M

    @property
    def dx(self) -> float:
        return 1.0 / self.M

    def rhs(self, y, u):
        yp = np.roll(y, -1)
        ym = np.roll(y, 1)
        dx = self.dx
        return -self.a * (yp - ym) / (2.0 * dx) + self.mu * (yp - 2.0 * y + ym) / (dx * dx)

    def rhs_jac_y_apply(self, y, u, v):
        # linear model: the Jacobian is the operator itself
        return self.rhs(v, u)

    def rhs_jac_y_transpose_apply(self, y, u, w):
        # advection is skew-symmetric, diffusion symmetric
        wp = np.roll(w, -1)
        wm = np.roll(w, 1)
        dx = self.dx
        return self.a * (wp - wm) / (2.0 * dx) + self.mu * (wp - 2.0 * w + wm) / (dx * dx)

    def rhs_jac_u_transpose_apply(self, y, u, w):
        return np.zeros(0)

    def initial_state(self, u):
        return np.sin(2.0 * np.pi * np.arange(self.M) * self.dx)

    def rhs_batch(self, states, u):
        yp = np.roll(states, -1, axis=1)
        ym = np.roll(states, 1, axis=1)
        dx = self.dx
        return -self.a * (yp - ym) / (2.0 * dx) + self.mu * (
            yp - 2.0 * states + ym
        ) / (dx * dx)

    @cached_property
    def _operator_symbol(self):
        # DFT of the first column of the stencil operator
        col = np.zeros(self.M)
        dx = self.dx
        col[0] = -2.0 * self.mu / (dx * dx)
        col[1] = self.a / (2.0 * dx) + self.mu / (dx * dx)
        col[-1] = -self.a / (2.0 * dx) + self.mu / (dx * dx)
        return np.fft.fft(col)

    def step_factorization(self, y, u, dt, p_scale=1.0):
        return CirculantFactorization(p_scale * (1.0 / dt - self._operator_symbol))
