"""Containers, time grid, norms, and the Model interface contracts."""

import numpy as np
import pytest

from oneshot_unsteady import (
    AdjointTrajectory,
    AdvectionDiffusionModel,
    ControlledVdpModel,
    ConvergenceError,
    DivergenceError,
    Trajectory,
    VanDerPolModel,
    make_time_grid,
    trajectory_norm,
)

from _toys import ScalarLinearModel


# ---------------------------------------------------------------------------
# time grid

def test_make_time_grid_uniform_001():
    grid = make_time_grid(1.0, 100)
    assert grid.N == 100
    assert grid.T == 1.0
    assert np.allclose(grid.dt, 0.01)
    assert grid.t[0] == 0.0
    assert grid.t[-1] == 1.0


def test_make_time_grid_single_step():
    grid = make_time_grid(1.0, 1)
    np.testing.assert_allclose(grid.t, [0.0, 1.0])
    np.testing.assert_allclose(grid.dt, [1.0])


def test_make_time_grid_partition():
    grid = make_time_grid(2.5, 5)
    np.testing.assert_allclose(grid.t, [0.0, 0.5, 1.0, 1.5, 2.0, 2.5])


def test_make_time_grid_sums_to_horizon():
    for T, N in [(1.0, 7), (20.0, 512), (0.3, 13)]:
        grid = make_time_grid(T, N)
        assert abs(grid.dt.sum() - T) <= 1e-12 * T
        assert grid.t[-1] == pytest.approx(T, abs=1e-14 * max(T, 1))
        assert np.all(np.diff(grid.t) > 0)


def test_make_time_grid_rejects_bad_arguments():
    with pytest.raises(ValueError):
        make_time_grid(0.0, 10)
    with pytest.raises(ValueError):
        make_time_grid(-1.0, 10)
    with pytest.raises(ValueError):
        make_time_grid(1.0, 0)


# ---------------------------------------------------------------------------
# trajectory containers

def test_trajectory_shape_and_views():
    grid = make_time_grid(1.0, 4)
    states = np.arange(8.0).reshape(4, 2)
    traj = Trajectory(states, grid)
    assert traj.m == 2
    assert traj.grid is grid
    np.testing.assert_array_equal(traj.states, states)


def test_trajectory_rejects_wrong_length():
    grid = make_time_grid(1.0, 4)
    with pytest.raises(ValueError):
        Trajectory(np.zeros((3, 2)), grid)


def test_trajectory_rejects_nonfinite():
    grid = make_time_grid(1.0, 2)
    with pytest.raises(ValueError):
        Trajectory(np.array([[1.0, 2.0], [np.nan, 0.0]]), grid)
    with pytest.raises(ValueError):
        Trajectory(np.array([[1.0, 2.0], [np.inf, 0.0]]), grid)


def test_trajectory_states_are_readonly():
    grid = make_time_grid(1.0, 2)
    traj = Trajectory(np.zeros((2, 2)), grid)
    with pytest.raises((ValueError, RuntimeError)):
        traj.states[0, 0] = 1.0


def test_with_states_keeps_grid():
    grid = make_time_grid(1.0, 3)
    traj = Trajectory(np.zeros((3, 1)), grid)
    other = traj.with_states(np.ones((3, 1)))
    assert other.grid is grid
    np.testing.assert_array_equal(other.states, 1.0)
    np.testing.assert_array_equal(traj.states, 0.0)


def test_adjoint_trajectory_validates():
    adj = AdjointTrajectory(np.zeros((3, 2)))
    assert adj.m == 2
    with pytest.raises(ValueError):
        AdjointTrajectory(np.array([[np.nan, 0.0]]))
    other = adj.with_multipliers(np.ones((3, 2)))
    np.testing.assert_array_equal(other.multipliers, 1.0)


# ---------------------------------------------------------------------------
# norm

def test_trajectory_norm_examples():
    grid = make_time_grid(1.0, 2)
    assert trajectory_norm(Trajectory(np.zeros((2, 1)), grid)) == 0.0
    # 3-4-5 triangle
    traj = Trajectory(np.array([[3.0], [4.0]]), grid)
    assert trajectory_norm(traj) == pytest.approx(5.0, rel=1e-15)
    one = Trajectory(np.array([[1.0, 1.0]]), make_time_grid(1.0, 1))
    assert trajectory_norm(one) == pytest.approx(np.sqrt(2.0), rel=1e-15)


def test_trajectory_norm_accepts_arrays_and_adjoints():
    arr = np.array([[3.0], [4.0]])
    assert trajectory_norm(arr) == pytest.approx(5.0)
    assert trajectory_norm(AdjointTrajectory(arr)) == pytest.approx(5.0)


def test_trajectory_norm_triangle_and_homogeneity():
    rng = np.random.default_rng(0)
    for _ in range(25):
        a = rng.standard_normal((6, 3))
        b = rng.standard_normal((6, 3))
        c = rng.uniform(-3.0, 3.0)
        assert trajectory_norm(a + b) <= trajectory_norm(a) + trajectory_norm(b) + 1e-12
        assert trajectory_norm(c * a) == pytest.approx(abs(c) * trajectory_norm(a), rel=1e-12)


# ---------------------------------------------------------------------------
# errors

def test_error_types_carry_context():
    err = ConvergenceError("no luck", residual_norm=0.5)
    assert err.residual_norm == 0.5
    derr = DivergenceError("boom", block="primal")
    assert derr.block == "primal"
    assert isinstance(err, RuntimeError)
    assert isinstance(derr, RuntimeError)


# ---------------------------------------------------------------------------
# Model interface: derivative consistency across every concrete model

ALL_MODELS = [
    (VanDerPolModel(), np.array([1.3])),
    (ControlledVdpModel(), np.array([0.7])),
    (AdvectionDiffusionModel(M=12), np.zeros(0)),
    (ScalarLinearModel(), np.zeros(0)),
]


@pytest.mark.parametrize("model,u", ALL_MODELS, ids=lambda p: type(p).__name__ if hasattr(p, "state_dim") else "")
def test_rhs_jacobian_fd_consistency(model, u):
    # central differences are second order: the error must shrink ~100x
    # between eps = 1e-3 and eps = 1e-4
    rng = np.random.default_rng(1)
    for _ in range(5):
        y = rng.standard_normal(model.state_dim)
        v = rng.standard_normal(model.state_dim)
        errs = []
        for eps in (1e-3, 1e-4):
            fd = (model.rhs(y + eps * v, u) - model.rhs(y - eps * v, u)) / (2 * eps)
            errs.append(np.linalg.norm(fd - model.rhs_jac_y_apply(y, u, v)))
        scale = max(np.linalg.norm(model.rhs_jac_y_apply(y, u, v)), 1.0)
        assert errs[0] <= 1e-4 * scale
        # order ratio with slack, plus the cancellation floor
        # (~eps_mach * scale / eps) that exactly-linear models sit on
        assert errs[1] <= errs[0] * 1e-2 * 10 + 1e-10 * scale


@pytest.mark.parametrize("model,u", ALL_MODELS, ids=lambda p: type(p).__name__ if hasattr(p, "state_dim") else "")
def test_rhs_transpose_pairing(model, u):
    rng = np.random.default_rng(2)
    for _ in range(10):
        y = rng.standard_normal(model.state_dim)
        v = rng.standard_normal(model.state_dim)
        w = rng.standard_normal(model.state_dim)
        a = float(model.rhs_jac_y_apply(y, u, v) @ w)
        b = float(v @ model.rhs_jac_y_transpose_apply(y, u, w))
        assert abs(a - b) <= 1e-12 * max(abs(a), abs(b), 1.0)


def test_design_transpose_pairing_vdp():
    # <df/du . e, w> == <e, (df/du)^T w> via a forward difference oracle
    model = VanDerPolModel()
    rng = np.random.default_rng(3)
    for _ in range(10):
        y = rng.standard_normal(2)
        u = rng.uniform(0.2, 2.0, size=1)
        w = rng.standard_normal(2)
        eps = 1e-7
        fd = (model.rhs(y, u + eps) - model.rhs(y, u - eps)) / (2 * eps)
        assert float(fd @ w) == pytest.approx(
            float(model.rhs_jac_u_transpose_apply(y, u, w)[0]), rel=1e-6, abs=1e-9
        )


def test_model_defaults_are_explicit_zero_actions():
    model = VanDerPolModel()
    u = np.array([1.0])
    y = np.array([0.4, -0.2])
    assert model.objective_instant(y, u) == 0.0
    np.testing.assert_array_equal(model.objective_grad_y(y, u), 0.0)
    np.testing.assert_array_equal(model.objective_grad_u(y, u), 0.0)
    np.testing.assert_array_equal(model.initial_state_jac_u_transpose_apply(u, y), 0.0)


def test_rhs_batch_matches_rowwise_loop():
    rng = np.random.default_rng(4)
    for model, u in ALL_MODELS:
        states = rng.standard_normal((7, model.state_dim))
        batch = model.rhs_batch(states, u)
        rows = np.stack([model.rhs(y, u) for y in states])
        np.testing.assert_allclose(batch, rows, rtol=1e-14, atol=1e-14)
