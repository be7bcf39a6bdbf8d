"""Command-line driver: JSON config in, CSV/JSON/SVG artifacts out.

Subcommands:

    oneshot-unsteady run --config cfg.json [--output-dir DIR] [--quiet]
    oneshot-unsteady schema

Every run writes ``history.csv`` (one row per iteration, fixed column
set) and ``report.json``; the scaling study writes ``scaling.csv``
instead of a history.  Exit codes: 0 converged, 2 stopped at the
iteration budget, 1 configuration or solver error.  Number formatting
uses 17 significant digits with '.' as the decimal separator, and runs
with identical config and seed produce byte-identical CSV files.

The environment variable ONESHOT_LOG_LEVEL (error, info, debug)
controls verbosity; --quiet forces error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import ConvergenceError, DivergenceError, make_time_grid
from .inner import time_march
from .models import AdvectionDiffusionModel, ControlledVdpModel, VanDerPolModel
from .oneshot import OneShotConfig, run_nested, run_oneshot
from .sweep import HistoryRow, estimate_contraction, simulate
from . import _kernels

log = logging.getLogger("oneshot_unsteady")

MODELS = {
    "vdp": VanDerPolModel,
    "advdiff": AdvectionDiffusionModel,
    "vdp_control": ControlledVdpModel,
}

MODES = (
    "simulate_classic",
    "simulate_oneshot",
    "simulate_rescaled",
    "optimize_oneshot",
    "optimize_nested",
    "scaling_study",
)

HISTORY_HEADER = (
    "iter,total_residual,per_step_residual_max,JN,"
    "reduced_grad_norm,rho_estimate,rescaling_accepted_fraction"
)

SCHEMA = {
    "model": "one of " + ", ".join(sorted(MODELS)),
    "model_params": {
        "vdp": {"u_default": 1.0, "x0": 2.0, "v0": 0.0},
        "vdp_control": {
            "u_default": 1.0, "x0": 1.0, "v0": 0.0, "u_pen": 0.1, "u_ref": 0.0,
        },
        "advdiff": {"a": 1.0, "mu": 1e-5, "M": 100},
    },
    "grid": {"T": "horizon > 0", "N": "number of time steps >= 1"},
    "mode": "one of " + ", ".join(MODES),
    "tolerances": {"inner_tol": 1e-10, "eps_stop": 1e-3},
    "max_iter": 1000,
    "log_every": 50,
    "seed": 0,
    "output_dir": "oneshot_output",
    "solver": {
        "p_scale": 2.0,
        "use_kernels": True,
        "design_freeze": 10,
        "b0_scale": 1.0,
        "max_design_step": 0.25,
        "rescaling": "bool; optimize_oneshot only (simulate modes are fixed by name)",
        "u0": "optional initial design, list of numbers",
    },
    "study": {
        "N_values": [64, 128, 256, 512, 1024],
        "target_residual": 1e-8,
    },
    "plots": False,
}


# ---------------------------------------------------------------------------
# config parsing

def _edit_distance_leq_1(a: str, b: str) -> bool:
    """True when b is within one edit (incl. adjacent transposition) of a."""
    if a == b:
        return True
    la, lb = len(a), len(b)
    if abs(la - lb) > 1:
        return False
    if la == lb:
        diffs = [i for i in range(la) if a[i] != b[i]]
        if len(diffs) == 1:
            return True
        return (
            len(diffs) == 2
            and diffs[1] == diffs[0] + 1
            and a[diffs[0]] == b[diffs[1]]
            and a[diffs[1]] == b[diffs[0]]
        )
    if la > lb:
        a, b, la, lb = b, a, lb, la
    i = j = 0
    skipped = False
    while i < la and j < lb:
        if a[i] == b[j]:
            i += 1
            j += 1
        elif skipped:
            return False
        else:
            skipped = True
            j += 1
    return True


def _reject_unknown(section: str, given: dict, allowed) -> None:
    for key in given:
        if key not in allowed:
            hints = [k for k in allowed if _edit_distance_leq_1(str(key), k)]
            hint = f"; did you mean '{hints[0]}'?" if hints else ""
            raise ValueError(f"unknown key '{key}' in {section}{hint}")


def _require(section: str, data: dict, key: str):
    if key not in data:
        raise ValueError(f"missing required key '{key}' in {section}")
    return data[key]


def _as_number(section: str, key: str, value, positive=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"'{key}' in {section} must be a number, got {value!r}")
    if positive and not value > 0:
        raise ValueError(f"'{key}' in {section} must be positive, got {value}")
    return float(value)


def _as_int(section: str, key: str, value, minimum=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValueError(f"'{key}' in {section} must be an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ValueError(f"'{key}' in {section} must be >= {minimum}, got {value}")
    return value


def _as_bool(section: str, key: str, value):
    if not isinstance(value, bool):
        raise ValueError(f"'{key}' in {section} must be a boolean, got {value!r}")
    return value


@dataclass(frozen=True)
class SolverOptions:
    p_scale: float = 2.0
    use_kernels: bool = True
    design_freeze: int = 10
    b0_scale: float = 1.0
    max_design_step: float = 0.25
    rescaling: bool | None = None
    u0: tuple | None = None


@dataclass(frozen=True)
class StudyOptions:
    N_values: tuple = (64, 128, 256, 512, 1024)
    target_residual: float = 1e-8


@dataclass(frozen=True)
class RunConfig:
    """Validated run description (see ``oneshot-unsteady schema``)."""

    model_name: str
    model_params: dict
    T: float
    N: int
    mode: str
    inner_tol: float = 1e-10
    eps_stop: float = 1e-3
    max_iter: int = 1000
    log_every: int = 50
    seed: int = 0
    output_dir: str = "oneshot_output"
    solver: SolverOptions = SolverOptions()
    study: StudyOptions = StudyOptions()
    plots: bool = False

    def build_model(self):
        return MODELS[self.model_name](**self.model_params)

    def build_grid(self):
        return make_time_grid(self.T, self.N)


TOP_KEYS = (
    "model", "model_params", "grid", "mode", "tolerances", "max_iter",
    "log_every", "seed", "output_dir", "solver", "study", "plots",
)


def _parse_model_params(name: str, raw) -> dict:
    if not isinstance(raw, dict):
        raise ValueError("'model_params' must be an object")
    import dataclasses

    allowed = [f.name for f in dataclasses.fields(MODELS[name])]
    _reject_unknown("model_params", raw, allowed)
    params = {}
    for key, value in raw.items():
        if key == "M":
            params[key] = _as_int("model_params", key, value, minimum=3)
        else:
            params[key] = _as_number("model_params", key, value)
    return params


def parse_config(raw: dict) -> RunConfig:
    """Validate a decoded JSON object into a RunConfig.

    Unknown keys are a hard error; near-miss key names (one edit away)
    get a suggestion in the message.
    """
    if not isinstance(raw, dict):
        raise ValueError("config root must be a JSON object")
    _reject_unknown("config", raw, TOP_KEYS)

    model_name = _require("config", raw, "model")
    if model_name not in MODELS:
        raise ValueError(
            f"unknown model '{model_name}', expected one of {sorted(MODELS)}"
        )
    mode = _require("config", raw, "mode")
    if mode not in MODES:
        raise ValueError(f"unknown mode '{mode}', expected one of {list(MODES)}")

    grid = _require("config", raw, "grid")
    if not isinstance(grid, dict):
        raise ValueError("'grid' must be an object with keys T and N")
    _reject_unknown("grid", grid, ("T", "N"))
    T = _as_number("grid", "T", _require("grid", grid, "T"), positive=True)
    N = _as_int("grid", "N", _require("grid", grid, "N"), minimum=1)

    params = _parse_model_params(model_name, raw.get("model_params", {}))

    tol = raw.get("tolerances", {})
    if not isinstance(tol, dict):
        raise ValueError("'tolerances' must be an object")
    _reject_unknown("tolerances", tol, ("inner_tol", "eps_stop"))
    inner_tol = _as_number("tolerances", "inner_tol", tol.get("inner_tol", 1e-10), positive=True)
    eps_stop = _as_number("tolerances", "eps_stop", tol.get("eps_stop", 1e-3), positive=True)

    solver_raw = raw.get("solver", {})
    if not isinstance(solver_raw, dict):
        raise ValueError("'solver' must be an object")
    _reject_unknown(
        "solver", solver_raw,
        ("p_scale", "use_kernels", "design_freeze", "b0_scale",
         "max_design_step", "rescaling", "u0"),
    )
    u0 = solver_raw.get("u0")
    if u0 is not None:
        if not isinstance(u0, list) or not all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in u0
        ):
            raise ValueError("'u0' in solver must be a list of numbers")
        u0 = tuple(float(x) for x in u0)
    solver = SolverOptions(
        p_scale=_as_number("solver", "p_scale", solver_raw.get("p_scale", 2.0), positive=True),
        use_kernels=_as_bool("solver", "use_kernels", solver_raw.get("use_kernels", True)),
        design_freeze=_as_int("solver", "design_freeze", solver_raw.get("design_freeze", 10), minimum=0),
        b0_scale=_as_number("solver", "b0_scale", solver_raw.get("b0_scale", 1.0), positive=True),
        max_design_step=_as_number("solver", "max_design_step", solver_raw.get("max_design_step", 0.25), positive=True),
        rescaling=(
            None if "rescaling" not in solver_raw
            else _as_bool("solver", "rescaling", solver_raw["rescaling"])
        ),
        u0=u0,
    )

    study_raw = raw.get("study", {})
    if not isinstance(study_raw, dict):
        raise ValueError("'study' must be an object")
    _reject_unknown("study", study_raw, ("N_values", "target_residual"))
    n_values = study_raw.get("N_values", [64, 128, 256, 512, 1024])
    if (
        not isinstance(n_values, list)
        or not n_values
        or not all(isinstance(n, int) and not isinstance(n, bool) and n >= 1 for n in n_values)
    ):
        raise ValueError("'N_values' in study must be a non-empty list of integers >= 1")
    study = StudyOptions(
        N_values=tuple(n_values),
        target_residual=_as_number(
            "study", "target_residual", study_raw.get("target_residual", 1e-8),
            positive=True,
        ),
    )

    output_dir = raw.get("output_dir", "oneshot_output")
    if not isinstance(output_dir, str) or not output_dir:
        raise ValueError("'output_dir' must be a non-empty string")

    return RunConfig(
        model_name=model_name,
        model_params=params,
        T=T,
        N=N,
        mode=mode,
        inner_tol=inner_tol,
        eps_stop=eps_stop,
        max_iter=_as_int("config", "max_iter", raw.get("max_iter", 1000), minimum=1),
        log_every=_as_int("config", "log_every", raw.get("log_every", 50), minimum=1),
        seed=_as_int("config", "seed", raw.get("seed", 0), minimum=0),
        output_dir=output_dir,
        solver=solver,
        study=study,
        plots=_as_bool("config", "plots", raw.get("plots", False)),
    )


def load_config(path) -> RunConfig:
    """Read and validate a JSON config file."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as err:
            raise ValueError(f"config file {path} is not valid JSON: {err}") from err
    return parse_config(raw)


# ---------------------------------------------------------------------------
# output writing

def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def _write_history(path: Path, rows) -> None:
    lines = [HISTORY_HEADER]
    for r in rows:
        lines.append(
            ",".join(
                (
                    str(r.iter),
                    _fmt(r.total_residual),
                    _fmt(r.per_step_residual_max),
                    _fmt(r.jn),
                    _fmt(r.reduced_grad_norm),
                    _fmt(r.rho_estimate),
                    _fmt(r.rescaling_accepted_fraction),
                )
            )
        )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_report(path: Path, payload: dict) -> None:
    def _clean(obj):
        if isinstance(obj, dict):
            return {k: _clean(v) for k, v in obj.items()}
        if isinstance(obj, (list, tuple)):
            return [_clean(v) for v in obj]
        if isinstance(obj, (np.floating, np.integer)):
            obj = obj.item()
        if isinstance(obj, float) and not np.isfinite(obj):
            return None
        return obj

    path.write_text(
        json.dumps(_clean(payload), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )


def _plot_convergence(path: Path, rows, with_grad: bool) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "oneshot-unsteady"
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    iters = [r.iter for r in rows]
    ax.semilogy(iters, [max(r.total_residual, 1e-300) for r in rows],
                label="total residual")
    if with_grad:
        ax.semilogy(iters, [max(r.reduced_grad_norm, 1e-300) for r in rows],
                    label="reduced gradient", linestyle="--")
    ax.set_xlabel("iteration")
    ax.set_ylabel("norm")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, metadata={"Date": None})
    plt.close(fig)


def _plot_heatmap(path: Path, iters, per_step_rows) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "oneshot-unsteady"
    data = np.log10(np.maximum(np.vstack(per_step_rows), 1e-300))
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    im = ax.imshow(
        data,
        aspect="auto",
        origin="lower",
        extent=(1, data.shape[1], iters[0], iters[-1]),
        cmap="viridis",
    )
    fig.colorbar(im, ax=ax, label="log10 per-step residual")
    ax.set_xlabel("time step")
    ax.set_ylabel("iteration")
    fig.tight_layout()
    fig.savefig(path, metadata={"Date": None})
    plt.close(fig)


def _plot_scaling(path: Path, n_values, plain, rescaled) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "oneshot-unsteady"
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.loglog(n_values, plain, "o-", label="plain sweeps")
    ax.loglog(n_values, rescaled, "s-", label="rescaled sweeps")
    ax.set_xlabel("time steps N")
    ax.set_ylabel("iterations to target residual")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, metadata={"Date": None})
    plt.close(fig)


class _Snapshots:
    """Per-iteration residual rows, thinned by stride doubling."""

    def __init__(self, cap: int = 1024):
        self.iters: list[int] = []
        self.rows: list[np.ndarray] = []
        self.stride = 1
        self.cap = cap

    def add(self, k: int, per_step: np.ndarray) -> None:
        if (k - 1) % self.stride:
            return
        self.iters.append(k)
        self.rows.append(np.asarray(per_step, dtype=float).copy())
        if len(self.rows) > self.cap:
            self.iters = self.iters[::2]
            self.rows = self.rows[::2]
            self.stride *= 2


# ---------------------------------------------------------------------------
# mode runners

def _log_rows(rows, every: int) -> None:
    for r in rows:
        if r.iter % every == 0 or r.iter == rows[-1].iter:
            log.info(
                "iter %6d  residual %.6e  JN %.6e  |g| %.3e",
                r.iter, r.total_residual, r.jn, r.reduced_grad_norm,
            )


def _base_report(config: RunConfig) -> dict:
    return {
        "mode": config.mode,
        "model": config.model_name,
        "grid": {"T": config.T, "N": config.N},
        "seed": config.seed,
        "kernel_backend": _kernels.backend(),
        "retardation_factor": None,
    }


def _run_simulate_classic(config: RunConfig, outdir: Path) -> int:
    model = config.build_model()
    grid = config.build_grid()
    u = np.asarray(config.solver.u0, dtype=float) if config.solver.u0 else model.initial_design()
    try:
        states, total_inner, per_res = time_march(model, grid, u, tol=config.inner_tol)
    except ConvergenceError as err:
        log.error("classic time marching failed: %s", err)
        report = _base_report(config)
        report.update({"converged": False, "error": str(err)})
        _write_report(outdir / "report.json", report)
        return 2
    from .adjoint import objective_JN
    from .core import Trajectory

    traj = Trajectory(states, grid)
    rows = []
    jn_running = 0.0
    for i in range(grid.N):
        jn_running += grid.dt[i] * model.objective_instant(states[i], u)
        rows.append(
            HistoryRow(
                iter=i + 1,
                total_residual=float(per_res[i]),
                per_step_residual_max=float(per_res[i]),
                jn=jn_running / grid.T,
                reduced_grad_norm=0.0,
                rho_estimate=0.0,
                rescaling_accepted_fraction=0.0,
            )
        )
    _write_history(outdir / "history.csv", rows)
    report = _base_report(config)
    report.update(
        {
            "converged": True,
            "iterations": grid.N,
            "total_inner_iterations": total_inner,
            "final_total_residual": float(np.linalg.norm(per_res)),
            "final_JN": objective_JN(traj, u, model),
        }
    )
    _write_report(outdir / "report.json", report)
    if config.plots:
        _plot_convergence(outdir / "convergence.svg", rows, with_grad=False)
    _log_rows(rows, config.log_every)
    return 0


def _run_simulate_sweeps(config: RunConfig, outdir: Path, rescaling: bool) -> int:
    model = config.build_model()
    grid = config.build_grid()
    u = np.asarray(config.solver.u0, dtype=float) if config.solver.u0 else model.initial_design()
    snaps = _Snapshots() if config.plots else None

    def callback(k, report, traj):
        if snaps is not None:
            snaps.add(k, report.per_step_residual)

    sim = simulate(
        model, grid, u,
        tol=config.inner_tol,
        max_iter=config.max_iter,
        rescaling=rescaling,
        p_scale=config.solver.p_scale,
        use_kernels=config.solver.use_kernels,
        callback=callback,
    )
    _write_history(outdir / "history.csv", sim.rows)
    rho_power = estimate_contraction(
        sim.traj, u, model, probes=6,
        p_scale=config.solver.p_scale, rng=config.seed,
    )
    from .adjoint import objective_JN

    report = _base_report(config)
    report.update(
        {
            "converged": sim.converged,
            "iterations": sim.iterations,
            "final_total_residual": sim.rows[-1].total_residual if sim.rows else None,
            "final_JN": objective_JN(sim.traj, u, model),
            "rho_power": rho_power,
            "rescaling": rescaling,
        }
    )
    _write_report(outdir / "report.json", report)
    if config.plots:
        _plot_convergence(outdir / "convergence.svg", sim.rows, with_grad=False)
        if snaps is not None and snaps.rows:
            _plot_heatmap(outdir / "residual_heatmap.svg", snaps.iters, snaps.rows)
    _log_rows(sim.rows, config.log_every)
    return 0 if sim.converged else 2


def _oneshot_config(config: RunConfig, rescaling: bool) -> OneShotConfig:
    return OneShotConfig(
        eps_stop=config.eps_stop,
        max_iter=config.max_iter,
        b0_scale=config.solver.b0_scale,
        rescaling=rescaling,
        design_freeze=config.solver.design_freeze,
        p_scale=config.solver.p_scale,
        inner_tol=config.inner_tol,
        max_design_step=config.solver.max_design_step,
        use_kernels=config.solver.use_kernels,
        u0=config.solver.u0,
    )


def _run_optimize(config: RunConfig, outdir: Path, nested: bool) -> int:
    model = config.build_model()
    grid = config.build_grid()
    rescaling = True if config.solver.rescaling is None else config.solver.rescaling
    ocfg = _oneshot_config(config, rescaling)
    rep = run_nested(model, grid, ocfg) if nested else run_oneshot(model, grid, ocfg)
    _write_history(outdir / "history.csv", rep.history)
    report = _base_report(config)
    report.update(
        {
            "converged": rep.converged,
            "iterations": rep.iterations,
            "u_final": [float(x) for x in np.atleast_1d(rep.u)],
            "final_JN": rep.jn,
            "final_reduced_grad_norm": rep.reduced_grad_norm,
            "final_total_residual": rep.primal_residual,
            "final_adjoint_delta": rep.adjoint_delta,
            "retardation_factor": rep.retardation_factor,
            "simulation_iterations": rep.simulation_iterations,
            "total_inner_iterations": rep.total_inner_iterations,
            "message": rep.message,
        }
    )
    _write_report(outdir / "report.json", report)
    if config.plots and rep.history:
        _plot_convergence(outdir / "convergence.svg", rep.history, with_grad=True)
    _log_rows(rep.history, config.log_every)
    return 0 if rep.converged else 2


def _run_scaling_study(config: RunConfig, outdir: Path) -> int:
    model = config.build_model()
    u = np.asarray(config.solver.u0, dtype=float) if config.solver.u0 else model.initial_design()
    target = config.study.target_residual
    lines = ["N,iters_plain,iters_rescaled,converged_plain,converged_rescaled"]
    results = []
    all_converged = True
    for n in config.study.N_values:
        grid = make_time_grid(config.T, n)
        plain = simulate(
            model, grid, u, tol=target, max_iter=config.max_iter,
            rescaling=False, p_scale=config.solver.p_scale,
            use_kernels=config.solver.use_kernels,
        )
        resc = simulate(
            model, grid, u, tol=target, max_iter=config.max_iter,
            rescaling=True, p_scale=config.solver.p_scale,
            use_kernels=config.solver.use_kernels,
        )
        all_converged &= plain.converged and resc.converged
        results.append((n, plain, resc))
        lines.append(
            f"{n},{plain.iterations},{resc.iterations},"
            f"{int(plain.converged)},{int(resc.converged)}"
        )
        log.info(
            "N=%5d  plain %6d iters  rescaled %6d iters", n,
            plain.iterations, resc.iterations,
        )
    (outdir / "scaling.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    n_vals = [r[0] for r in results]
    iters_plain = [r[1].iterations for r in results]
    iters_resc = [r[2].iterations for r in results]
    report = _base_report(config)
    report.update(
        {
            "converged": bool(all_converged),
            "target_residual": target,
            "N_values": list(n_vals),
            "iterations_plain": iters_plain,
            "iterations_rescaled": iters_resc,
            "growth_plain": iters_plain[-1] / iters_plain[0] if iters_plain[0] else None,
            "growth_rescaled": iters_resc[-1] / iters_resc[0] if iters_resc[0] else None,
        }
    )
    _write_report(outdir / "report.json", report)
    if config.plots:
        _plot_scaling(outdir / "convergence.svg", n_vals, iters_plain, iters_resc)
    return 0 if all_converged else 2


def run_command(config: RunConfig, output_dir=None, quiet: bool = False) -> int:
    """Execute a validated RunConfig; returns the process exit code."""
    outdir = Path(output_dir if output_dir is not None else config.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    log.debug("kernel backend: %s", _kernels.backend())
    if config.mode == "simulate_classic":
        return _run_simulate_classic(config, outdir)
    if config.mode == "simulate_oneshot":
        return _run_simulate_sweeps(config, outdir, rescaling=False)
    if config.mode == "simulate_rescaled":
        return _run_simulate_sweeps(config, outdir, rescaling=True)
    if config.mode == "optimize_oneshot":
        return _run_optimize(config, outdir, nested=False)
    if config.mode == "optimize_nested":
        return _run_optimize(config, outdir, nested=True)
    return _run_scaling_study(config, outdir)


# ---------------------------------------------------------------------------
# entry point

def _configure_logging(quiet: bool) -> None:
    level_name = os.environ.get("ONESHOT_LOG_LEVEL", "info").lower()
    level = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}.get(
        level_name, logging.INFO
    )
    if quiet:
        level = logging.ERROR
    logging.basicConfig(level=level, format="%(message)s")
    log.setLevel(level)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oneshot-unsteady",
        description="One-shot optimization of unsteady time-marching solvers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="execute a run described by a JSON config")
    run.add_argument("--config", required=True, help="path to the JSON config file")
    run.add_argument("--output-dir", default=None, help="override the config's output_dir")
    run.add_argument("--quiet", action="store_true", help="errors only")
    sub.add_parser("schema", help="print the accepted config layout")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "schema":
        print(json.dumps(SCHEMA, indent=2, sort_keys=False))
        return 0
    _configure_logging(args.quiet)
    try:
        config = load_config(args.config)
    except (ValueError, OSError) as err:
        log.error("config error: %s", err)
        return 1
    try:
        return run_command(config, args.output_dir, args.quiet)
    except (DivergenceError, np.linalg.LinAlgError) as err:
        log.error("solver failure: %s", err)
        return 1
    except (ValueError, OSError) as err:
        log.error("run failed: %s", err)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
