"""Forward-sweep kernels, compiled when available.

The compiled Cython extension and the pure-Python reference in ``_ref``
implement algebraically identical arithmetic; the backend is chosen once
at import.  Set ``ONESHOT_PURE_PYTHON=1`` to force the fallback (used by
the parity tests and the benchmark).
"""

import os

import numpy as np

from . import _ref

if os.environ.get("ONESHOT_PURE_PYTHON"):
    _impl = _ref
else:
    try:
        from . import _sweeps as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _ref


def backend() -> str:
    """Name of the active backend: "compiled" or "python"."""
    return "python" if _impl is _ref else "compiled"


def vdp_forward_sweep(states, y0, dt, u, p_scale=1.0):
    """One whole-trajectory sweep of the Van der Pol family step map.

    Args:
        states: (N, 2) incoming trajectory.
        y0: initial state (2,).
        dt: (N,) step sizes.
        u: scalar damping.
        p_scale: preconditioner damping factor.

    Returns:
        (N, 2) updated trajectory.
    """
    states = np.ascontiguousarray(states, dtype=np.float64)
    y0 = np.ascontiguousarray(y0, dtype=np.float64)
    dt = np.ascontiguousarray(dt, dtype=np.float64)
    if states.ndim != 2 or states.shape[1] != 2:
        raise ValueError(f"expected (N, 2) states, got shape {states.shape}")
    if dt.shape[0] != states.shape[0]:
        raise ValueError("dt length does not match trajectory length")
    return _impl.vdp_forward_sweep(states, y0, dt, float(u), float(p_scale))
