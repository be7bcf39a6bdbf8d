"""Pure-Python reference implementation of the sweep kernels.

Keeps the arithmetic expression-for-expression identical to the Cython
version in ``_sweeps.pyx`` so the two backends agree to rounding.
"""

import numpy as np


def vdp_forward_sweep(states, y0, dt, u, p_scale):
    n = states.shape[0]
    out = np.empty_like(states)
    rows = states.tolist()
    steps = dt.tolist()
    xp = float(y0[0])
    vp = float(y0[1])
    for i in range(n):
        x, v = rows[i]
        h = steps[i]
        # P = p_scale * [[1/h, -1], [1 + 2uxv, 1/h - u(1 - x^2)]]
        a = 1.0 / h
        c = 1.0 + 2.0 * u * x * v
        d = 1.0 / h - u * (1.0 - x * x)
        det = p_scale * (a * d + c)
        if det == 0.0:
            raise np.linalg.LinAlgError(
                f"singular step matrix at time index {i}"
            )
        r0 = (x - xp) / h - v
        r1 = (v - vp) / h - (-x + u * (1.0 - x * x) * v)
        x = x - (d * r0 + r1) / det
        v = v - (a * r1 - c * r0) / det
        out[i, 0] = x
        out[i, 1] = v
        xp = x
        vp = v
    return out
