# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled sweep kernels.

Arithmetic mirrors ``_ref.py`` expression for expression; only the loop
machinery differs.
"""

import numpy as np


def vdp_forward_sweep(const double[:, ::1] states, const double[::1] y0,
                      const double[::1] dt, double u, double p_scale):
    cdef Py_ssize_t n = states.shape[0]
    out_arr = np.empty((n, 2), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double xp = y0[0]
    cdef double vp = y0[1]
    cdef double x, v, h, a, c, d, det, r0, r1
    cdef Py_ssize_t i
    for i in range(n):
        x = states[i, 0]
        v = states[i, 1]
        h = dt[i]
        a = 1.0 / h
        c = 1.0 + 2.0 * u * x * v
        d = 1.0 / h - u * (1.0 - x * x)
        det = p_scale * (a * d + c)
        if det == 0.0:
            raise np.linalg.LinAlgError(
                "singular step matrix at time index %d" % i
            )
        r0 = (x - xp) / h - v
        r1 = (v - vp) / h - (-x + u * (1.0 - x * x) * v)
        x = x - (d * r0 + r1) / det
        v = v - (a * r1 - c * r0) / det
        out[i, 0] = x
        out[i, 1] = v
        xp = x
        vp = v
    return out_arr
