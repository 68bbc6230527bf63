"""Vectorized orbit kernels.

Everything here iterates w <- w^2 + rho(z), z <- z^2 + d over numpy arrays
with active-set compression: escaped entries are retired from the working
arrays so late iterations only touch the (usually small) bounded core.  The
per-step arithmetic matches the scalar loop in `dynamics.fiber_orbit`
operation for operation, so grid renders and point queries agree bitwise.
"""

from __future__ import annotations

import numpy as np

from .dynamics import DEFAULT_BUDGET, ESCAPE_THRESHOLD

# Base coordinates are clamped here so rho never overflows mid-render.
_Z_CLAMP = 1e50


def green_batch(a, b, c, d, z0, w0=0.0, budget: int = DEFAULT_BUDGET,
                threshold: float = ESCAPE_THRESHOLD):
    """Fiber-orbit Green estimates for broadcastable parameter/start arrays.

    Parameters a, b, c, d, z0, w0 broadcast against each other.  Returns
    (green, escaped, steps) of the broadcast shape: green is 2^{-n} log|w_n|
    at escape and 0.0 for bounded orbits, steps is the escape step (0 for
    bounded orbits).
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    arrs = np.broadcast_arrays(
        np.asarray(a, dtype=complex), np.asarray(b, dtype=complex),
        np.asarray(c, dtype=complex), np.asarray(d, dtype=complex),
        np.asarray(z0, dtype=complex), np.asarray(w0, dtype=complex))
    shape = arrs[0].shape
    a_, b_, c_, d_, z, w = [x.ravel().copy() for x in arrs]
    size = z.size

    green = np.zeros(size)
    escaped = np.zeros(size, dtype=bool)
    steps = np.zeros(size, dtype=np.int64)
    idx = np.arange(size)

    for n in range(1, budget + 1):
        w = w * w + (a_ * z + b_) * z + c_
        z = z * z + d_
        aw = np.abs(w)
        esc = aw > threshold
        if esc.any():
            hit = idx[esc]
            g = np.ldexp(np.log(aw[esc]), -n)
            np.maximum(g, 5e-324, out=g)
            green[hit] = g
            escaped[hit] = True
            steps[hit] = n
            keep = ~esc
            idx = idx[keep]
            if idx.size == 0:
                break
            a_, b_, c_, d_, z, w = (x[keep] for x in (a_, b_, c_, d_, z, w))
        az = np.abs(z)
        big = az > _Z_CLAMP
        if big.any():
            z[big] *= _Z_CLAMP / az[big]

    return green.reshape(shape), escaped.reshape(shape), steps.reshape(shape)


def bounded_mask(a, b, c, d, z0, w0=0.0, budget: int = DEFAULT_BUDGET,
                 threshold: float = ESCAPE_THRESHOLD):
    """Boolean mask of orbits that stay below the escape threshold."""
    _, escaped, _ = green_batch(a, b, c, d, z0, w0, budget, threshold)
    return ~escaped


def green_base_batch(d, z0, budget: int = DEFAULT_BUDGET,
                     threshold: float = ESCAPE_THRESHOLD):
    """Base Green function 2^{-n} log^+ |p^n(z)| over an array of starts."""
    z = np.asarray(z0, dtype=complex).ravel().copy()
    shape = np.asarray(z0, dtype=complex).shape
    size = z.size
    green = np.zeros(size)
    idx = np.arange(size)
    for n in range(budget + 1):
        az = np.abs(z)
        esc = az > threshold
        if esc.any():
            hit = idx[esc]
            g = np.ldexp(np.log(az[esc]), -n)
            np.maximum(g, 5e-324, out=g)
            green[hit] = g
            keep = ~esc
            idx = idx[keep]
            if idx.size == 0:
                break
            z = z[keep]
        z = z * z + d
    return green.reshape(shape)
