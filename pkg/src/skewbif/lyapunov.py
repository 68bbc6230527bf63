"""Lyapunov exponents of quadratic skew products.

Three routes to the vertical exponent L_v:

  * measure average   -- Monte Carlo over an equilibrium-measure cloud,
  * periodic fibers   -- mean of the fiber Green value over all points of
                         period dividing N,
  * return maps       -- Green values of the return map's full critical set
                         over the repelling period-N points.

All three estimate log 2 + (average of G(z, 0) over mu_p); the base exponent
is log 2 + G_p(0).  Every estimate is bounded below by log 2 because Green
values are nonnegative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .basejulia import MeasureSamples, periodic_points
from .dynamics import DEFAULT_BUDGET, BaseQuadratic, SkewParams, green_base, rho
from .kernels import green_batch

LOG2 = math.log(2.0)


@dataclass(frozen=True)
class LyapEstimate:
    value: float
    estimator: str
    sample_size: int
    stderr: float

    def __post_init__(self):
        assert self.value >= LOG2 - 1e-9, "vertical/base exponent below log 2"


def lyap_base(base: BaseQuadratic, budget: int = DEFAULT_BUDGET) -> LyapEstimate:
    """Base exponent log 2 + G_p(0); the only base critical point is 0."""
    g = green_base(base, 0.0, budget=budget)
    return LyapEstimate(value=LOG2 + g, estimator="measure_avg",
                        sample_size=1, stderr=0.0)


def lyap_vertical_measure(params: SkewParams, mu_samples: MeasureSamples,
                          budget: int = DEFAULT_BUDGET) -> LyapEstimate:
    """Monte Carlo L_v: log 2 plus the weighted mean of G(z, 0) over the cloud."""
    if mu_samples.label != "mu_p":
        raise ValueError("lyap_vertical_measure expects samples labeled mu_p")
    g, _, _ = green_batch(params.a, params.b, params.c, params.base.d,
                          mu_samples.points, 0.0, budget=budget)
    w = mu_samples.weights
    mean = float(np.dot(w, g))
    n = g.size
    var = float(np.dot(w, (g - mean) ** 2))
    return LyapEstimate(value=LOG2 + mean, estimator="measure_avg",
                        sample_size=n, stderr=math.sqrt(var / max(n, 1)))


def lyap_vertical_periodic(params: SkewParams, N: int,
                           budget: int = DEFAULT_BUDGET) -> LyapEstimate:
    """L_v from all base points of period dividing N.

    log 2 + mean over the 2^N solutions of p^N(z) = z of G(z, 0).
    """
    if not (1 <= N <= 14):
        raise ValueError("N must be between 1 and 14")
    pts = periodic_points(params.base, N)
    z = np.array([pp.z for pp in pts])
    g, _, _ = green_batch(params.a, params.b, params.c, params.base.d,
                          z, 0.0, budget=budget)
    return LyapEstimate(value=LOG2 + float(g.mean()),
                        estimator=f"periodic_fiber({N})",
                        sample_size=z.size, stderr=0.0)


def return_map_critical_points(params: SkewParams, z0: complex, N: int):
    """Critical points of the return map Q^N over the periodic point z0.

    The fiber critical point is always w = 0, so the critical set is the
    union over 0 <= i < N of the 2^i preimages of 0 under Q^i: backward
    square-root chains through the fibers along the cycle.  Principal roots
    with both signs; no branch continuity is needed since the result is a
    set.  Returned with multiplicity (2^N - 1 points in total).
    """
    zs = [complex(z0)]
    for _ in range(N - 1):
        zs.append(zs[-1] * zs[-1] + params.base.d)
    rhos = [rho(params, z) for z in zs]
    out = [np.array([0j])]
    for i in range(1, N):
        v = np.array([0j])
        for j in range(i - 1, -1, -1):
            r = np.sqrt(v - rhos[j])
            v = np.concatenate([r, -r])
        out.append(v)
    return np.concatenate(out)


def lyap_vertical_return(params: SkewParams, N: int,
                         budget: int = DEFAULT_BUDGET) -> LyapEstimate:
    """L_v from the return maps over the repelling period-N points.

    log 2 + (1/N) * mean over z in R_N of the summed Green values of the
    return map's critical set.  The mean is taken over the points actually
    found (removes the O(2^-N) bias of dividing by 2^N when the base has a
    non-repelling cycle).
    """
    if not (1 <= N <= 8):
        raise ValueError("N must be between 1 and 8")
    pts = [pp for pp in periodic_points(params.base, N) if pp.repelling]
    if not pts:
        raise ValueError("no repelling period-N points found")
    total = 0.0
    for pp in pts:
        crit = return_map_critical_points(params, pp.z, N)
        g, _, _ = green_batch(params.a, params.b, params.c, params.base.d,
                              pp.z, crit, budget=budget)
        total += float(g.sum())
    value = LOG2 + total / (N * len(pts))
    return LyapEstimate(value=value, estimator=f"return_map({N})",
                        sample_size=len(pts), stderr=0.0)
