"""Core dynamics of quadratic skew products.

The maps under study are

    F(z, w) = (p(z), w^2 + a z^2 + b z + c),    p(z) = z^2 + d,

with complex parameters (a, b, c) and a fixed quadratic base p.  This module
provides the map itself, fiber orbits with escape detection, Green-function
estimators for the base and the fibers, escape radii, and the affine
normalization of a general quadratic fiber polynomial to the monic centered
form above.

All escape-rate estimates use the normalized limit 2^{-n} log|w_n|, read off
once the orbit crosses a hard threshold.  At the threshold 1e100 the
truncation error of the limit is far below double precision, so no tail
correction is applied.

Everything in this module is a pure function of its arguments (no shared
mutable state), so concurrent callers need no coordination.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptySamplesError, NotExtendibleError

# Orbit magnitude at which the escape rate is read off.
ESCAPE_THRESHOLD = 1e100
# Saturation sentinel: grid loops clamp instead of overflowing.
SATURATION = 1e150
# Iterations granted to an orbit before it is declared bounded.
DEFAULT_BUDGET = 2000

# Smallest positive double; keeps `green > 0` for escapes detected very late.
_TINY = 5e-324


def _require_finite(*values):
    for v in values:
        z = complex(v)
        if not (math.isfinite(z.real) and math.isfinite(z.imag)):
            raise ValueError(f"non-finite component in {v!r}")


@dataclass(frozen=True)
class BaseQuadratic:
    """The base polynomial p(z) = z^2 + d."""

    d: complex

    def __post_init__(self):
        _require_finite(self.d)
        object.__setattr__(self, "d", complex(self.d))

    def __call__(self, z):
        return z * z + self.d


@dataclass(frozen=True)
class SkewParams:
    """A parameter point (a, b, c) together with its base polynomial.

    Represents F(z, w) = (p(z), w^2 + a z^2 + b z + c).
    """

    a: complex
    b: complex
    c: complex
    base: BaseQuadratic

    def __post_init__(self):
        _require_finite(self.a, self.b, self.c)
        object.__setattr__(self, "a", complex(self.a))
        object.__setattr__(self, "b", complex(self.b))
        object.__setattr__(self, "c", complex(self.c))

    @property
    def abc(self):
        return (self.a, self.b, self.c)

    def norm_inf(self):
        return max(abs(self.a), abs(self.b), abs(self.c))


@dataclass(frozen=True)
class OrbitOutcome:
    """Result of iterating a fiber orbit.

    `green` is the escape-rate estimate 2^{-n} log|w_n|; it is 0.0 exactly
    when the orbit stayed bounded for the whole budget and positive otherwise.
    `step` and `log_abs` are only set for escaping orbits.
    """

    escaped: bool
    green: float
    budget: int
    step: int | None = None
    log_abs: float | None = None

    def __post_init__(self):
        if self.escaped:
            assert self.green > 0.0
        else:
            assert self.green == 0.0


def rho(params: SkewParams, z: complex) -> complex:
    """Evaluate the fiber forcing polynomial a z^2 + b z + c."""
    return (params.a * z + params.b) * z + params.c


def step(params: SkewParams, point):
    """One application of F; saturates |w| at the overflow sentinel."""
    z, w = point
    w1 = w * w + rho(params, z)
    z1 = params.base(z)
    if abs(w1) > SATURATION:
        w1 = w1 * (SATURATION / abs(w1))
    if abs(z1) > SATURATION:
        z1 = z1 * (SATURATION / abs(z1))
    return (z1, w1)


def sup_rho_on_julia(params: SkewParams, julia_samples) -> float:
    """Lower estimate of sup_{z in J_p} |a z^2 + b z + c| from samples.

    The accuracy is controlled by the density of the sample set; consumers
    that need an upper bound add a safety margin (see escape radii).
    """
    pts = np.asarray(getattr(julia_samples, "points", julia_samples), dtype=complex)
    if pts.size == 0:
        raise EmptySamplesError("sup_rho_on_julia needs a nonempty sample set")
    vals = np.abs((params.a * pts + params.b) * pts + params.c)
    return float(vals.max())


def escape_radius_fiber(params: SkewParams, sup_rho: float) -> float:
    """Radius R with |w| > R  =>  |q_z(w)| > |w| for every z in J_p.

    Uses |q_z(w)| >= |w|^2 - sup_rho and the floor 3, so orbits leaving the
    disk of radius R escape monotonically.
    """
    if sup_rho < 0:
        raise ValueError("sup_rho must be nonnegative")
    return max(3.0, 2.0 * math.sqrt(1.0 + sup_rho))


def fiber_orbit(params: SkewParams, z0: complex, w0: complex = 0.0,
                budget: int = DEFAULT_BUDGET) -> OrbitOutcome:
    """Iterate the fiber orbit over z0 and estimate its vertical Green value.

    Escape is declared when |w_n| crosses ESCAPE_THRESHOLD, with
    green = 2^{-n} log|w_n|.  Budget exhaustion yields the bounded verdict
    (green exactly 0), not an error.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    a, b, c = params.a, params.b, params.c
    d = params.base.d
    z, w = complex(z0), complex(w0)
    for n in range(1, budget + 1):
        w = w * w + (a * z + b) * z + c
        z = z * z + d
        aw = abs(w)
        if aw > ESCAPE_THRESHOLD:
            la = math.log(aw)
            return OrbitOutcome(escaped=True,
                                green=max(math.ldexp(la, -n), _TINY),
                                budget=budget, step=n, log_abs=la)
        if abs(z) > SATURATION:
            z = z * (SATURATION / abs(z))
    return OrbitOutcome(escaped=False, green=0.0, budget=budget)


def green_base(base: BaseQuadratic, z: complex, budget: int = DEFAULT_BUDGET) -> float:
    """Green function of the base polynomial, 2^{-n} log^+ |p^n(z)|."""
    if budget < 1:
        raise ValueError("budget must be >= 1")
    d = base.d
    v = complex(z)
    for n in range(budget + 1):
        av = abs(v)
        if av > ESCAPE_THRESHOLD:
            return max(math.ldexp(math.log(av), -n), _TINY)
        v = v * v + d
    return 0.0


def normalize_quadratic(coeffs, base: BaseQuadratic):
    """Conjugate (p(z), A z^2 + B zw + C w^2 + D z + E w + F) to normal form.

    Returns (SkewParams, (alpha, beta, gamma)) where h(z, w) = (z, alpha z +
    beta w + gamma) satisfies h o F_original = F_normal o h.  Requires C != 0
    (otherwise the map does not extend to the projective plane).
    """
    A, B, C, D, E, F = (complex(v) for v in coeffs)
    _require_finite(A, B, C, D, E, F)
    if C == 0:
        raise NotExtendibleError("coefficient of w^2 vanishes")
    alpha = B / 2
    beta = C
    gamma = E / 2
    a = alpha + beta * A - alpha * alpha
    b = beta * D - 2 * alpha * gamma
    c = alpha * base.d + beta * F + gamma - gamma * gamma
    return SkewParams(a, b, c, base), (alpha, beta, gamma)


def apply_fiber_affine(conj, point):
    """Apply the fiber-affine map h(z, w) = (z, alpha z + beta w + gamma)."""
    alpha, beta, gamma = conj
    z, w = point
    return (z, alpha * z + beta * w + gamma)


def general_quadratic_step(coeffs, base: BaseQuadratic, point):
    """One step of the non-normalized map (p(z), A z^2 + B zw + C w^2 + ...)."""
    A, B, C, D, E, F = coeffs
    z, w = point
    return (base(z), A * z * z + B * z * w + C * w * w + D * z + E * w + F)


def base_escape_radius(base: BaseQuadratic) -> float:
    """All bounded orbits (and so all periodic points) of p lie in this disk."""
    return (1.0 + math.sqrt(1.0 + 4.0 * abs(base.d))) / 2.0 + 1e-9


def repelling_fixed_point(base: BaseQuadratic) -> complex:
    """The fixed point of p with the larger multiplier (always repelling
    unless d = 1/4, where both multipliers have modulus 1)."""
    s = cmath.sqrt(1 - 4 * base.d)
    z1 = (1 + s) / 2
    z2 = (1 - s) / 2
    return z1 if abs(z1) >= abs(z2) else z2
