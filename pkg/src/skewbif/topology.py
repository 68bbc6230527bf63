"""Square-root curve lifting, monodromy, linking, and component typing.

The preimage of a loop C = {(gamma_V(t), gamma_w(t))} under F, restricted to
the fibers over a boundary circle of a Fatou component U, is parametrized by

    w_t^2 = gamma_w(delta t) - (a gamma_U(t)^2 + b gamma_U(t) + c),

where p(gamma_U(t)) = gamma_V(delta t) and delta is the degree of p on U.
Whether the lift closes after one turn (two components) or two (one
component) is decided by the parity of the winding of the radicand around 0,
which in turn counts the roots of the fiber-forcing quadratic inside U.
These discrete invariants separate the unbounded hyperbolic components.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .basejulia import MeasureSamples, attracting_cycle, fatou_component_id, sample_julia
from .dynamics import BaseQuadratic, SkewParams, fiber_orbit, green_base, rho
from .errors import (AmbiguousComponentError, CriticalIntersectionError,
                     UnsupportedBaseError)
from .fields import classify_CDM

INF = complex("inf")
_MAX_STEPS = 2 ** 20


@dataclass
class LoopParam:
    """A closed loop in a fiber product, sampled and (optionally) generated.

    samples rows are (t, base_pt, w_val).  `generator` maps t in [0, 1] to
    (base_pt, w_val) and enables adaptive refinement; sampled-only loops must
    already satisfy the continuation step criterion.  degree_delta is the
    degree of p on the component U under the loop.
    """

    t: np.ndarray
    base_pts: np.ndarray
    w_vals: np.ndarray
    component_u: object
    component_v: object
    degree_delta: int
    generator: object = None
    admissible_bound: float = math.inf   # r(F) = min |rho| over Julia samples

    def __post_init__(self):
        if abs(self.base_pts[0] - self.base_pts[-1]) > 1e-8 or \
           abs(self.w_vals[0] - self.w_vals[-1]) > 1e-8:
            raise ValueError("loop is not closed")

    @property
    def admissible(self):
        return bool(np.max(np.abs(self.w_vals)) < self.admissible_bound)


@dataclass(frozen=True)
class LiftResult:
    num_components: int        # 2 on trivial monodromy, else 1
    winding_over_boundary: int
    linking: int | None        # defined only for two components
    monodromy_sign: int
    turns_of_w: int
    radicand_winding: int
    min_radicand: float
    steps_used: int

    def __post_init__(self):
        assert (self.num_components == 2) == (self.monodromy_sign == +1)
        if self.num_components != 2:
            assert self.linking is None


def min_abs_rho_on_julia(params: SkewParams, julia_samples) -> float:
    pts = np.asarray(getattr(julia_samples, "points", julia_samples), dtype=complex)
    return float(np.min(np.abs((params.a * pts + params.b) * pts + params.c)))


def circle_loop(params: SkewParams, julia_samples, w0=None, n_samples: int = 512,
                height_fn=None) -> LoopParam:
    """Constant-height loop over the unit circle (base d = 0).

    gamma_U(t) = e^{2 pi i t} winds once around the disk boundary; the fiber
    height is the constant w0 (default r(F)/2, admissible by construction) or
    a supplied function of t.
    """
    r = min_abs_rho_on_julia(params, julia_samples)
    if w0 is None and height_fn is None:
        w0 = r / 2.0
    if height_fn is None:
        height_fn = lambda t: complex(w0)

    def gen(t):
        return cmath.exp(2j * math.pi * t), height_fn(t)

    t = np.linspace(0.0, 1.0, n_samples + 1)
    base = np.exp(2j * np.pi * t)
    base[-1] = base[0]
    w = np.array([height_fn(tt) for tt in t])
    w[-1] = w[0]
    return LoopParam(t=t, base_pts=base, w_vals=w, component_u=0, component_v=0,
                     degree_delta=2, generator=gen, admissible_bound=r)


def _radicand(params: SkewParams, loop: LoopParam, t):
    """gamma_w(delta * t) - rho(gamma_U(t)) at arbitrary t via the generator."""
    delta = loop.degree_delta
    base, _ = loop.generator(t)
    _, w = loop.generator((delta * t) % 1.0)
    return w - rho(params, base)


def lift_curve(params: SkewParams, loop: LoopParam, steps: int = 1024) -> LiftResult:
    """Continue w_t = sqrt(radicand(t)) around the loop and read off monodromy.

    Adaptive bisection keeps every argument increment of the radicand below
    pi/2; if that cannot be achieved within 2^20 samples, or the radicand
    drops below tolerance, the loop passes through a critical value and
    CriticalIntersectionError is raised.
    """
    if not loop.admissible:
        raise ValueError("loop is not admissible (fiber height reaches r(F))")
    if loop.generator is not None:
        t = list(np.linspace(0.0, 1.0, steps + 1))
        vals = [_radicand(params, loop, tt) for tt in t]
    else:
        delta = loop.degree_delta
        t = list(loop.t)
        # sampled loops carry w already matched to gamma(delta t)
        vals = [w - rho(params, z) for z, w in zip(loop.base_pts, loop.w_vals)]

    scale = max(abs(v) for v in vals)
    if scale == 0 or min(abs(v) for v in vals) < 1e-12 * scale:
        raise CriticalIntersectionError("radicand vanishes along the loop")

    # adaptive refinement (generator loops only)
    i = 0
    while i < len(t) - 1:
        a, b = vals[i], vals[i + 1]
        dphi = abs(cmath.phase(b / a))
        if dphi < math.pi / 2:
            i += 1
            continue
        if loop.generator is None or len(t) >= _MAX_STEPS:
            raise CriticalIntersectionError(
                "argument step too large; loop too close to a critical value")
        tm = 0.5 * (t[i] + t[i + 1])
        vm = _radicand(params, loop, tm)
        if abs(vm) < 1e-12 * scale:
            raise CriticalIntersectionError("radicand vanishes along the loop")
        t.insert(i + 1, tm)
        vals.insert(i + 1, vm)

    vals = np.asarray(vals)
    phases = np.angle(vals)
    dphi = np.diff(phases)
    dphi = np.mod(dphi + np.pi, 2 * np.pi) - np.pi
    wind_f = dphi.sum() / (2 * np.pi)
    wind = int(round(wind_f))
    if abs(wind_f - wind) > 0.05:
        raise CriticalIntersectionError(
            f"radicand winding {wind_f:.3f} is not an integer; refine the loop")

    two_components = (wind % 2 == 0)
    if two_components:
        return LiftResult(num_components=2, winding_over_boundary=1,
                          linking=wind // 2, monodromy_sign=+1,
                          turns_of_w=wind // 2, radicand_winding=wind,
                          min_radicand=float(np.min(np.abs(vals))),
                          steps_used=len(t) - 1)
    return LiftResult(num_components=1, winding_over_boundary=2,
                      linking=None, monodromy_sign=-1,
                      turns_of_w=wind, radicand_winding=wind,
                      min_radicand=float(np.min(np.abs(vals))),
                      steps_used=len(t) - 1)


def lift_curve_samples(params: SkewParams, loop: LoopParam, steps: int = 1024):
    """Sampled lifted curve (t, base_pt, w_t) for plotting and CSV export.

    Continues the square root along the loop exactly as `lift_curve`, but
    returns the path itself.
    """
    t = np.linspace(0.0, 1.0, steps + 1)
    vals = np.array([_radicand(params, loop, tt) for tt in t])
    scale = np.abs(vals).max()
    if scale == 0 or np.abs(vals).min() < 1e-12 * scale:
        raise CriticalIntersectionError("radicand vanishes along the loop")
    phases = np.angle(vals)
    dphi = np.diff(phases)
    dphi = np.mod(dphi + np.pi, 2 * np.pi) - np.pi
    theta = phases[0] + np.concatenate([[0.0], np.cumsum(dphi)])
    w = np.sqrt(np.abs(vals)) * np.exp(0.5j * theta)
    base = np.array([loop.generator(tt)[0] for tt in t]) \
        if loop.generator is not None else loop.base_pts
    return t, base, w


def lift_polyline_csv(path, params: SkewParams, loop: LoopParam,
                      steps: int = 1024):
    t, base, w = lift_curve_samples(params, loop, steps)
    with open(path, "w") as fh:
        fh.write("t,base_re,base_im,w_re,w_im\n")
        for tt, z, ww in zip(t, base, w):
            fh.write(f"{float(tt)!r},{float(z.real)!r},{float(z.imag)!r},"
                     f"{float(ww.real)!r},{float(ww.imag)!r}\n")


def fiber_quadratic_roots(params: SkewParams):
    """Roots of a X^2 + b X + c, with infinity filling in for degenerate a."""
    a, b, c = params.a, params.b, params.c
    if a == 0:
        if b == 0:
            return (INF, INF)
        return (-c / b, INF)
    disc = cmath.sqrt(b * b - 4 * a * c)
    # Citardauq for the smaller root: avoids cancellation
    r1 = (-b - disc) / (2 * a) if abs(-b - disc) > abs(-b + disc) \
        else (-b + disc) / (2 * a)
    r2 = c / (a * r1) if r1 != 0 else (-b / a - r1)
    return (r1, r2)


def _root_component(base: BaseQuadratic, root, green_tol=1e-9):
    if root is INF or (isinstance(root, complex) and
                       (math.isinf(root.real) or math.isinf(root.imag))):
        return "infinity"
    return fatou_component_id(base, root, green_tol=green_tol)


def roots_in_component_count(params: SkewParams, base: BaseQuadratic,
                             component) -> int:
    """Number of roots of the fiber-forcing quadratic inside the component."""
    count = 0
    for r in fiber_quadratic_roots(params):
        if _root_component(base, r) == component:
            count += 1
    return count


def component_type(params: SkewParams):
    """Unordered pair of Fatou components containing the two fiber roots.

    This is the invariant indexing the unbounded vertically-expanding
    components; a root on the Julia set of the base makes the type undefined
    (AmbiguousComponentError propagates).
    """
    labels = sorted(str(_root_component(params.base, r))
                    for r in fiber_quadratic_roots(params))
    return tuple(labels)


def julia_topology_label(params: SkewParams, depth: int = 2,
                         julia_samples: MeasureSamples = None,
                         budget: int = 1500):
    """Topological type of the Julia set over the bounded base components.

    Requires escape of every sampled fiber critical point (the map must look
    like a D-class parameter) and a base with a known component structure.
    The label is decided by where the fiber roots sit, verified by `depth`
    rounds of curve lifting along the periodic component cycle:

      * some bounded component holds exactly one root -> suspension,
      * all roots at infinity (degenerate quadratic)  -> circle_times_cantor,
      * finite roots all escaping                      -> base_times_cantor,
      * roots paired inside bounded components         -> circle_times_cantor.
    """
    base = params.base
    if julia_samples is None:
        julia_samples = sample_julia(base, 256, seed=11)
    verdict = classify_CDM(params, julia_samples, budget=budget)
    if verdict.label != "D":
        raise UnsupportedBaseError(
            f"julia_topology_label needs an all-escaping parameter, got {verdict.label}")

    roots = fiber_quadratic_roots(params)
    labels = [_root_component(base, r) for r in roots]

    cyc = attracting_cycle(base)
    if cyc is None and abs(base.d + 2) > 1e-12:
        # no bounded components at all: product-like over a Cantor base
        return "base_times_cantor"

    per_component = {}
    if cyc is not None:
        m = len(cyc)
        for idx in range(m):
            comp = idx  # cycle class labels from fatou_component_id
            s = sum(1 for lab in labels if lab == comp)
            per_component[comp] = s
        parity_odd = any(s == 1 for s in per_component.values())
        _verify_lift_parity(params, julia_samples, per_component, depth)
        if parity_odd:
            return "suspension"
    all_at_inf = all(_is_infinite(r) for r in roots)
    if all_at_inf:
        return "circle_times_cantor"
    if all(lab == "infinity" for lab in labels):
        return "base_times_cantor"
    if per_component and len(set(per_component.values())) > 1 and len(per_component) > 1:
        return ("mixed", sorted(per_component.items()))
    return "circle_times_cantor"


def _is_infinite(r):
    return r is INF or math.isinf(r.real) or math.isinf(r.imag)


def _verify_lift_parity(params, julia_samples, per_component, depth):
    """Cross-check root counts against lift monodromy for circle bases."""
    if abs(params.base.d) > 1e-12 or depth <= 0:
        return   # loop construction is Boettcher-free only for d = 0
    s = per_component.get(0)
    if s is None:
        return
    loop = circle_loop(params, julia_samples)
    res = lift_curve(params, loop)
    if (res.radicand_winding - s) % 2 != 0:
        raise CriticalIntersectionError(
            f"lift parity {res.radicand_winding} inconsistent with root count {s}")
    # iterated pullback: feed the lifted height back in as the new loop
    for _ in range(depth - 1):
        if res.num_components == 1:
            break
        prev = res

        def height(t, params=params, loop=loop):
            v = _radicand(params, loop, t)
            return cmath.sqrt(v)

        # heights of the lifted curve stay below sqrt(max radicand) < r(F)
        loop = circle_loop(params, julia_samples, height_fn=height)
        res = lift_curve(params, loop)


@dataclass
class JonssonReport:
    t: float
    fixed_points_exact: bool
    escaping_fraction: float
    all_marked_escape: bool
    reach_At_fraction: float
    all_reach_At: bool
    classification: str

    @property
    def all_pass(self):
        return self.fixed_points_exact and self.all_marked_escape and self.all_reach_At


def jonsson_params(t: float, variant: str = "main") -> SkewParams:
    """The interval-base examples with prescribed bounded fibers.

    main:  rho = t (z + 1)(2 - z)   bounded fibers {-1, 2}
    one:   rho = t (2 - z)          bounded fiber  {2}
    two:   rho = t (z + 2)(2 - z)   bounded fibers {-2, 2}
    """
    base = BaseQuadratic(-2.0)
    if variant == "main":
        return SkewParams(-t, t, 2 * t, base)
    if variant == "one":
        return SkewParams(0.0, -t, 2 * t, base)
    if variant == "two":
        return SkewParams(-t, 0.0, 4 * t, base)
    raise ValueError(f"unknown variant {variant!r}")


def jonsson_check(t: float, n_samples: int = 500, seed: int = 3,
                  budget: int = 2000) -> JonssonReport:
    """Desk-scale verification of the mixed-type example at parameter t.

    (i) the critical points over -1 and 2 are fixed (exact algebra);
    (ii) samples of the interval Julia set away from {-1, 2} escape;
    (iii) every such sample's base orbit reaches the expansion window
          A_t = {z : |t (z+1)(2-z)| >= 3 sqrt(t)} within 200 steps.
    Samples come through the angle doubling conjugacy x -> 2 cos(2 pi x).
    """
    params = jonsson_params(t, "main")
    base = params.base

    fixed_ok = True
    for zf in (-1.0 + 0j, 2.0 + 0j):
        z1 = zf * zf + base.d
        w1 = rho(params, zf)
        fixed_ok &= (z1 == zf) and (w1 == 0)

    rng = np.random.default_rng(seed)
    zs = []
    while len(zs) < n_samples:
        x = rng.uniform()
        z = 2.0 * math.cos(2 * math.pi * x)
        if abs(z + 1) > 1e-2 and abs(z - 2) > 1e-2:
            zs.append(z)
    zs = np.array(zs)

    escaped = 0
    for z in zs:
        if fiber_orbit(params, z, 0.0, budget=budget).escaped:
            escaped += 1

    thresh = 3.0 * math.sqrt(t) if t > 0 else 0.0
    reach = 0
    for z in zs:
        v = z
        ok = False
        for _ in range(200):
            if abs(t * (v + 1) * (2 - v)) >= thresh and t > 0:
                ok = True
                break
            v = v * v + base.d
        reach += ok
    jul = sample_julia(base, 256, seed=seed)
    cdm = classify_CDM(params, jul, budget=budget)
    return JonssonReport(
        t=t, fixed_points_exact=fixed_ok,
        escaping_fraction=escaped / len(zs),
        all_marked_escape=(escaped == len(zs)),
        reach_At_fraction=reach / len(zs),
        all_reach_At=(reach == len(zs)),
        classification=cdm.label)


def jonsson_variant_type(t: float, variant: str, n_samples: int = 400,
                         seed: int = 5, budget: int = 1500, tol: float = 5e-3):
    """Set of fibers with bounded critical orbit for the variant family.

    Checks the designated fibers are bounded and that interval samples away
    from them escape; returns the sorted bounded-fiber set found.
    """
    params = jonsson_params(t, variant)
    marked = {"main": (-1.0, 2.0), "one": (2.0,), "two": (-2.0, 2.0)}[variant]
    bounded = []
    for z in marked:
        if not fiber_orbit(params, z, 0.0, budget=budget).escaped:
            bounded.append(z)
    rng = np.random.default_rng(seed)
    extras = []
    count = 0
    while count < n_samples:
        x = rng.uniform()
        z = 2.0 * math.cos(2 * math.pi * x)
        if min(abs(z - m) for m in marked) < tol:
            continue
        count += 1
        if not fiber_orbit(params, z, 0.0, budget=budget).escaped:
            extras.append(z)
    return sorted(bounded), sorted(extras)
