"""Dynamics of the base polynomial p(z) = z^2 + d.

Periodic points via Newton's method (no giant coefficient vectors), Julia and
equilibrium-measure sampling via inverse iteration, and Fatou-component
labeling for hyperbolic bases plus the Chebyshev case d = -2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import (BaseQuadratic, base_escape_radius, green_base,
                       repelling_fixed_point)
from .errors import (AmbiguousComponentError, EmptySamplesError,
                     ResidualRootsError, UnsupportedBaseError)

_DEDUP_TOL = 1e-9
_POLISH_TOL = 1e-12
_PERIOD_TOL = 1e-8


@dataclass(frozen=True)
class PeriodicPoint:
    """A solution of p^n(z) = z with its exact period and multiplier.

    The multiplier is (p^m)'(z) over the exact period m; repelling means its
    modulus exceeds 1.
    """

    z: complex
    exact_period: int
    base_multiplier: complex
    repelling: bool


@dataclass
class MeasureSamples:
    """Weighted point cloud standing in for a measure on the base plane."""

    points: np.ndarray
    weights: np.ndarray
    label: str = "custom"

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=complex).ravel()
        self.weights = np.asarray(self.weights, dtype=float).ravel()
        if self.points.size == 0:
            raise EmptySamplesError("MeasureSamples needs at least one point")
        if self.points.shape != self.weights.shape:
            raise ValueError("points and weights must have the same length")
        total = self.weights.sum()
        if not math.isfinite(total) or total <= 0:
            raise ValueError("weights must sum to a positive finite number")
        self.weights = self.weights / total

    @classmethod
    def uniform(cls, points, label="custom"):
        pts = np.asarray(points, dtype=complex).ravel()
        if pts.size == 0:
            raise EmptySamplesError("MeasureSamples needs at least one point")
        return cls(pts, np.full(pts.size, 1.0 / pts.size), label)

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("re,im,weight\n")
            for z, w in zip(self.points, self.weights):
                fh.write(f"{float(z.real)!r},{float(z.imag)!r},{float(w)!r}\n")

    @classmethod
    def from_csv(cls, path, label="custom"):
        data = np.genfromtxt(path, delimiter=",", skip_header=1)
        data = np.atleast_2d(data)
        return cls(data[:, 0] + 1j * data[:, 1], data[:, 2], label)


def _pn_and_deriv(z, n, d):
    """p^n(z) and (p^n)'(z) by the chain rule, vectorized.

    Divergent entries overflow to inf/nan; callers discard them.
    """
    v = z.astype(complex, copy=True)
    dv = np.ones_like(v)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(n):
            dv = 2.0 * v * dv
            v = v * v + d
    return v, dv


def _inverse_iteration(base, count, steps, rng, start=None):
    """Random-branch inverse orbit of p; lands (and stays) on J_p."""
    z = np.full(count, start if start is not None else repelling_fixed_point(base),
                dtype=complex)
    for _ in range(steps):
        signs = rng.integers(0, 2, size=count) * 2 - 1
        z = signs * np.sqrt(z - base.d)
    return z


def _dedup_complex(points, tol):
    """Greedy cluster of near-coincident points; returns representatives."""
    if points.size == 0:
        return points
    order = np.lexsort((points.imag, points.real))
    pts = points[order]
    reps = []
    for z in pts:
        if reps and abs(z - reps[-1]) < tol:
            continue
        # sorting by real part only guards nearby reps; check a short tail
        if any(abs(z - r) < tol for r in reps[-8:]):
            continue
        reps.append(z)
    return np.array(reps, dtype=complex)


def attracting_cycle(base: BaseQuadratic, budget: int = 4000, tol: float = 1e-10):
    """Attracting (or superattracting) cycle of p, found via the critical orbit.

    Returns the cycle as a list starting at the point the orbit first
    approaches, or None when the critical orbit escapes or fails to settle
    (non-hyperbolic parameters).
    """
    d = base.d
    z = 0j
    if green_base(base, z, budget=400) > 0:
        return None
    for _ in range(budget):
        z = z * z + d
    # z is now essentially on the attracting cycle, if there is one
    orbit = [z]
    v = z * z + d
    for m in range(1, 256):
        if abs(v - z) < 1e-7:
            break
        orbit.append(v)
        v = v * v + d
    else:
        return None
    m = len(orbit)
    # Newton-polish the cycle start on p^m(z) - z = 0
    zz = np.array([orbit[0]])
    for _ in range(50):
        f, df = _pn_and_deriv(zz, m, d)
        stepv = (f - zz) / (df - 1.0)
        zz = zz - stepv
        if abs(stepv[0]) < 1e-14:
            break
    cyc = []
    v = complex(zz[0])
    for _ in range(m):
        cyc.append(v)
        v = v * v + d
    mult = np.prod([2.0 * w for w in cyc])
    if abs(mult) >= 1.0 - 1e-9:
        return None
    return cyc


def _merge_flat_clusters(roots, n, d, reach: float = 1e-6):
    """Collapse numerically indistinguishable root clusters.

    Near a multiple root of p^n(z) - z the residual underflows to zero on a
    whole disk, so distinct survivors of the pointwise dedup can all be the
    same root.  Two nearby points are merged when the midpoint between them
    also passes the residual test; for genuinely distinct simple roots the
    midpoint residual is of order |f'| * gap and fails.  Returns the merged
    set and a map rep -> cluster radius for the multiplicity accounting.
    """
    m = roots.size
    if m < 2:
        return roots, {}
    order = np.argsort(roots.real)
    pts = roots[order]
    parent = list(range(m))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    pairs = []
    for i in range(m):
        for j in range(i + 1, m):
            if pts[j].real - pts[i].real > reach:
                break
            if abs(pts[j] - pts[i]) <= reach:
                pairs.append((i, j))
    if not pairs:
        return roots, {}
    mids = np.array([(pts[i] + pts[j]) / 2 for i, j in pairs])
    f, df = _pn_and_deriv(mids, n, d)
    with np.errstate(invalid="ignore"):
        flat = np.abs(f - mids) < _residual_tol(df, mids)
    for (i, j), ok in zip(pairs, flat):
        if ok:
            parent[find(i)] = find(j)
    groups = {}
    for i in range(m):
        groups.setdefault(find(i), []).append(i)
    out, radii = [], {}
    for members in groups.values():
        cluster = pts[members]
        rep = complex(cluster.mean())
        out.append(rep)
        if cluster.size > 1:
            radii[rep] = float(np.max(np.abs(cluster - rep)) * 4 + 10 * _DEDUP_TOL)
    return np.asarray(out, dtype=complex), radii


def _residual_tol(df, z):
    """Acceptance tolerance for |p^n(z) - z|, scaled by the conditioning.

    Evaluating p^n by iteration carries rounding noise of order
    eps * |(p^n)'(z)|, so a fixed cutoff rejects perfectly good roots in
    well-expanding regions.
    """
    with np.errstate(invalid="ignore", over="ignore"):
        cond = np.abs(df) + 4.0
        cond = np.where(np.isfinite(cond), cond, 4.0)
    return (1024 * np.finfo(float).eps) * cond * np.maximum(1.0, np.abs(z))


def _orbit_closure(roots, n, d):
    """Complete a period-n set through the orbit structure.

    p permutes the solutions of p^n(z) = z (injectively away from 0), so the
    square-root preimages of a known solution are candidate solutions; chase
    them until no new point turns up.  Recovers roots that Newton misses in
    tightly clustered regions.
    """
    pts = np.asarray(roots, dtype=complex)
    frontier = pts
    for _ in range(2 * n + 4):
        if frontier.size == 0:
            break
        s = np.sqrt(frontier - d)
        cand = np.concatenate([s, -s])
        # Newton-polish candidates against p^n(z) - z, then keep true roots;
        # stalled points (multiple roots) are left to the main pass
        laststep = np.full(cand.size, np.inf)
        with np.errstate(over="ignore", invalid="ignore"):
            for _ in range(30):
                f, df = _pn_and_deriv(cand, n, d)
                dg = df - 1.0
                dg = np.where(np.abs(dg) < 1e-300, 1e-300, dg)
                stepv = (f - cand) / dg
                good = np.isfinite(stepv)
                cand = np.where(good, cand - stepv, cand)
                laststep = np.where(good, np.abs(stepv), laststep)
        f, df = _pn_and_deriv(cand, n, d)
        with np.errstate(invalid="ignore"):
            ok = (np.abs(f - cand) < _residual_tol(df, cand)) \
                & (laststep < 1e-10 * np.maximum(1.0, np.abs(cand)))
        cand = cand[ok & np.isfinite(cand)]
        if cand.size == 0:
            break
        merged = _dedup_complex(np.concatenate([pts, cand]), _DEDUP_TOL)
        if merged.size == pts.size:
            break
        # the genuinely new points seed the next round
        new = [w for w in merged
               if np.min(np.abs(pts - w)) >= _DEDUP_TOL] if pts.size else list(merged)
        frontier = np.asarray(new, dtype=complex)
        pts = merged
    return pts


def periodic_points(base: BaseQuadratic, n: int, seed: int = 7):
    """All solutions of p^n(z) = z, deduplicated, with exact periods.

    Newton's method from inverse-iteration seeds (plus random interior seeds
    and the attracting cycle, when present).  Raises ResidualRootsError
    carrying the found subset if, after escalation, fewer than 2^n distinct
    points are found and the shortfall is not explained by multiple roots.
    """
    if not (1 <= n <= 16):
        raise ValueError("period must be between 1 and 16")
    d = base.d
    target = 2 ** n
    radius = base_escape_radius(base)
    rng = np.random.default_rng(seed)

    roots = np.empty(0, dtype=complex)
    fuzzy = {}   # stalled representatives -> cluster radius
    for attempt in range(4):
        m = 4 * target * (attempt + 1)
        seeds = _inverse_iteration(base, m, 30 + n, rng)
        seeds = seeds + 1e-6 * (rng.standard_normal(m) + 1j * rng.standard_normal(m))
        interior = (rng.uniform(0, radius, m) ** 0.5 * radius ** 0.5
                    * np.exp(2j * np.pi * rng.uniform(0, 1, m)))
        seeds = np.concatenate([seeds, interior])
        cyc = attracting_cycle(base)
        if cyc is not None and n % len(cyc) == 0:
            seeds = np.concatenate([seeds, np.array(cyc, dtype=complex)])
        z = seeds
        laststep = np.full(z.size, np.inf)
        with np.errstate(invalid="ignore", over="ignore"):
            for _ in range(80):
                f, df = _pn_and_deriv(z, n, d)
                g = f - z
                dg = df - 1.0
                dg = np.where(np.abs(dg) < 1e-300, 1e-300, dg)
                stepv = g / dg
                fin = np.isfinite(stepv)
                z = np.where(fin, z - stepv, z)
                laststep = np.where(fin, np.abs(stepv), laststep)
                bad = ~np.isfinite(z)
                if bad.any():
                    z[bad] = interior[: bad.sum()] if bad.sum() <= interior.size else 0
                    laststep[bad] = np.inf
        f, df = _pn_and_deriv(z, n, d)
        with np.errstate(invalid="ignore"):
            res_ok = (np.abs(f - z) < _residual_tol(df, z)) \
                & (np.abs(z) <= radius + 1e-6)
            scale = np.maximum(1.0, np.abs(z))
            converged = res_ok & (laststep < 1e-10 * scale)
            # stalled: tiny residual but steps not contracting, the signature
            # of a multiple root (parabolic parameters); keep one coarse
            # representative per cluster
            stalled = res_ok & ~converged & (laststep < 1e-3 * scale)
        roots = _dedup_complex(np.concatenate([roots, z[converged]]), _DEDUP_TOL)
        for w, s in zip(z[stalled], laststep[stalled]):
            r = 8.0 * s
            if roots.size and np.min(np.abs(roots - w)) < max(r, _DEDUP_TOL):
                continue
            roots = np.append(roots, w)
            fuzzy[complex(w)] = r
        roots = _orbit_closure(roots, n, d)
        roots, merged_radii = _merge_flat_clusters(roots, n, d)
        fuzzy.update(merged_radii)
        if roots.size >= target:
            break

    if roots.size < target:
        # distinct solutions closer than the dedup tolerance collapse to one
        # representative (and parabolic parameters produce genuinely multiple
        # roots); count with multiplicity by the argument principle before
        # declaring a genuine shortfall
        radii = np.array([max(2.5 * _DEDUP_TOL,
                              min((fuzzy.get(complex(r), 0.0) * 2, 1e-4)))
                          for r in roots])
        if _winding_count(roots, n, d, radii) < target:
            raise ResidualRootsError(
                f"found {roots.size} of {target} period-{n} points",
                found=_label_periodic(roots, n, d))
    return _label_periodic(roots, n, d)


def _winding_count(roots, n, d, radii, samples: int = 48):
    """Total zero count of p^n(z) - z inside small disks around the roots."""
    if roots.size == 0:
        return 0
    radii = np.broadcast_to(np.asarray(radii, dtype=float), roots.shape)
    ang = np.exp(2j * np.pi * np.arange(samples) / samples)
    pts = roots[:, None] + radii[:, None] * ang[None, :]
    f, _ = _pn_and_deriv(pts.ravel(), n, d)
    g = (f - pts.ravel()).reshape(roots.size, samples)
    phase = np.angle(g)
    dphase = np.diff(np.concatenate([phase, phase[:, :1]], axis=1), axis=1)
    dphase = np.mod(dphase + np.pi, 2 * np.pi) - np.pi
    winds = np.round(dphase.sum(axis=1) / (2 * np.pi)).astype(int)
    return int(np.maximum(winds, 1).sum())


def _label_periodic(roots, n, d):
    divisors = [m for m in range(1, n + 1) if n % m == 0]
    out = []
    for z0 in roots:
        exact = n
        for m in divisors:
            pm, _ = _pn_and_deriv(np.array([z0]), m, d)
            if abs(pm[0] - z0) < _PERIOD_TOL:
                exact = m
                break
        mult = 1.0 + 0j
        v = z0
        for _ in range(exact):
            mult *= 2.0 * v
            v = v * v + d
        out.append(PeriodicPoint(z=complex(z0), exact_period=exact,
                                 base_multiplier=complex(mult),
                                 repelling=abs(mult) > 1.0))
    out.sort(key=lambda pp: (pp.z.real, pp.z.imag))
    return out


def sample_mu_p(base: BaseQuadratic, count: int, seed: int) -> MeasureSamples:
    """Approximate equilibrium-measure samples by inverse iteration.

    Independent random-branch backward walks from the repelling fixed point,
    burn-in 50 steps; the walk's stationary distribution is mu_p.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    pts = _inverse_iteration(base, count, 50, rng)
    return MeasureSamples(pts, np.full(count, 1.0 / count), label="mu_p")


def sample_julia(base: BaseQuadratic, count: int = 512, seed: int = 0,
                 max_period: int = 8) -> MeasureSamples:
    """Julia-set sample: low-period repelling points plus inverse-iteration fill.

    Unlike `sample_mu_p` this deliberately includes every repelling periodic
    point up to `max_period`, so distinguished fibers (fixed points in
    particular) are always represented exactly.
    """
    pts = []
    k = 1
    while k <= max_period:
        try:
            new = [pp.z for pp in periodic_points(base, k, seed=seed + k)
                   if pp.repelling and pp.exact_period == k]
        except ResidualRootsError as err:
            new = [p.z for p in err.found if p.repelling and p.exact_period == k]
        if pts and len(pts) + len(new) > count:
            break
        pts.extend(new)
        if len(pts) >= count:
            break
        k += 1
    pts = list(_dedup_complex(np.asarray(pts, dtype=complex), 1e-10))
    if len(pts) < count:
        rng = np.random.default_rng(seed)
        fill = _inverse_iteration(base, count - len(pts), 50, rng)
        pts.extend(fill)
    pts = np.asarray(pts[:count], dtype=complex)
    return MeasureSamples(pts, np.full(pts.size, 1.0 / pts.size), label="julia")


def fatou_component_id(base: BaseQuadratic, z, budget: int = 2000,
                       green_tol: float = 1e-9):
    """Label of the Fatou component of p containing z.

    Returns the string "infinity" for escaping points and an integer label
    for bounded ones.  The integer identifies the cycle class of the basin
    component: points whose orbits land on the attracting cycle aligned with
    cycle point ((j - k) mod m) share a label.  Preperiodic components share
    the label of the class they feed.  Supported bases: hyperbolic (an
    attracting cycle exists) and the Chebyshev case d = -2, which has no
    bounded components at all.
    """
    if z is None or (isinstance(z, float) and math.isinf(z)):
        return "infinity"
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        return "infinity"
    if green_base(base, z, budget=budget) > green_tol:
        return "infinity"
    if abs(base.d + 2.0) < 1e-12:
        raise AmbiguousComponentError(
            "d = -2 has no bounded Fatou components; the point lies on J_p")
    cyc = attracting_cycle(base)
    if cyc is None:
        raise UnsupportedBaseError(
            "base is not hyperbolic (no attracting cycle found)")
    m = len(cyc)
    cyc_arr = np.asarray(cyc)
    eps = max(1e-4, 0.05 * min(abs(cyc_arr[i] - cyc_arr[j])
                               for i in range(m) for j in range(m) if i != j)) \
        if m > 1 else 1e-3
    v = z
    for k in range(budget):
        dist = np.abs(cyc_arr - v)
        j = int(np.argmin(dist))
        if dist[j] < eps:
            return (j - k) % m
        v = v * v + base.d
    raise AmbiguousComponentError(
        f"orbit of {z} did not reach the attracting cycle within {budget} steps")
