"""Behavior of the parameter space near the hyperplane at infinity.

Membership in the lines E_z = {[a,b,c] : a z^2 + b z + c = 0}, the bound
forcing bounded fibers toward those lines, the root-pair parametrization
pi(x, y) = [1, -x-y, xy] of the plane at infinity, radial slice measures
compared against the base equilibrium measure, and logarithmic potential /
energy diagnostics for sampled measures.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .basejulia import MeasureSamples
from .dynamics import BaseQuadratic, SkewParams, fiber_orbit, rho, sup_rho_on_julia
from .errors import EmptySamplesError
from .fields import ddc, field_Lv
from .slices import ComplexLineSlice

INF = complex("inf")


def _is_inf(x):
    return x is None or (isinstance(x, (float, int)) and math.isinf(x)) or \
        (isinstance(x, complex) and (math.isinf(x.real) or math.isinf(x.imag)))


@dataclass(frozen=True)
class ProjPoint:
    """Point [a : b : c] of the projective plane, sup-norm normalized.

    The representative is fixed by dividing through by the coordinate of
    largest modulus (first such index on ties), which therefore equals 1.
    """

    a: complex
    b: complex
    c: complex

    def __post_init__(self):
        coords = [complex(self.a), complex(self.b), complex(self.c)]
        mods = [abs(v) for v in coords]
        m = max(mods)
        if m == 0:
            raise ValueError("projective point needs a nonzero coordinate")
        pivot = coords[mods.index(m)]
        coords = [v / pivot for v in coords]
        object.__setattr__(self, "a", coords[0])
        object.__setattr__(self, "b", coords[1])
        object.__setattr__(self, "c", coords[2])

    @property
    def abc(self):
        return (self.a, self.b, self.c)

    def residual_at(self, z):
        """|a z^2 + b z + c| of the normalized representative."""
        return abs((self.a * z + self.b) * z + self.c)


def e_set_membership(pt: ProjPoint, julia_samples: MeasureSamples,
                     tol: float) -> bool:
    """True iff the quadratic a z^2 + b z + c nearly vanishes on some sample."""
    if julia_samples.label != "julia":
        raise ValueError("e_set_membership expects samples labeled julia")
    z = julia_samples.points
    vals = np.abs((pt.a * z + pt.b) * z + pt.c)
    return bool(vals.min() < tol)


@dataclass
class AdherenceVerdict:
    passed: bool
    lhs: float            # |rho(z0)|
    rhs: float            # 2 sqrt(1.05 * sup_rho) + 1e-6
    green: float
    applicable: bool      # green below the requested threshold


def adherence_bound_check(params: SkewParams, z0, eps_green: float,
                          julia_samples: MeasureSamples,
                          budget: int = 2000) -> AdherenceVerdict:
    """Bounded fiber  =>  |rho(z0)| <= 2 sqrt(sup_rho), with safety margin.

    The sup is a sample estimate, hence the 5% inflation on the right-hand
    side.  When the fiber is not numerically bounded the check is reported
    as inapplicable (and passing).
    """
    g = fiber_orbit(params, z0, 0.0, budget=budget).green
    sup = sup_rho_on_julia(params, julia_samples)
    lhs = abs(rho(params, z0))
    rhs = 2.0 * math.sqrt(1.05 * sup) + 1e-6
    if g >= eps_green:
        return AdherenceVerdict(True, lhs, rhs, g, applicable=False)
    return AdherenceVerdict(lhs <= rhs, lhs, rhs, g, applicable=True)


def pi_map(x, y) -> ProjPoint:
    """[1, -x-y, xy]; a = 0 charts encode roots at infinity."""
    xi, yi = _is_inf(x), _is_inf(y)
    if xi and yi:
        return ProjPoint(0.0, 0.0, 1.0)
    if xi or yi:
        finite = complex(y if xi else x)
        return ProjPoint(0.0, 1.0, -finite)
    x, y = complex(x), complex(y)
    return ProjPoint(1.0, -(x + y), x * y)


def pi_inverse(pt: ProjPoint):
    """Unordered root pair of a X^2 + b X + c; infinity for degenerate a.

    The square root takes its principal branch; together with pi_map this
    round-trips up to swapping the pair.
    """
    a, b, c = pt.abc
    if a == 0:
        if b == 0:
            return (INF, INF)
        return (-c / b, INF)
    disc = cmath.sqrt(b * b - 4 * a * c)
    return ((-b + disc) / (2 * a), (-b - disc) / (2 * a))


@dataclass
class RadialMeasure:
    """Pushforward of a radial slice of the bifurcation density to the
    z-chart of the line at infinity."""

    radius: float
    chart: str
    atoms: np.ndarray          # chart coordinates
    weights: np.ndarray        # nonnegative, post noise-floor subtraction
    total_mass: float          # pre-normalization mass

    def normalized_weights(self):
        return self.weights / self.weights.sum()

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("re,im,weight\n")
            for z, w in zip(self.atoms, self.weights):
                fh.write(f"{float(z.real)!r},{float(z.imag)!r},{float(w)!r}\n")


def radial_bif_measure(base: BaseQuadratic, R: float, res: int = 192,
                       estimator=("measure", 384, 0), budget: int = 500,
                       subpixel: bool = True, rotations: int = 1) -> RadialMeasure:
    """Slice the bifurcation density at scale R in the a = 0 chart.

    Renders dd^c L_v over the window |b| <= 4R of the family (0, b, R),
    keeps pixel masses above the noise floor, and pushes them forward
    through b -> -R/b, the root of b z + R.  As R grows this measure
    approaches the equilibrium measure of the base.

    With `subpixel`, each atom is placed at the local mass centroid (first
    moment over the 3x3 neighborhood) instead of its pixel center; the
    per-fiber mass blobs shrink like sqrt(R) relative to the window, so at
    large R they are narrower than a pixel and the centroid removes the
    resulting quantization of the pushforward.

    `rotations` > 1 pools atoms from renders whose slice direction is
    rotated by fractions of pi/4: pixelization of the blobs carries an
    8-fold grid-anisotropy wave that is fixed to the raster, while the
    measure itself is not, so averaging over rotated charts cancels it.
    """
    if R < 10:
        raise ValueError("R must be at least 10")
    all_atoms, all_w, mass = [], [], 0.0
    for k in range(max(1, rotations)):
        phase = cmath.exp(1j * math.pi / 4 * k / max(1, rotations))
        slc = ComplexLineSlice(origin=(0, 0, R), direction=(0, phase, 0),
                               center=0.0, half_width=4.0 * R,
                               resolution=(res, res))
        lv = field_Lv(slc, base, estimator=estimator, budget=budget)
        dens = ddc(lv)
        hx, hy = slc.pixel_pitch()
        vals = dens.values[1:-1, 1:-1] * hx * hy
        floor = dens.noise_floor * hx * hy
        w = vals - 3.0 * floor
        keep = w > 0
        if not keep.any():
            continue
        s_grid = slc.s_grid()[1:-1, 1:-1]
        if subpixel:
            pos = np.maximum(dens.values[1:-1, 1:-1], 0.0)
            num = np.zeros_like(s_grid)
            den = np.zeros_like(pos)
            ny, nx = pos.shape
            for dj in (-1, 0, 1):
                for di in (-1, 0, 1):
                    j0, j1 = max(0, dj), ny + min(0, dj)
                    i0, i1 = max(0, di), nx + min(0, di)
                    num[j0:j1, i0:i1] += (pos * s_grid)[j0 - dj:j1 - dj,
                                                        i0 - di:i1 - di]
                    den[j0:j1, i0:i1] += pos[j0 - dj:j1 - dj, i0 - di:i1 - di]
            centroid = np.where(den > 0, num / np.where(den > 0, den, 1.0),
                                s_grid)
            s_kept = centroid[keep]
        else:
            s_kept = s_grid[keep]
        b = s_kept * phase   # back to the unrotated b coordinate
        all_atoms.append(-R / b)
        all_w.append(w[keep])
        mass += float(vals.sum())
    if not all_atoms:
        raise ValueError("no bifurcation mass found on the radial slice")
    return RadialMeasure(radius=float(R), chart="a0_chart",
                         atoms=np.concatenate(all_atoms),
                         weights=np.concatenate(all_w),
                         total_mass=mass / max(1, rotations))


def ks_angular(measure: RadialMeasure) -> float:
    """Kolmogorov-Smirnov distance of the atom angles to the uniform law."""
    ang = np.mod(np.angle(measure.atoms), 2 * np.pi) / (2 * np.pi)
    return _ks_to_uniform(ang, measure.normalized_weights())


def ks_arcsine(measure: RadialMeasure) -> float:
    """KS distance of Re(atoms) on [-2, 2] to the arcsine law, via its CDF."""
    x = np.clip(measure.atoms.real, -2.0, 2.0)
    u = 0.5 + np.arcsin(x / 2.0) / np.pi
    return _ks_to_uniform(u, measure.normalized_weights())


def _ks_to_uniform(u, weights):
    order = np.argsort(u)
    u = u[order]
    cum = np.cumsum(weights[order])
    # sup over jump points of |ECDF - u|, checking both jump sides
    lo = np.abs(np.concatenate([[0.0], cum[:-1]]) - u)
    hi = np.abs(cum - u)
    return float(np.maximum(lo, hi).max())


def radial_spread(measure: RadialMeasure, base: BaseQuadratic) -> float:
    """Weighted RMS distance of the atoms from the unit circle (d = 0 chart)."""
    w = measure.normalized_weights()
    dev = np.abs(np.abs(measure.atoms) - 1.0)
    return float(np.sqrt(np.dot(w, dev ** 2)))


@dataclass
class ClusterRow:
    radius: float
    n_bounded: int
    max_distance: float       # to E_{z0}, normalized representatives
    coverage: float           # fraction of an E_{z0} net realized by bounded params


def cluster_set_report(base: BaseQuadratic, z0, radii, julia_samples,
                       n_directions: int = 64, n_offsets: int = 24,
                       budget: int = 600, seed: int = 0):
    """Probe the accumulation of B_{z0} at infinity against the line E_{z0}.

    For each radius R, parameters of sup-norm about R with a numerically
    bounded fiber over z0 are collected from perturbations of a net of
    E_{z0}; the report carries the worst normalized distance |rho(z0)| of
    those parameters to E_{z0} (forward inclusion) and the fraction of net
    directions realized by at least one bounded parameter (reverse
    inclusion).
    """
    rng = np.random.default_rng(seed)
    rows = []
    z0 = complex(z0)
    golden = math.pi * (3 - math.sqrt(5))
    for R in radii:
        found_dist = []
        covered = 0
        for i in range(n_directions):
            # net over E_{z0} (a projective line): [a : b] from a spiral on
            # the ratio sphere, c forced by the incidence relation
            theta = math.acos(1 - 2 * (i + 0.5) / n_directions)
            phi = i * golden
            a0 = complex(math.cos(theta / 2))
            b0 = cmath.exp(1j * phi) * math.sin(theta / 2)
            c0 = -(a0 * z0 * z0 + b0 * z0)
            vec = np.array([a0, b0, c0])
            vec = vec / np.max(np.abs(vec))
            hit = False
            # offsets span every scale from O(1) up to the adherence bound
            hi = 2.0 * math.sqrt(4.0 * R)
            for _ in range(n_offsets):
                mag = math.exp(rng.uniform(math.log(1e-2), math.log(hi)))
                delta = mag * cmath.exp(2j * math.pi * rng.uniform())
                lam = R * vec + np.array([0, 0, delta])
                par = SkewParams(lam[0], lam[1], lam[2], base)
                out = fiber_orbit(par, z0, 0.0, budget=budget)
                if not out.escaped:
                    hit = True
                    norm = np.max(np.abs(lam))
                    found_dist.append(abs(rho(par, z0)) / norm)
            covered += hit
        rows.append(ClusterRow(radius=float(R), n_bounded=len(found_dist),
                               max_distance=max(found_dist) if found_dist else float("nan"),
                               coverage=covered / n_directions))
    return rows


def norm_equivalence_constant(julia_samples: MeasureSamples,
                              n_directions: int = 10000, seed: int = 0):
    """Estimate C with C^-1 ||(a,b,c)|| <= sup_{J_p} |rho| <= C ||(a,b,c)||.

    sup-norm directions sampled on the unit sphere of C^3; returns the pair
    (C_low, C_high) = (min, max) of the sampled sup values, so the two-sided
    constant is max(C_high, 1 / C_low).
    """
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((n_directions, 3)) \
        + 1j * rng.standard_normal((n_directions, 3))
    dirs /= np.max(np.abs(dirs), axis=1, keepdims=True)
    z = julia_samples.points
    vals = np.abs(dirs[:, 0:1] * z[None, :] ** 2
                  + dirs[:, 1:2] * z[None, :] + dirs[:, 2:3]).max(axis=1)
    return float(vals.min()), float(vals.max())


def log_potential(measure: MeasureSamples, z) -> float:
    """p_m(z) = sum w_i log|z - x_i|; coincident atoms are skipped."""
    z = complex(z)
    d = np.abs(z - measure.points)
    mask = d > 0
    if not mask.all():
        total = measure.weights[mask].sum()
        return float(np.dot(measure.weights[mask] / total, np.log(d[mask])))
    return float(np.dot(measure.weights, np.log(d)))


def energy(measure: MeasureSamples, chunk: int = 2048) -> float:
    """I(m) = sum_{i != j} w_i w_j log|x_i - x_j|.

    The diagonal is omitted, which biases the estimate by O(log(n)/n) for
    n uniform atoms on a curve; fine at the sample sizes used here.
    """
    pts, w = measure.points, measure.weights
    n = pts.size
    if n < 2:
        raise EmptySamplesError("energy needs at least two atoms")
    acc = 0.0
    for i0 in range(0, n, chunk):
        blk = pts[i0:i0 + chunk]
        wb = w[i0:i0 + chunk]
        d = np.abs(blk[:, None] - pts[None, :])
        np.fill_diagonal(d[:, i0:i0 + blk.size], 1.0)
        good = d > 0
        ld = np.where(good, np.log(np.where(good, d, 1.0)), 0.0)
        acc += float(np.einsum("i,ij,j->", wb, ld, w))
    return acc
