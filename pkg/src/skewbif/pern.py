"""Vertical periodic cycles and their multiplier potentials.

A vertical cycle of total period n lives over a base cycle of exact period
m | n and closes up after n/m turns of the return map.  The potential

    L_n^v(lambda, eta) = 4^{-n} * sum over cycles of exact total period n of
                         log|eta - vertical multiplier|

carries one logarithm per cycle: this is the minimal-multiplicity divisor of
the locus "some exact-period-n point has vertical multiplier eta", and it is
the normalization under which the potentials converge to L_v (per-point or
per-fiber multiplicity weights make the even/odd-n divisor components
alternate in mass and destroy the convergence; see the test suite for the
numerical evidence).  Fibers whose return family is constant along a slice
contribute a pixel-independent term; if eta hits one of their multipliers
exactly, that factor is identically zero and is dropped (with a note in the
defect list) since it carries no parameter information.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .basejulia import BaseQuadratic, periodic_points
from .dynamics import SkewParams, rho
from .fields import field_Lv
from .lyapunov import LOG2
from .slices import ComplexLineSlice, ScalarField

_MATCH_TOL = 1e-8
# log|eta - mult| is clamped here; exact multiplier hits at isolated pixels
# would otherwise produce -inf
_LOG_FLOOR_ABS = 1e-20


@dataclass(frozen=True)
class VerticalCycle:
    """One representative of a periodic cycle of the skew product.

    z_cycle: the base cycle (exact period m = len(z_cycle));
    w_points: the w-orbit under the return map Q^m (length n/m);
    total_period: n; vertical_multiplier: (Q^n_z)'(w) by the chain rule.
    """

    z_cycle: tuple
    w_points: tuple
    total_period: int
    vertical_multiplier: complex

    @property
    def base_period(self):
        return len(self.z_cycle)

    @property
    def return_length(self):
        return len(self.w_points)


def base_cycle_reps(base: BaseQuadratic, n: int):
    """One representative per base cycle of each exact period m dividing n.

    Returns a list of (z_orbit, m) with z_orbit the full base cycle.
    """
    reps = []
    for m in (m for m in range(1, n + 1) if n % m == 0):
        pts = [pp for pp in periodic_points(base, m) if pp.exact_period == m]
        used = np.zeros(len(pts), dtype=bool)
        zs = np.array([pp.z for pp in pts])
        for i, pp in enumerate(pts):
            if used[i]:
                continue
            orbit = [pp.z]
            used[i] = True
            v = pp.z
            for _ in range(m - 1):
                v = v * v + base.d
                j = int(np.argmin(np.abs(zs - v)))
                used[j] = True
                orbit.append(zs[j])
            reps.append((tuple(complex(z) for z in orbit), m))
    return reps


def _return_fixed_points(rhos_cycle, k):
    """All fixed points of (Q^m)^k for one fiber.

    rhos_cycle lists rho at the base cycle points z_0 .. z_{m-1}; the return
    map is traversed k times (m*k fiber steps in total).  Companion-matrix
    roots of the composed polynomial, then Newton polishing against the
    iterated map itself: the composed coefficients are badly conditioned
    from degree ~32 on, while evaluation by iteration is stable.
    """
    coeffs = np.array([1.0 + 0j, 0.0 + 0j])  # the polynomial w
    m = len(rhos_cycle)
    for j in range(m * k):
        coeffs = np.convolve(coeffs, coeffs)
        coeffs[-1] += rhos_cycle[j % m]
    # subtract w
    coeffs[-2] -= 1.0
    roots = np.roots(coeffs)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(12):
            v = roots.copy()
            dv = np.ones_like(v)
            for j in range(m * k):
                dv = 2.0 * v * dv
                v = v * v + rhos_cycle[j % m]
            f = v - roots
            df = dv - 1.0
            df = np.where(np.abs(df) < 1e-300, 1e-300, df)
            stepv = f / df
            ok = np.isfinite(stepv)
            roots = np.where(ok, roots - stepv, roots)
            if not ok.any() or np.max(np.abs(stepv[ok])) < 1e-13:
                break
    return roots


def _orbit_permutation(roots, rhos_cycle):
    """Index permutation sending each root to (the nearest root to) its image
    under one turn of the return map."""
    m = len(rhos_cycle)
    img = roots.copy()
    for j in range(m):
        img = img * img + rhos_cycle[j]
    perm = np.empty(roots.size, dtype=np.int64)
    for i, v in enumerate(img):
        perm[i] = int(np.argmin(np.abs(roots - v)))
    return perm


def _cycles_of_permutation(perm):
    seen = np.zeros(perm.size, dtype=bool)
    cycles = []
    for i in range(perm.size):
        if seen[i]:
            continue
        orbit = [i]
        seen[i] = True
        j = perm[i]
        while j != i and not seen[j]:
            seen[j] = True
            orbit.append(j)
            j = perm[j]
        cycles.append(orbit)
    return cycles


def _fiber_cycles(z_orbit, rhos_cycle, n):
    """Exact total-period-n cycles over one base cycle.

    Returns a list of (w_return_orbit, multiplier).  The multiplier is the
    product of 2*w over the full n-step skew orbit.
    """
    m = len(z_orbit)
    k = n // m
    roots = _return_fixed_points(rhos_cycle, k)
    perm = _orbit_permutation(roots, rhos_cycle)
    out = []
    for orbit_idx in _cycles_of_permutation(perm):
        if len(orbit_idx) != k:
            continue
        w0 = roots[orbit_idx[0]]
        # multiplier along the full skew orbit and the return-map w-orbit
        mult = 1.0 + 0j
        w = w0
        w_return = []
        for j in range(n):
            if j % m == 0:
                w_return.append(complex(w))
            mult *= 2.0 * w
            w = w * w + rhos_cycle[j % m]
        if abs(w - w0) > _MATCH_TOL * max(1.0, abs(w0)):
            continue  # spurious root; leave to the defect accounting upstream
        out.append((tuple(w_return), complex(mult)))
    return out


def vertical_cycles(params: SkewParams, n: int):
    """All cycles of exact total period n, one representative each.

    A failed per-fiber solve raises ResidualRootsError carrying the cycles
    found so far.
    """
    if not (1 <= n <= 6):
        raise ValueError("n must be between 1 and 6")
    from .errors import ResidualRootsError
    cycles = []
    for z_orbit, m in base_cycle_reps(params.base, n):
        rhos_cycle = [rho(params, z) for z in z_orbit]
        try:
            fiber = _fiber_cycles(z_orbit, rhos_cycle, n)
        except np.linalg.LinAlgError as err:
            raise ResidualRootsError(
                f"return-map solve failed over the cycle at {z_orbit[0]}: {err}",
                found=cycles) from err
        for w_return, mult in fiber:
            cycles.append(VerticalCycle(z_cycle=z_orbit, w_points=w_return,
                                        total_period=n,
                                        vertical_multiplier=mult))
    return cycles


def _slice_constant_fiber(slc: ComplexLineSlice, z_orbit) -> bool:
    """True when rho along the slice direction vanishes on the whole cycle."""
    da, db, dc = slc.direction
    return all(abs((da * z + db) * z + dc) < 1e-13 for z in z_orbit)


_MOBIUS = {1: 1, 2: -1, 3: -1, 4: 0, 5: -1, 6: 1}


def _aberth_period_points(rhos_by_step, D, iters: int = 60):
    """Roots of Q^{steps}(w) - w for a whole pixel batch at once.

    rhos_by_step lists the per-step forcing values, each an (npix,) array;
    the return map is evaluated by iteration (stable at any degree, no
    coefficient vectors) and all D roots per pixel are relaxed jointly by
    the Aberth-Ehrlich update.  Returns (roots, residual_ok) with shapes
    (npix, D) and (npix,).
    """
    npix = rhos_by_step[0].size
    sup = np.zeros(npix)
    for r in rhos_by_step:
        np.maximum(sup, np.abs(r), out=sup)
    R = 2.0 * np.sqrt(1.0 + sup)
    idx = np.arange(D)
    ang = np.exp(2j * np.pi * (idx + 0.37) / D)
    radii = 0.7 + 0.3 * ((idx * 0.6180339887) % 1.0)
    roots = R[:, None] * radii[None, :] * ang[None, :]

    eye = np.eye(D, dtype=bool)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for _ in range(iters):
            v = roots.copy()
            dv = np.ones_like(v)
            for r in rhos_by_step:
                dv = 2.0 * v * dv
                v = v * v + r[:, None]
            f = v - roots
            df = dv - 1.0
            df = np.where(np.abs(df) < 1e-300, 1e-300, df)
            newton = f / df
            diff = roots[:, :, None] - roots[:, None, :]
            diff[:, eye] = 1.0
            S = (1.0 / diff).sum(axis=2) - 1.0
            denom = 1.0 - newton * S
            denom = np.where(np.abs(denom) < 1e-300, 1e-300, denom)
            step = newton / denom
            ok = np.isfinite(step)
            roots = np.where(ok, roots - step, roots)
            if np.max(np.abs(np.where(ok, step, 0.0))) < 1e-13:
                break
        # plain Newton polish once the roots are separated
        for _ in range(4):
            v = roots.copy()
            dv = np.ones_like(v)
            for r in rhos_by_step:
                dv = 2.0 * v * dv
                v = v * v + r[:, None]
            df = np.where(np.abs(dv - 1.0) < 1e-300, 1e-300, dv - 1.0)
            step = (v - roots) / df
            ok = np.isfinite(step)
            roots = np.where(ok, roots - step, roots)
        v = roots.copy()
        for r in rhos_by_step:
            v = v * v + r[:, None]
        resid = np.abs(v - roots)
        scale = np.maximum(1.0, np.abs(roots))
        residual_ok = np.all(np.isfinite(roots), axis=1) \
            & np.all(resid < 1e-6 * scale, axis=1)
    return roots, residual_ok


def _pern_sum_grid(z_orbit, rho_grids_flat, n, eta):
    """Per-pixel sum over exact-total-period-n cycles of log|eta - mult|.

    Exact return periods are isolated by Moebius inclusion-exclusion over
    the divisor solves instead of per-pixel orbit grouping: for each
    divisor l of k = n/m, every fixed point of (Q^m)^l carries the
    multiplier of the full n-step orbit through it, and
    sum_{exact-k points} = sum_{l|k} mu(k/l) * sum_{fixed points of l}.
    Returns (total, bad) with bad flagging pixels whose solve left
    residuals (recorded as defects upstream).
    """
    m = len(z_orbit)
    k = n // m
    npix = rho_grids_flat[0].size
    total = np.zeros(npix)
    bad = np.zeros(npix, dtype=bool)
    for ell in (d for d in range(1, k + 1) if k % d == 0):
        mu = _MOBIUS[k // ell]
        if mu == 0:
            continue
        steps = [rho_grids_flat[j % m] for j in range(m * ell)]
        roots, res_ok = _aberth_period_points(steps, 2 ** (m * ell))
        bad |= ~res_ok
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            mult = np.ones_like(roots)
            v = roots.copy()
            for j in range(m * k):
                mult *= 2.0 * v
                v = v * v + rho_grids_flat[j % m][:, None]
            gap = np.abs(eta - mult)
            np.maximum(gap, _LOG_FLOOR_ABS, out=gap)
            contrib = np.log(gap).sum(axis=1)
        total += mu * np.where(np.isfinite(contrib), contrib, 0.0)
        bad |= ~np.isfinite(contrib)
    return total / k, bad


def pern_potential(slc: ComplexLineSlice, base: BaseQuadratic, n: int,
                   eta: complex = 0.0) -> ScalarField:
    """The potential L_n^v(lambda, eta) = 4^{-n} log|P_n^v| on a slice."""
    if not (1 <= n <= 6):
        raise ValueError("n must be between 1 and 6")
    eta = complex(eta)
    a, b, c = slc.param_grids()
    acc = np.zeros(a.shape)
    defects = []
    for z_orbit, m in base_cycle_reps(base, n):
        if _slice_constant_fiber(slc, z_orbit):
            o = slc.origin
            p0 = SkewParams(o[0], o[1], o[2], base)
            rhos_cycle = [rho(p0, z) for z in z_orbit]
            const = 0.0
            for _, mult in _fiber_cycles(z_orbit, rhos_cycle, n):
                gap = abs(eta - mult)
                if gap < 1e-12:
                    defects.append(("constant-factor-dropped", z_orbit[0], mult))
                    continue
                const += math.log(gap)
            acc += const
            continue
        rho_grids = [((a * z + b) * z + c).ravel() for z in z_orbit]
        ny, nx = a.shape
        npix = ny * nx
        total = np.zeros(npix)
        bad = np.zeros(npix, dtype=bool)
        chunk = max(1, (1 << 22) // 4 ** n)   # cap the pairwise work set
        for i0 in range(0, npix, chunk):
            sl = slice(i0, min(i0 + chunk, npix))
            t, b_ = _pern_sum_grid(z_orbit, [g[sl] for g in rho_grids], n, eta)
            total[sl] = t
            bad[sl] = b_
        for flat in np.nonzero(bad)[0]:
            defects.append(("roots-residual", (int(flat % nx), int(flat // nx)),
                            z_orbit[0]))
        acc += total.reshape(ny, nx)
    out = ScalarField(slc, acc / 4.0 ** n, quantity=f"LnV({n},{eta})")
    out.defects = defects
    return out


@dataclass
class EquidistributionReport:
    n_list: list
    eta: complex
    potential_l1: list       # ||L_n^v - L_v||_L1 per n
    density_l1: list         # ||ddc L_n^v - ddc L_v||_L1 per n
    monotone_potential: bool
    monotone_density: bool


def equidistribution_report(slc: ComplexLineSlice, base: BaseQuadratic,
                            n_list, eta=0.0, lv_field: ScalarField = None,
                            estimator=("measure", 256, 0),
                            budget: int = 800) -> EquidistributionReport:
    """L1 distances between the Per_n potentials/currents and the target L_v.

    Boundary pixels are excluded from the dd^c comparison (the discrete
    Laplacian zeroes them anyway) and from the potential comparison for
    consistency.
    """
    from .fields import ddc
    if max(n_list) > 6:
        raise ValueError("n must stay at most 6")
    if lv_field is None:
        lv_field = field_Lv(slc, base, estimator=estimator, budget=budget)
    lv_dd = ddc(lv_field)
    hx, hy = slc.pixel_pitch()
    area = hx * hy
    pot_d, den_d = [], []
    for n in n_list:
        ln = pern_potential(slc, base, n, eta)
        ln_dd = ddc(ln)
        diff_pot = np.abs(ln.values - lv_field.values)[1:-1, 1:-1]
        diff_den = np.abs(ln_dd.values - lv_dd.values)[1:-1, 1:-1]
        pot_d.append(float(diff_pot.sum() * area))
        den_d.append(float(diff_den.sum() * area))
    mono_p = all(pot_d[i + 1] < pot_d[i] for i in range(len(pot_d) - 1))
    mono_d = all(den_d[i + 1] < den_d[i] for i in range(len(den_d) - 1))
    return EquidistributionReport(n_list=list(n_list), eta=complex(eta),
                                  potential_l1=pot_d, density_l1=den_d,
                                  monotone_potential=mono_p,
                                  monotone_density=mono_d)
