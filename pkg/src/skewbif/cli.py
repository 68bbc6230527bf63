"""Command-line drivers.

Every image lands next to a JSON sidecar carrying the slice geometry, value
range, noise floor and full config provenance (hash, seed, budgets), so any
render can be reproduced bit for bit.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .basejulia import sample_julia, sample_mu_p
from .config import ConfigError, JobConfig
from .dynamics import BaseQuadratic, SkewParams
from .fields import (bz_mask, boundary_raster, classify_CDM, ddc, field_Lv,
                     support_mask, total_mass)
from .infinity import ks_angular, ks_arcsine, radial_bif_measure, radial_spread
from .lyapunov import (lyap_base, lyap_vertical_measure, lyap_vertical_periodic,
                       lyap_vertical_return)
from .pern import equidistribution_report, pern_potential
from .slices import ClassMask, write_pgm8
from .topology import (circle_loop, component_type, jonsson_check,
                       jonsson_variant_type, julia_topology_label, lift_curve)


def _add_common(sp):
    sp.add_argument("--config", help="JSON config file; flags override it")
    sp.add_argument("--preset", default=None)
    sp.add_argument("--d", type=complex, default=None)
    sp.add_argument("--resolution", type=int, nargs=2, default=None)
    sp.add_argument("--center", type=complex, default=None)
    sp.add_argument("--half-width", type=float, default=None)
    sp.add_argument("--budget", type=int, default=None)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--mu-count", type=int, default=None)
    sp.add_argument("--estimator", choices=["measure", "periodic", "return"],
                    default=None)
    sp.add_argument("--periodic-n", type=int, default=None)
    sp.add_argument("--out-dir", default=None)


def _config_from(args) -> JobConfig:
    if args.config:
        with open(args.config) as fh:
            cfg = JobConfig.from_json(json.load(fh))
    else:
        cfg = JobConfig()
    overrides = {
        "preset": args.preset, "d": args.d, "budget": args.budget,
        "seed": args.seed, "mu_count": args.mu_count,
        "estimator": args.estimator, "periodic_n": args.periodic_n,
        "out_dir": args.out_dir, "center": args.center,
        "half_width": args.half_width,
    }
    if args.resolution is not None:
        overrides["resolution"] = tuple(args.resolution)
    for k, v in overrides.items():
        if v is not None:
            setattr(cfg, k, v)
    for extra in ("z0", "eta", "n", "t"):
        v = getattr(args, extra, None)
        if v is not None:
            setattr(cfg, extra, v)
    cfg.validate()
    return cfg


def _ensure_out(cfg):
    os.makedirs(cfg.out_dir, exist_ok=True)
    return cfg.out_dir


def cmd_render_bif(args):
    cfg = _config_from(args)
    out = _ensure_out(cfg)
    base = BaseQuadratic(cfg.d)
    slc = cfg.slice()
    fld = field_Lv(slc, base, estimator=cfg.estimator_spec(), budget=cfg.budget)
    dens = ddc(fld)
    fld.to_pgm16(os.path.join(out, "lv.pgm"), sidecar_extra=cfg.provenance())
    dens.to_pgm16(os.path.join(out, "ddc_lv.pgm"), sidecar_extra=cfg.provenance())
    print(json.dumps({"lv": "lv.pgm", "ddc": "ddc_lv.pgm",
                      "ddc_mass": total_mass(dens),
                      "noise_floor": dens.noise_floor}, sort_keys=True))
    return 0


def cmd_render_bz(args):
    cfg = _config_from(args)
    out = _ensure_out(cfg)
    base = BaseQuadratic(cfg.d)
    mask = bz_mask(cfg.slice(), base, cfg.z0, budget=cfg.budget)
    mask.to_pgm8(os.path.join(out, "bz.pgm"), sidecar_extra=cfg.provenance())
    edge = boundary_raster(mask)
    ClassMask(cfg.slice(), np.where(edge, 255, 0).astype(np.uint8)).to_pgm8(
        os.path.join(out, "bifz.pgm"), sidecar_extra=cfg.provenance())
    print(json.dumps({"bz": "bz.pgm", "bifz": "bifz.pgm",
                      "bounded_px": int((mask.labels > 0).sum())}, sort_keys=True))
    return 0


def cmd_classify(args):
    cfg = _config_from(args)
    base = BaseQuadratic(cfg.d)
    params = SkewParams(args.a, args.b, args.c, base)
    jul = sample_julia(base, cfg.mu_count, seed=cfg.seed)
    res = classify_CDM(params, jul, budget=cfg.budget)
    print(json.dumps({"label": res.label, "bounded": res.bounded,
                      "escaped": res.escaped}, sort_keys=True))
    return 0


def cmd_lyap(args):
    cfg = _config_from(args)
    base = BaseQuadratic(cfg.d)
    params = SkewParams(args.a, args.b, args.c, base)
    lp = lyap_base(base, budget=cfg.budget)
    if cfg.estimator == "periodic":
        lv = lyap_vertical_periodic(params, cfg.periodic_n, budget=cfg.budget)
    elif cfg.estimator == "return":
        lv = lyap_vertical_return(params, min(cfg.periodic_n, 8), budget=cfg.budget)
    else:
        mu = sample_mu_p(base, cfg.mu_count, seed=cfg.seed)
        lv = lyap_vertical_measure(params, mu, budget=cfg.budget)
    print(json.dumps({
        "L_p": {"value": lp.value, "estimator": lp.estimator,
                "N_or_count": lp.sample_size, "stderr": lp.stderr},
        "L_v": {"value": lv.value, "estimator": lv.estimator,
                "N_or_count": lv.sample_size, "stderr": lv.stderr},
    }, sort_keys=True))
    return 0


def cmd_pern(args):
    cfg = _config_from(args)
    out = _ensure_out(cfg)
    base = BaseQuadratic(cfg.d)
    slc = cfg.slice()
    fld = pern_potential(slc, base, cfg.n, cfg.eta)
    fld.to_pgm16(os.path.join(out, f"pern_{cfg.n}.pgm"),
                 sidecar_extra=cfg.provenance())
    rep = None
    if args.report:
        r = equidistribution_report(slc, base, list(range(1, cfg.n + 1)),
                                    eta=cfg.eta, estimator=cfg.estimator_spec(),
                                    budget=cfg.budget)
        rep = {"n_list": r.n_list, "potential_l1": r.potential_l1,
               "density_l1": r.density_l1,
               "monotone_potential": r.monotone_potential,
               "monotone_density": r.monotone_density}
    print(json.dumps({"pern": f"pern_{cfg.n}.pgm", "defects": len(fld.defects),
                      "report": rep}, sort_keys=True))
    return 0


def cmd_infinity(args):
    cfg = _config_from(args)
    out = _ensure_out(cfg)
    base = BaseQuadratic(cfg.d)
    rows = []
    for R in args.R_list:
        m = radial_bif_measure(base, R, res=min(cfg.resolution[0], 256),
                               estimator=cfg.estimator_spec(), budget=cfg.budget)
        m.to_csv(os.path.join(out, f"radial_{int(R)}.csv"))
        row = {"R": R, "mass": m.total_mass, "atoms": int(m.atoms.size),
               "ks_angular": ks_angular(m), "spread": radial_spread(m, base)}
        if abs(base.d + 2) < 1e-12:
            row["ks_arcsine"] = ks_arcsine(m)
        rows.append(row)
    print(json.dumps(rows, sort_keys=True))
    return 0


def cmd_topology(args):
    cfg = _config_from(args)
    base = BaseQuadratic(cfg.d)
    params = SkewParams(args.a, args.b, args.c, base)
    jul = sample_julia(base, cfg.mu_count, seed=cfg.seed)
    result = {}
    if args.probe in ("lift", "all"):
        loop = circle_loop(params, jul)
        r = lift_curve(params, loop)
        result["lift"] = {
            "num_components": r.num_components,
            "winding_over_boundary": r.winding_over_boundary,
            "linking": r.linking, "monodromy_sign": r.monodromy_sign,
            "turns_of_w": r.turns_of_w}
    if args.probe in ("type", "all"):
        result["component_type"] = list(component_type(params))
    if args.probe in ("label", "all"):
        lab = julia_topology_label(params, julia_samples=jul, budget=cfg.budget)
        result["julia_topology"] = lab if isinstance(lab, str) else list(lab)
    print(json.dumps(result, sort_keys=True))
    return 0


def cmd_jonsson(args):
    rep = jonsson_check(args.t)
    variants = {}
    for v in ("one", "two"):
        bounded, extras = jonsson_variant_type(args.t, v)
        variants[v] = {"bounded_fibers": bounded, "stray_bounded": len(extras)}
    print(json.dumps({
        "t": rep.t,
        "fixed_points_exact": rep.fixed_points_exact,
        "all_marked_escape": rep.all_marked_escape,
        "all_reach_At": rep.all_reach_At,
        "classification": rep.classification,
        "all_pass": rep.all_pass,
        "variants": variants}, sort_keys=True))
    return 0


def cmd_serve(args):
    cfg = _config_from(args)
    from .server import build_app
    import uvicorn
    app = build_app(cfg)
    uvicorn.run(app, host="127.0.0.1", port=args.port, log_level="warning")
    return 0


def main(argv=None):
    ap = argparse.ArgumentParser(prog="skewbif",
                                 description="quadratic skew-product parameter-space toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("render-bif", help="L_v field and its dd^c density")
    _add_common(sp)
    sp.set_defaults(fn=cmd_render_bif)

    sp = sub.add_parser("render-bz", help="boundedness mask of one fiber")
    _add_common(sp)
    sp.add_argument("--z", dest="z0", type=complex, default=None)
    sp.set_defaults(fn=cmd_render_bz)

    sp = sub.add_parser("classify", help="C/D/M verdict at a parameter")
    _add_common(sp)
    for q in "abc":
        sp.add_argument(f"--{q}", type=complex, default=0j)
    sp.set_defaults(fn=cmd_classify)

    sp = sub.add_parser("lyap", help="Lyapunov exponents at a parameter")
    _add_common(sp)
    for q in "abc":
        sp.add_argument(f"--{q}", type=complex, default=0j)
    sp.set_defaults(fn=cmd_lyap)

    sp = sub.add_parser("pern", help="Per_n multiplier potential on a slice")
    _add_common(sp)
    sp.add_argument("--n", type=int, default=None)
    sp.add_argument("--eta", type=complex, default=None)
    sp.add_argument("--report", action="store_true")
    sp.set_defaults(fn=cmd_pern)

    sp = sub.add_parser("infinity", help="radial bifurcation measures")
    _add_common(sp)
    sp.add_argument("--R-list", type=float, nargs="+", default=[100.0, 1000.0])
    sp.set_defaults(fn=cmd_infinity)

    sp = sub.add_parser("topology", help="curve lifting / component typing")
    _add_common(sp)
    for q in "abc":
        sp.add_argument(f"--{q}", type=complex, default=0j)
    sp.add_argument("--probe", choices=["lift", "type", "label", "all"],
                    default="all")
    sp.set_defaults(fn=cmd_topology)

    sp = sub.add_parser("jonsson", help="mixed-component example checks")
    sp.add_argument("--t", type=float, default=100.0)
    sp.set_defaults(fn=cmd_jonsson)

    sp = sub.add_parser("serve", help="HTTP tile/diagnostics endpoint")
    _add_common(sp)
    sp.add_argument("--port", type=int, default=8321)
    sp.set_defaults(fn=cmd_serve)

    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
