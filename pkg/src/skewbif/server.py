"""Read-only HTTP tile and diagnostics service.

Slices are registered (from the job config or over POST) and addressed by
id.  Tiles are 256x256, 16-bit PGM, quantized against the slice's fixed
value range so neighboring tiles agree; the range is taken from the zoom-0
render, which therefore equals the CLI batch render byte for byte.  Tile
bytes are cached content-addressed on disk; the in-memory index is the only
shared mutable state and sits behind a lock.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import threading
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, HTTPException, Request, Response

from .basejulia import sample_julia, sample_mu_p
from .config import JobConfig
from .dynamics import BaseQuadratic, SkewParams, fiber_orbit, green_base
from .errors import SkewbifError
from .fields import bz_mask, classify_CDM, ddc, field_Lv
from .lyapunov import lyap_vertical_measure
from .pern import vertical_cycles
from .slices import ComplexLineSlice, quantize16
from .topology import circle_loop, lift_curve

TILE = 256
MAX_ZOOM = 12


@dataclass
class SliceDescriptor:
    slice_id: str
    slice: ComplexLineSlice
    quantity: str               # Lv | ddcLv | bz | pern | cdm
    d: complex
    budget: int
    estimator: tuple
    z0: complex = 1.0 + 0j      # probe fiber for bz
    pern_n: int = 1
    eta: complex = 0j
    vmin: float | None = None
    vmax: float | None = None
    noise_floor: float = 0.0

    def to_json(self):
        return {
            "slice_id": self.slice_id,
            "slice": self.slice.to_json(),
            "quantity": self.quantity,
            "d": [self.d.real, self.d.imag],
            "budget": self.budget,
            "estimator": list(self.estimator),
            "z0": [self.z0.real, self.z0.imag],
            "pern_n": self.pern_n,
            "eta": [self.eta.real, self.eta.imag],
            "min": self.vmin, "max": self.vmax,
            "noise_floor": self.noise_floor,
            "tile_size": TILE, "max_zoom": MAX_ZOOM,
        }


class TileCache:
    """Content-addressed tile store, safe for concurrent insert/lookup."""

    def __init__(self, root):
        self.root = root
        os.makedirs(root, exist_ok=True)
        self._lock = threading.Lock()
        self._index = {}
        self._index_path = os.path.join(root, "index.json")
        if os.path.exists(self._index_path):
            with open(self._index_path) as fh:
                self._index = json.load(fh)

    def get(self, key):
        with self._lock:
            h = self._index.get(key)
        if h is None:
            return None
        path = os.path.join(self.root, h + ".pgm")
        if not os.path.exists(path):
            return None
        with open(path, "rb") as fh:
            return fh.read()

    def put(self, key, data: bytes):
        h = hashlib.sha256(data).hexdigest()[:32]
        path = os.path.join(self.root, h + ".pgm")
        with self._lock:
            if not os.path.exists(path):
                tmp = path + ".tmp"
                with open(tmp, "wb") as fh:
                    fh.write(data)
                os.replace(tmp, path)
            self._index[key] = h
            with open(self._index_path, "w") as fh:
                json.dump(self._index, fh)
        return h


QUANTITIES = ("Lv", "ddcLv", "bz", "pern", "cdm")


def render_quantity(desc: SliceDescriptor, slc: ComplexLineSlice):
    """Float grid of the descriptor's quantity over an arbitrary window."""
    base = BaseQuadratic(desc.d)
    if desc.quantity == "Lv":
        return field_Lv(slc, base, estimator=desc.estimator,
                        budget=desc.budget).values
    if desc.quantity == "ddcLv":
        fld = field_Lv(slc, base, estimator=desc.estimator, budget=desc.budget)
        return ddc(fld).values
    if desc.quantity == "bz":
        mask = bz_mask(slc, base, desc.z0, budget=desc.budget)
        return mask.labels.astype(float)
    if desc.quantity == "pern":
        from .pern import pern_potential
        return pern_potential(slc, base, desc.pern_n, desc.eta).values
    if desc.quantity == "cdm":
        from .kernels import green_batch
        jul = sample_julia(base, 128, seed=0)
        a, b, c = slc.param_grids()
        counts = np.zeros(a.shape)
        for z0 in jul.points:
            _, esc, _ = green_batch(a, b, c, base.d, z0, 0.0,
                                    budget=desc.budget)
            counts += esc
        frac = counts / jul.points.size
        # 1 = all bounded (C), 0 = all escaped (D), in between = M shades
        return 1.0 - frac
    raise HTTPException(status_code=422, detail=f"unknown quantity {desc.quantity}")


def tile_window(slc: ComplexLineSlice, z: int, x: int, y: int):
    """Sub-window of the slice covered by tile (x, y) at zoom z.

    The slice square splits into 2^z x 2^z tiles; x runs along the real
    axis, y along the imaginary axis, both from the lower-left corner.
    """
    n = 1 << z
    hw = slc.half_width / n
    cx = slc.center.real - slc.half_width + (2 * x + 1) * hw
    cy = slc.center.imag - slc.half_width + (2 * y + 1) * hw
    return slc.subwindow(complex(cx, cy), hw, (TILE, TILE))


def _pgm16_bytes(data16: np.ndarray) -> bytes:
    ry, rx = data16.shape
    return f"P5\n{rx} {ry}\n65535\n".encode("ascii") + data16.astype(">u2").tobytes()


def build_app(cfg: JobConfig) -> FastAPI:
    app = FastAPI(title="skewbif", docs_url=None, redoc_url=None)
    state_lock = threading.Lock()
    slices: dict[str, SliceDescriptor] = {}
    cache = TileCache(os.path.join(cfg.out_dir, "tilecache"))

    def register(slc, quantity, d, budget, estimator, z0=1.0 + 0j,
                 pern_n=1, eta=0j):
        payload = json.dumps([slc.to_json(), quantity, [d.real, d.imag],
                              budget, list(estimator),
                              [complex(z0).real, complex(z0).imag],
                              int(pern_n),
                              [complex(eta).real, complex(eta).imag]],
                             sort_keys=True)
        sid = hashlib.sha256(payload.encode()).hexdigest()[:12]
        desc = SliceDescriptor(slice_id=sid, slice=slc, quantity=quantity,
                               d=complex(d), budget=budget,
                               estimator=tuple(estimator), z0=complex(z0),
                               pern_n=int(pern_n), eta=complex(eta))
        with state_lock:
            slices.setdefault(sid, desc)
        return slices[sid]

    # the job config's slice is pre-registered
    register(cfg.slice().subwindow(cfg.slice().center, cfg.slice().half_width,
                                   (TILE, TILE)),
             "Lv", cfg.d, cfg.budget, cfg.estimator_spec(), cfg.z0)

    def get_desc(sid) -> SliceDescriptor:
        with state_lock:
            desc = slices.get(sid)
        if desc is None:
            raise HTTPException(status_code=404, detail="unknown slice id")
        return desc

    def ensure_range(desc: SliceDescriptor):
        if desc.vmax is not None:
            return
        vals = render_quantity(desc, tile_window(desc.slice, 0, 0, 0))
        desc.vmin = float(vals.min())
        desc.vmax = float(vals.max())

    @app.get("/api/slices")
    def list_slices():
        with state_lock:
            return [d.to_json() for d in slices.values()]

    @app.post("/api/slices")
    async def add_slice(request: Request):
        try:
            body = await request.json()
            slc = ComplexLineSlice.from_json(body["slice"])
            quantity = body.get("quantity", "Lv")
            d = complex(*body.get("d", [cfg.d.real, cfg.d.imag]))
            budget = int(body.get("budget", cfg.budget))
            est = body.get("estimator")
            estimator = tuple(est) if est else cfg.estimator_spec()
            z0 = complex(*body.get("z0", [1.0, 0.0]))
            pern_n = int(body.get("pern_n", 1))
            eta = complex(*body.get("eta", [0.0, 0.0]))
        except (KeyError, TypeError, ValueError, json.JSONDecodeError) as err:
            raise HTTPException(status_code=400, detail=f"malformed slice: {err}")
        if quantity not in QUANTITIES:
            raise HTTPException(status_code=422, detail="unsupported quantity")
        if quantity == "pern" and not (1 <= pern_n <= 6):
            raise HTTPException(status_code=422, detail="pern order out of range")
        if quantity == "bz" and green_base(BaseQuadratic(d), z0) > 1e-9:
            raise HTTPException(status_code=422,
                                detail="z0 escapes under the base polynomial")
        desc = register(slc, quantity, d, budget, estimator, z0, pern_n, eta)
        return desc.to_json()

    @app.get("/api/meta")
    def meta(slice: str):
        desc = get_desc(slice)
        ensure_range(desc)
        return desc.to_json()

    @app.get("/tiles/{sid}/{z}/{x}/{y}")
    def tile(sid: str, z: int, x: int, y: int):
        if not (0 <= z <= MAX_ZOOM):
            raise HTTPException(status_code=400, detail="zoom out of range")
        if not (0 <= x < (1 << z) and 0 <= y < (1 << z)):
            raise HTTPException(status_code=400, detail="tile outside slice")
        desc = get_desc(sid)
        key = f"{sid}/{z}/{x}/{y}"
        data = cache.get(key)
        if data is None:
            ensure_range(desc)
            vals = render_quantity(desc, tile_window(desc.slice, z, x, y))
            data = _pgm16_bytes(quantize16(vals, desc.vmin, desc.vmax))
            cache.put(key, data)
        return Response(content=data, media_type="image/x-portable-graymap")

    @app.get("/api/point")
    def point(slice: str, s_re: str, s_im: str):
        desc = get_desc(slice)
        try:
            s = complex(float(s_re), float(s_im))
        except ValueError:
            raise HTTPException(status_code=400, detail="malformed coordinates")
        a, b, c = desc.slice.params_at(s)
        base = BaseQuadratic(desc.d)
        params = SkewParams(a, b, c, base)
        jul = sample_julia(base, 64, seed=cfg.seed)
        probes = {}
        for z0 in jul.points[:8]:
            out = fiber_orbit(params, z0, 0.0, budget=desc.budget)
            probes[f"{z0.real:.6f}{z0.imag:+.6f}j"] = out.green
        mu = sample_mu_p(base, min(cfg.mu_count, 256), seed=cfg.seed)
        lv = lyap_vertical_measure(params, mu, budget=desc.budget)
        cdm = classify_CDM(params, jul, budget=desc.budget)
        pern_hits = {}
        for n in (1, 2, 3):
            try:
                mults = [abs(vc.vertical_multiplier)
                         for vc in vertical_cycles(params, n)]
                pern_hits[str(n)] = min(mults) if mults else None
            except SkewbifError:
                pern_hits[str(n)] = None
        return {
            "s": [s.real, s.imag],
            "lambda": [[a.real, a.imag], [b.real, b.imag], [c.real, c.imag]],
            "green_fibers": probes,
            "L_v": lv.value,
            "cdm": cdm.label,
            "pern_min_multiplier": pern_hits,
        }

    @app.get("/api/lift")
    def lift(slice: str, s_re: str, s_im: str, steps: int = 1024):
        desc = get_desc(slice)
        try:
            s = complex(float(s_re), float(s_im))
        except ValueError:
            raise HTTPException(status_code=400, detail="malformed coordinates")
        if abs(desc.d) > 1e-12:
            raise HTTPException(status_code=422,
                                detail="lift probe needs the circle base d = 0")
        a, b, c = desc.slice.params_at(s)
        base = BaseQuadratic(desc.d)
        params = SkewParams(a, b, c, base)
        jul = sample_julia(base, 128, seed=cfg.seed)
        try:
            loop = circle_loop(params, jul, n_samples=max(64, min(steps, 8192)))
            res = lift_curve(params, loop, steps=max(64, min(steps, 8192)))
        except SkewbifError as err:
            raise HTTPException(status_code=422, detail=str(err))
        return {
            "num_components": res.num_components,
            "winding_over_boundary": res.winding_over_boundary,
            "linking": res.linking,
            "monodromy_sign": res.monodromy_sign,
            "turns_of_w": res.turns_of_w,
            "radicand_winding": res.radicand_winding,
            "min_radicand": res.min_radicand,
            "steps_used": res.steps_used,
        }

    return app
