"""Job configuration shared by the CLI and the HTTP service.

Configs are plain JSON; seeds are always explicit so identical configs give
bit-identical outputs.  The config hash stamped into every sidecar is the
sha256 of the canonical (sorted-keys) JSON encoding.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from .slices import ComplexLineSlice


class ConfigError(ValueError):
    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path


_PRESETS = {
    # lambda(s) = origin + s * direction over a square window
    "abc_full": dict(origin=(0, 0, 0), direction=(1, 0.7, 0.3 + 0.2j),
                     center=0j, half_width=3.0),
    "a0": dict(origin=(0, 0, 0), direction=(0, 1, 0.5),
               center=0j, half_width=3.0),
    "mandelbrot_bz": dict(origin=(0, 0, 0), direction=(0, 1, 0),
                          center=-0.5 + 0j, half_width=2.0),
    "product_c": dict(origin=(0, 0, 0), direction=(0, 0, 1),
                      center=-0.5 + 0j, half_width=2.0),
}


def preset_slice(name, resolution=(512, 512), center=None, half_width=None,
                 t=None):
    """Expand a family preset into a slice; jonsson(t) is a ray through g_t."""
    if name.startswith("jonsson"):
        tv = float(t if t is not None else 100.0)
        spec = dict(origin=(0, 0, 0), direction=(-tv, tv, 2 * tv),
                    center=1.0 + 0j, half_width=1.0)
    elif name in _PRESETS:
        spec = dict(_PRESETS[name])
    else:
        raise ConfigError("preset", f"unknown preset {name!r}")
    if center is not None:
        spec["center"] = center
    if half_width is not None:
        spec["half_width"] = half_width
    return ComplexLineSlice(resolution=resolution, **spec)


@dataclass
class JobConfig:
    preset: str = "mandelbrot_bz"
    d: complex = 0j
    resolution: tuple = (512, 512)
    center: complex | None = None
    half_width: float | None = None
    t: float | None = None           # jonsson scale
    budget: int = 2000
    seed: int = 0
    mu_count: int = 256
    estimator: str = "measure"       # measure | periodic
    periodic_n: int = 10
    z0: complex = 1.0 + 0j           # probe fiber for render-bz
    eta: complex = 0j
    n: int = 3                       # pern order
    out_dir: str = "out"

    def slice(self):
        return preset_slice(self.preset, self.resolution, self.center,
                            self.half_width, self.t)

    def estimator_spec(self):
        if self.estimator == "measure":
            return ("measure", self.mu_count, self.seed)
        if self.estimator == "periodic":
            return ("periodic", self.periodic_n)
        raise ConfigError("estimator", f"unknown estimator {self.estimator!r}")

    def to_json(self):
        def enc(v):
            if isinstance(v, complex):
                return [v.real, v.imag]
            if isinstance(v, tuple):
                return list(v)
            return v
        return {k: enc(v) for k, v in self.__dict__.items()}

    @classmethod
    def from_json(cls, obj):
        cfg = cls()
        complex_fields = {"d", "center", "z0", "eta"}
        for k, v in obj.items():
            if not hasattr(cfg, k):
                raise ConfigError(k, "unknown config field")
            if k in complex_fields and isinstance(v, list):
                v = complex(v[0], v[1])
            if k == "resolution":
                v = tuple(int(x) for x in v)
            setattr(cfg, k, v)
        cfg.validate()
        return cfg

    def validate(self):
        if self.budget < 1:
            raise ConfigError("budget", "must be >= 1")
        if self.mu_count < 1:
            raise ConfigError("mu_count", "must be >= 1")
        rx, ry = self.resolution
        if rx < 2 or ry < 2:
            raise ConfigError("resolution", "must be at least 2x2")
        if not (1 <= self.n <= 6):
            raise ConfigError("n", "pern order must be in [1, 6]")
        self.slice()   # raises ConfigError/ValueError on bad geometry
        return self

    def semantic_json(self):
        """Render-relevant fields only; output paths do not affect pixels."""
        obj = self.to_json()
        obj.pop("out_dir", None)
        return obj

    def hash(self):
        blob = json.dumps(self.semantic_json(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def provenance(self):
        return {"config_hash": self.hash(), "seed": self.seed,
                "budget": self.budget, "config": self.semantic_json()}
