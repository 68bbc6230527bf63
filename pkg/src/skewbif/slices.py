"""Complex-line slices of the (a, b, c) parameter space and gridded fields.

A slice is an affine line lambda(s) = origin + s * direction in C^3 together
with a square window in the s-plane and a pixel resolution.  Pixel (i, j)
maps to

    s = center + ((i + 1/2)/res_x - 1/2) * 2 * half_width
             + 1j * ((j + 1/2)/res_y - 1/2) * 2 * half_width

so i runs along the real axis and j along the imaginary axis.  Fields store
their values as arrays of shape (res_y, res_x), i.e. values[j, i].

Serialization: 16-bit binary PGM for scalar fields, 8-bit PGM for masks,
each with a JSON sidecar carrying the geometry and normalization.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


def _c2pair(z):
    z = complex(z)
    return [z.real, z.imag]


def _pair2c(p):
    return complex(p[0], p[1])


@dataclass(frozen=True)
class ComplexLineSlice:
    origin: tuple          # (a, b, c) at s = 0
    direction: tuple       # nonzero direction in C^3
    center: complex
    half_width: float
    resolution: tuple      # (res_x, res_y)

    def __post_init__(self):
        origin = tuple(complex(v) for v in self.origin)
        direction = tuple(complex(v) for v in self.direction)
        if len(origin) != 3 or len(direction) != 3:
            raise ValueError("origin and direction must have three components")
        if max(abs(v) for v in direction) == 0:
            raise ValueError("direction must be nonzero")
        rx, ry = (int(v) for v in self.resolution)
        if rx < 2 or ry < 2:
            raise ValueError("resolution must be at least 2x2")
        if not (float(self.half_width) > 0):
            raise ValueError("half_width must be positive")
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "direction", direction)
        object.__setattr__(self, "center", complex(self.center))
        object.__setattr__(self, "half_width", float(self.half_width))
        object.__setattr__(self, "resolution", (rx, ry))

    @property
    def res_x(self):
        return self.resolution[0]

    @property
    def res_y(self):
        return self.resolution[1]

    def pixel_pitch(self):
        return (2.0 * self.half_width / self.res_x,
                2.0 * self.half_width / self.res_y)

    def s_grid(self):
        """Array (res_y, res_x) of slice coordinates at pixel centers."""
        rx, ry = self.resolution
        re = self.center.real + ((np.arange(rx) + 0.5) / rx - 0.5) * 2 * self.half_width
        im = self.center.imag + ((np.arange(ry) + 0.5) / ry - 0.5) * 2 * self.half_width
        return re[None, :] + 1j * im[:, None]

    def param_grids(self):
        """Per-coefficient grids (a, b, c), each (res_y, res_x)."""
        s = self.s_grid()
        o, v = self.origin, self.direction
        return tuple(o[k] + s * v[k] for k in range(3))

    def params_at(self, s):
        s = complex(s)
        o, v = self.origin, self.direction
        return tuple(o[k] + s * v[k] for k in range(3))

    def pixel_of(self, s):
        """Pixel indices (i, j) containing the slice coordinate s."""
        rx, ry = self.resolution
        i = int(np.floor((s.real - self.center.real + self.half_width)
                         / (2 * self.half_width) * rx))
        j = int(np.floor((s.imag - self.center.imag + self.half_width)
                         / (2 * self.half_width) * ry))
        return i, j

    def subwindow(self, center, half_width, resolution):
        return ComplexLineSlice(self.origin, self.direction, center,
                                half_width, resolution)

    def to_json(self):
        return {
            "origin": [_c2pair(v) for v in self.origin],
            "direction": [_c2pair(v) for v in self.direction],
            "center": _c2pair(self.center),
            "half_width": self.half_width,
            "resolution": list(self.resolution),
        }

    @classmethod
    def from_json(cls, obj):
        return cls(origin=tuple(_pair2c(v) for v in obj["origin"]),
                   direction=tuple(_pair2c(v) for v in obj["direction"]),
                   center=_pair2c(obj["center"]),
                   half_width=obj["half_width"],
                   resolution=tuple(obj["resolution"]))


@dataclass
class ScalarField:
    slice: ComplexLineSlice
    values: np.ndarray
    quantity: str
    noise_floor: float = 0.0
    defects: list = field(default_factory=list)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        ry, rx = self.values.shape
        if (rx, ry) != self.slice.resolution:
            raise ValueError("value grid does not match slice resolution")
        if not np.isfinite(self.values).all():
            raise ValueError("field values must be finite")

    def sidecar(self, extra=None):
        meta = {
            "slice": self.slice.to_json(),
            "quantity": self.quantity,
            "min": float(self.values.min()),
            "max": float(self.values.max()),
            "noise_floor": float(self.noise_floor),
        }
        if extra:
            meta.update(extra)
        return meta

    def to_pgm16(self, path, sidecar_extra=None):
        data = quantize16(self.values, float(self.values.min()),
                          float(self.values.max()))
        write_pgm16(path, data)
        with open(str(path) + ".json", "w") as fh:
            json.dump(self.sidecar(sidecar_extra), fh, indent=2, sort_keys=True)


@dataclass
class ClassMask:
    slice: ComplexLineSlice
    labels: np.ndarray    # uint8 grid of label codes

    CODES = {"C": 67, "D": 68, "M": 77, "boundary-uncertain": 63,
             False: 0, True: 255}

    def __post_init__(self):
        self.labels = np.asarray(self.labels)
        ry, rx = self.labels.shape
        if (rx, ry) != self.slice.resolution:
            raise ValueError("label grid does not match slice resolution")

    def to_pgm8(self, path, sidecar_extra=None):
        write_pgm8(path, self.labels.astype(np.uint8))
        meta = {"slice": self.slice.to_json(), "codes": "bool/CDM"}
        if sidecar_extra:
            meta.update(sidecar_extra)
        with open(str(path) + ".json", "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)


def quantize16(values, vmin, vmax):
    """Map a float grid to uint16 over [vmin, vmax]; constant fields map to 0."""
    span = vmax - vmin
    if span <= 0:
        return np.zeros(values.shape, dtype=np.uint16)
    q = np.clip((values - vmin) / span, 0.0, 1.0)
    return np.round(q * 65535.0).astype(np.uint16)


def write_pgm16(path, data):
    """Binary PGM, 16 bit, big-endian samples per the format spec."""
    ry, rx = data.shape
    header = f"P5\n{rx} {ry}\n65535\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data.astype(">u2").tobytes())


def write_pgm8(path, data):
    ry, rx = data.shape
    header = f"P5\n{rx} {ry}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data.astype(np.uint8).tobytes())


def read_pgm(path):
    """Read a binary PGM written by this module; returns a numpy array."""
    with open(path, "rb") as fh:
        magic = fh.readline().strip()
        if magic != b"P5":
            raise ValueError("not a binary PGM file")
        dims = fh.readline().split()
        rx, ry = int(dims[0]), int(dims[1])
        maxval = int(fh.readline())
        dtype = ">u2" if maxval > 255 else np.uint8
        data = np.frombuffer(fh.read(), dtype=dtype).reshape(ry, rx)
    return data.astype(np.uint16 if maxval > 255 else np.uint8)
