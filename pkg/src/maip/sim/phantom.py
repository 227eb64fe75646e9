"""Piecewise-constant multi-frequency phantoms and their JSON form."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

SHAPES = ("circle", "rectangle", "triangle")


@dataclass
class Inclusion:
    """One object in the phantom.

    Geometry (metres): circle ``center, radius``; rectangle ``center, size``
    (width, height) and optional ``angle`` in radians; triangle
    ``vertices`` (three points). ``conductivity`` has one S/m value per
    frequency of the phantom schedule.
    """

    shape: str
    conductivity: list
    center: tuple = (0.0, 0.0)
    radius: float = 0.0
    size: tuple = (0.0, 0.0)
    angle: float = 0.0
    vertices: tuple = ()

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"unknown shape {self.shape!r}; expected one of {SHAPES}")
        self.conductivity = [float(c) for c in self.conductivity]
        if any(not np.isfinite(c) or c <= 0 for c in self.conductivity):
            raise ValueError("inclusion conductivities must be positive")
        if self.shape == "circle" and self.radius <= 0:
            raise ValueError("circle needs a positive radius")
        if self.shape == "rectangle" and min(self.size) <= 0:
            raise ValueError("rectangle needs a positive size")
        if self.shape == "triangle":
            v = np.asarray(self.vertices, dtype=float)
            if v.shape != (3, 2):
                raise ValueError("triangle needs three (x, y) vertices")
            d1, d2 = v[1] - v[0], v[2] - v[0]
            if abs(d1[0] * d2[1] - d1[1] * d2[0]) <= 0:
                raise ValueError("triangle vertices are collinear")

    def contains(self, pts):
        x, y = pts[..., 0], pts[..., 1]
        if self.shape == "circle":
            cx, cy = self.center
            return (x - cx) ** 2 + (y - cy) ** 2 <= self.radius ** 2
        if self.shape == "rectangle":
            cx, cy = self.center
            c, s = np.cos(self.angle), np.sin(self.angle)
            u = c * (x - cx) + s * (y - cy)
            v = -s * (x - cx) + c * (y - cy)
            return (np.abs(u) <= self.size[0] / 2) & (np.abs(v) <= self.size[1] / 2)
        a, b, c = np.asarray(self.vertices, dtype=float)

        def side(p, q):
            return (q[0] - p[0]) * (y - p[1]) - (q[1] - p[1]) * (x - p[0])

        s1, s2, s3 = side(a, b), side(b, c), side(c, a)
        return ((s1 >= 0) & (s2 >= 0) & (s3 >= 0)) | ((s1 <= 0) & (s2 <= 0) & (s3 <= 0))

    def to_dict(self):
        d = {"shape": self.shape, "conductivity": self.conductivity}
        if self.shape == "circle":
            d.update(center=list(self.center), radius=self.radius)
        elif self.shape == "rectangle":
            d.update(center=list(self.center), size=list(self.size), angle=self.angle)
        else:
            d.update(vertices=[list(v) for v in self.vertices])
        return d


@dataclass
class PhantomSpec:
    frequencies: list
    inclusions: list = field(default_factory=list)
    background: float = 2.0

    def __post_init__(self):
        self.frequencies = [float(f) for f in self.frequencies]
        if not self.frequencies:
            raise ValueError("phantom needs at least one frequency")
        if len(set(self.frequencies)) != len(self.frequencies):
            raise ValueError("frequencies must be distinct")
        if not self.background > 0:
            raise ValueError("background conductivity must be positive")
        self.inclusions = [i if isinstance(i, Inclusion) else Inclusion(**i)
                           for i in self.inclusions]
        for k, inc in enumerate(self.inclusions):
            if len(inc.conductivity) != len(self.frequencies):
                raise ValueError(f"inclusion {k} has {len(inc.conductivity)} conductivities "
                                 f"for {len(self.frequencies)} frequencies")

    def conductivity_at(self, pts, freq_index):
        """Conductivity (S/m) at points ``(..., 2)``; later inclusions win overlaps."""
        pts = np.asarray(pts, dtype=float)
        out = np.full(pts.shape[:-1], self.background)
        for inc in self.inclusions:
            out[inc.contains(pts)] = inc.conductivity[freq_index]
        return out

    def frequency_index(self, f):
        try:
            return self.frequencies.index(float(f))
        except ValueError:
            raise ValueError(f"frequency {f} is not in the phantom schedule") from None

    def to_dict(self):
        return {"frequencies": self.frequencies, "background": self.background,
                "inclusions": [i.to_dict() for i in self.inclusions]}

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        unknown = set(d) - {"frequencies", "inclusions", "background"}
        if unknown:
            raise ValueError(f"unknown phantom keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)


def two_inclusion_phantom(radius=0.1, background=2.0):
    """Two circles of different size whose contrast rises monotonically with frequency."""
    freqs = [1e3, 1e4, 5e4, 1e5]
    return PhantomSpec(
        frequencies=freqs,
        background=background,
        inclusions=[
            Inclusion("circle", [2.4, 2.6, 2.8, 3.0], center=(0.4 * radius, 0.3 * radius),
                      radius=0.28 * radius),
            Inclusion("circle", [2.2, 2.5, 2.7, 3.2], center=(-0.35 * radius, -0.35 * radius),
                      radius=0.2 * radius),
        ],
    )
