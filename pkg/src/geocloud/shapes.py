"""Synthetic test shapes: solid unit cube, cone surface, unit sphere surface.

All generators draw from numpy's ``PCG64`` bit generator
(``np.random.default_rng(seed)``), so a given seed reproduces the same
cloud on any platform with the same numpy stream.
"""

from dataclasses import dataclass

import numpy as np

from .cloud import PointCloud
from .errors import EmptyRequest


def _rng(n, seed):
    if n < 1:
        raise EmptyRequest("shape generators need n >= 1")
    return np.random.default_rng(seed)


def generate_cube(n, seed=0):
    """Points uniform in the solid cube [-0.5, 0.5]^3."""
    rng = _rng(n, seed)
    return PointCloud(rng.uniform(-0.5, 0.5, size=(n, 3)), label="cube")


def generate_cone(n, seed=0):
    """Points on the lateral surface of a cone with base radius 1 at z=0 and apex (0, 0, 2).

    Angle and height are drawn uniformly, radius follows as ``1 - h/2``.
    """
    rng = _rng(n, seed)
    theta = rng.uniform(0.0, 2.0 * np.pi, size=n)
    h = rng.uniform(0.0, 2.0, size=n)
    r = 1.0 - h / 2.0
    return PointCloud(np.column_stack([r * np.cos(theta), r * np.sin(theta), h]), label="cone")


def generate_sphere(n, seed=0):
    """Points on the unit sphere from uniform azimuth and uniform polar angle.

    Uniform polar angle is not area-uniform: points bunch up at the poles.
    """
    rng = _rng(n, seed)
    theta = rng.uniform(0.0, 2.0 * np.pi, size=n)
    phi = rng.uniform(0.0, np.pi, size=n)
    sp = np.sin(phi)
    return PointCloud(np.column_stack([sp * np.cos(theta), sp * np.sin(theta), np.cos(phi)]),
                      label="sphere")


GENERATORS = {
    "cube": generate_cube,
    "cone": generate_cone,
    "sphere": generate_sphere,
}


@dataclass(frozen=True)
class ShapeSpec:
    kind: str
    n: int = 2048
    seed: int = 0

    def __post_init__(self):
        if self.kind not in GENERATORS:
            raise ValueError(f"unknown shape {self.kind!r}; expected one of {sorted(GENERATORS)}")
        if self.n < 1:
            raise EmptyRequest("shape spec needs n >= 1")

    def generate(self):
        return GENERATORS[self.kind](self.n, self.seed)


def generate(kind, n=2048, seed=0):
    return ShapeSpec(kind, n, seed).generate()
