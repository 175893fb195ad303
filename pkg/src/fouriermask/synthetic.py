"""Synthetic continuous shapes rasterized by point sampling at ``(i/H, j/W)``.

Shapes live in the unit square, so the same shape can be rasterized at any
resolution; this gives exact high-resolution ground truth for super-resolution
and refinement checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Disk:
    cy: float
    cx: float
    r: float

    def contains(self, y, x):
        return (y - self.cy) ** 2 + (x - self.cx) ** 2 <= self.r**2


@dataclass(frozen=True)
class Rectangle:
    y0: float
    x0: float
    y1: float
    x1: float

    def contains(self, y, x):
        return (y >= self.y0) & (y < self.y1) & (x >= self.x0) & (x < self.x1)


@dataclass(frozen=True)
class Blob:
    """Star-shaped region ``r(theta) = r0 * (1 + sum a_k cos(k theta + phi_k))``."""

    cy: float
    cx: float
    r0: float
    amps: tuple[float, ...]
    phases: tuple[float, ...]

    def contains(self, y, x):
        dy, dx = y - self.cy, x - self.cx
        theta = np.arctan2(dy, dx)
        radius = np.full_like(theta, self.r0)
        for k, (a, phi) in enumerate(zip(self.amps, self.phases), start=2):
            radius = radius + self.r0 * a * np.cos(k * theta + phi)
        return dy * dy + dx * dx <= radius * radius


def rasterize(shape, h: int, w: int) -> np.ndarray:
    yy, xx = np.meshgrid(np.arange(h) / h, np.arange(w) / w, indexing="ij")
    return shape.contains(yy, xx).astype(np.float64)


def centered_disk(size: int, radius_px: float) -> np.ndarray:
    """Binary disk of ``radius_px`` pixels centred on an ``size x size`` grid."""
    return rasterize(Disk(0.5, 0.5, radius_px / size), size, size)


def random_shape(rng: np.random.Generator, kind: str):
    if kind == "disk":
        r = rng.uniform(0.12, 0.32)
        cy, cx = rng.uniform(0.5 - (0.45 - r), 0.5 + (0.45 - r), size=2)
        return Disk(cy, cx, r)
    if kind == "rectangle":
        hh, ww = rng.uniform(0.2, 0.7, size=2)
        y0 = rng.uniform(0.05, 0.95 - hh)
        x0 = rng.uniform(0.05, 0.95 - ww)
        return Rectangle(y0, x0, y0 + hh, x0 + ww)
    if kind == "blob":
        r0 = rng.uniform(0.16, 0.26)
        n = int(rng.integers(2, 5))
        amps = tuple(rng.uniform(0.05, 0.3 / n * 2, size=n))
        phases = tuple(rng.uniform(0, 2 * np.pi, size=n))
        cy, cx = rng.uniform(0.42, 0.58, size=2)
        return Blob(cy, cx, r0, amps, phases)
    raise ValueError(f"unknown shape kind {kind!r}")


def make_suite(n: int = 50, seed: int = 0):
    """``n`` shapes cycling disk, rectangle, blob, from a seeded generator."""
    rng = np.random.default_rng(seed)
    kinds = ("disk", "rectangle", "blob")
    return [random_shape(rng, kinds[k % 3]) for k in range(n)]


def make_mask_suite(n: int = 50, size: int = 64, seed: int = 0) -> list[tuple[str, np.ndarray]]:
    return [(f"mask_{k:03d}", rasterize(shape, size, size)) for k, shape in enumerate(make_suite(n, seed))]
