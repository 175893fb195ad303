"""Fourier mapping of pixel coordinates, Fourier features and mask synthesis.

Everything here works in float64. Coordinates are normalized as ``i / H`` so
that the ``s = 1`` grid coincides with the DFT sample grid.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .lattice import FrequencyLattice, build_lattice

MAX_GRID_POINTS = 2**26

GLOBAL = "global"
PER_PIXEL = "per-pixel"


_OPEN_LO = np.nextafter(0.0, 1.0)
_OPEN_HI = np.nextafter(1.0, 0.0)


def sigmoid(z):
    """Logistic function, kept inside the open interval (0, 1).

    In float64 the exact value rounds to 1.0 once z exceeds about 36.7; such
    results are clamped to the largest double below 1 (and likewise at 0).
    """
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return np.clip(out, _OPEN_LO, _OPEN_HI)


@dataclass(frozen=True)
class CoordinateGrid:
    """Row-major grid of normalized coordinates covering ``[0, 1)^2``."""

    h: int
    w: int
    s: int
    coords: np.ndarray = field(repr=False)

    @property
    def factor(self) -> int:
        return 2 ** (self.s - 1)

    @property
    def rows(self) -> int:
        return self.h * self.factor

    @property
    def cols(self) -> int:
        return self.w * self.factor

    @property
    def step(self) -> float:
        return 1.0 / self.factor

    @property
    def p(self) -> int:
        return self.rows * self.cols


@dataclass
class CoefficientField:
    """Cosine/sine amplitudes, one global vector or one vector per pixel.

    ``values`` has shape ``(2c,)`` in global mode and ``(h, w, 2c)`` in
    per-pixel mode; the first ``c`` entries are cosine amplitudes and the next
    ``c`` sine amplitudes, both in lattice order. For global fields ``h``/``w``
    record the native grid the field was produced on (may be None).
    """

    mode: str
    f: int
    values: np.ndarray
    h: Optional[int] = None
    w: Optional[int] = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.mode not in (GLOBAL, PER_PIXEL):
            raise ValueError(f"unknown coefficient mode {self.mode!r}")
        n = 2 * self.lattice.c
        if self.mode == GLOBAL:
            if self.values.shape != (n,):
                raise ValueError(f"global field needs shape ({n},), got {self.values.shape}")
        else:
            if self.values.ndim != 3 or self.values.shape[2] != n:
                raise ValueError(f"per-pixel field needs shape (h, w, {n}), got {self.values.shape}")
            h, w = self.values.shape[:2]
            if (self.h, self.w) not in ((None, None), (h, w)):
                raise ValueError("h/w disagree with per-pixel values shape")
            self.h, self.w = int(h), int(w)

    @property
    def lattice(self) -> FrequencyLattice:
        return build_lattice(self.f)

    @property
    def c(self) -> int:
        return self.lattice.c

    @property
    def cosine(self) -> np.ndarray:
        return self.values[..., : self.c]

    @property
    def sine(self) -> np.ndarray:
        return self.values[..., self.c :]

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "f": self.f,
            "h": self.h,
            "w": self.w,
            "values": self.values.reshape(-1).tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "CoefficientField":
        mode, f = data["mode"], int(data["f"])
        h, w = data.get("h"), data.get("w")
        values = np.asarray(data["values"], dtype=np.float64)
        if mode == PER_PIXEL:
            values = values.reshape(int(h), int(w), -1)
        return cls(mode=mode, f=f, values=values, h=h, w=w)


@dataclass
class MaskRaster:
    """``h x w`` soft mask with values in ``[0, 1]``."""

    values: np.ndarray
    threshold: float = 0.5

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.size == 0:
            raise ValueError(f"mask raster must be a non-empty 2D array, got shape {self.values.shape}")
        if not (0.0 < self.threshold < 1.0):
            raise ValueError("threshold must lie in (0, 1)")
        if np.isnan(self.values).any() or self.values.min() < 0.0 or self.values.max() > 1.0:
            raise ValueError("mask values must lie in [0, 1]")

    @property
    def h(self) -> int:
        return self.values.shape[0]

    @property
    def w(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def is_binary(self) -> bool:
        return bool(np.all((self.values == 0.0) | (self.values == 1.0)))

    def binarize(self) -> "MaskRaster":
        return MaskRaster((self.values >= self.threshold).astype(np.float64), self.threshold)


def make_grid(h: int, w: int, s: int = 1) -> CoordinateGrid:
    """Coordinates ``(i / H, j / W)`` with ``H = h * 2^(s-1)``, ``W = w * 2^(s-1)``."""
    if h < 1 or w < 1:
        raise ValueError(f"grid size must be positive, got {h}x{w}")
    if s < 1:
        raise ValueError(f"scaling factor s must be >= 1, got {s}")
    k = 2 ** (s - 1)
    rows, cols = h * k, w * k
    if rows * cols > MAX_GRID_POINTS:
        raise ValueError(f"grid {rows}x{cols} exceeds the {MAX_GRID_POINTS} point limit")
    ii, jj = np.meshgrid(np.arange(rows) / rows, np.arange(cols) / cols, indexing="ij")
    coords = np.stack([ii.ravel(), jj.ravel()], axis=1)
    coords.setflags(write=False)
    return CoordinateGrid(h=h, w=w, s=s, coords=coords)


def _coords_of(grid) -> np.ndarray:
    if isinstance(grid, CoordinateGrid):
        return grid.coords
    coords = np.asarray(grid, dtype=np.float64)
    if coords.ndim != 2 or coords.shape[1] != 2:
        raise ValueError(f"coordinates must have shape (n, 2), got {coords.shape}")
    return coords


def fourier_mapping(grid, lattice: FrequencyLattice) -> np.ndarray:
    """``[cos(2 pi x.B), sin(2 pi x.B)]`` for every coordinate row.

    ``grid`` may be a CoordinateGrid or an ``(n, 2)`` array of coordinates.
    """
    coords = _coords_of(grid)
    u = lattice.entries[:, 0].astype(np.float64)
    v = lattice.entries[:, 1].astype(np.float64)
    # reduce the phase to one period before scaling by 2 pi
    phase = np.mod(np.outer(coords[:, 0], u) + np.outer(coords[:, 1], v), 1.0)
    theta = 2.0 * np.pi * phase
    return np.concatenate([np.cos(theta), np.sin(theta)], axis=1)


def _flat_values(W: CoefficientField, p: int) -> np.ndarray:
    if W.mode == GLOBAL:
        return W.values[None, :]
    flat = W.values.reshape(-1, W.values.shape[-1])
    if flat.shape[0] != p:
        raise ValueError(f"per-pixel field has {flat.shape[0]} pixels but the mapping has {p} rows")
    return flat


def fourier_features(mapping: np.ndarray, W: CoefficientField) -> np.ndarray:
    """Elementwise product of the mapping with the (broadcast) coefficients."""
    mapping = np.asarray(mapping, dtype=np.float64)
    if mapping.ndim != 2 or mapping.shape[1] != 2 * W.c:
        raise ValueError(f"mapping width {mapping.shape[-1]} does not match 2c={2 * W.c}")
    return mapping * _flat_values(W, mapping.shape[0])


def pre_activation(features: np.ndarray) -> np.ndarray:
    """Row sums accumulated column by column in lattice order."""
    features = np.asarray(features, dtype=np.float64)
    if features.shape[1] == 0:
        return np.zeros(features.shape[0])
    # cumsum is a strict left-to-right reduction, unlike sum's pairwise one
    return np.cumsum(features, axis=1)[:, -1].copy()


def synthesize_mask(features: np.ndarray, h_out: int, w_out: int) -> MaskRaster:
    """Sigmoid of the per-row feature sum, reshaped row-major to ``h_out x w_out``."""
    features = np.asarray(features, dtype=np.float64)
    if features.shape[0] != h_out * w_out:
        raise ValueError(f"{features.shape[0]} feature rows cannot fill a {h_out}x{w_out} raster")
    return MaskRaster(sigmoid(pre_activation(features)).reshape(h_out, w_out))


CHUNK_ELEMENTS = 2**22


def row_chunks(n_rows: int, width: int):
    """Slices over ``n_rows`` keeping each ``rows x width`` block near CHUNK_ELEMENTS."""
    step = max(1, CHUNK_ELEMENTS // max(width, 1))
    for start in range(0, n_rows, step):
        yield slice(start, min(start + step, n_rows))


def evaluate(grid: CoordinateGrid, W: CoefficientField) -> MaskRaster:
    """Mask value at every grid point; per-pixel fields must match the grid.

    Rows are processed in bounded chunks; each row's sum is independent of
    the chunking.
    """
    coords = grid.coords
    flat = _flat_values(W, coords.shape[0])
    z = np.empty(coords.shape[0])
    for rows in row_chunks(coords.shape[0], 2 * W.c):
        mapping = fourier_mapping(coords[rows], W.lattice)
        z[rows] = pre_activation(mapping * (flat if W.mode == GLOBAL else flat[rows]))
    return MaskRaster(sigmoid(z).reshape(grid.rows, grid.cols))


def feature_gradient_to_coefficients(
    mapping: np.ndarray, feature_grad: np.ndarray, W: CoefficientField
) -> np.ndarray:
    """Pull a gradient w.r.t. Fourier features back onto the coefficients."""
    g = np.asarray(feature_grad, dtype=np.float64) * mapping
    if W.mode == GLOBAL:
        return g.sum(axis=0)
    return g.reshape(W.values.shape)


def synthesis_gradient(grid, lattice: FrequencyLattice, W: CoefficientField, upstream) -> np.ndarray:
    """Gradient of ``sum(upstream * y)`` w.r.t. the coefficient values.

    Per-pixel fields receive each pixel's contribution in their own slice;
    global fields sum over all pixels. Returned with ``W.values``' shape.
    """
    if lattice.f != W.f:
        raise ValueError("lattice and coefficient field disagree on f")
    mapping = fourier_mapping(grid, lattice)
    upstream = np.asarray(upstream, dtype=np.float64).reshape(-1)
    if upstream.shape[0] != mapping.shape[0]:
        raise ValueError(f"upstream has {upstream.shape[0]} values for {mapping.shape[0]} pixels")
    z = pre_activation(fourier_features(mapping, W))
    y = sigmoid(z)
    dz = upstream * y * (1.0 - y)
    return feature_gradient_to_coefficients(mapping, dz[:, None], W)
