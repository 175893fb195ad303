"""Sub-pixel super-resolution: finer coordinate grids plus bilinear coefficients.

Bilinear resampling here is anchored at sample positions: output index ``I``
at factor ``k`` reads input position ``I / k``, so every original sample lands
on an output sample unchanged. Positions past the last sample clamp to it.
This matches the ``i / H`` coordinate convention: output coordinate
``I / (k h)`` equals input coordinate ``(I / k) / h``.
"""

from __future__ import annotations

import warnings

import numpy as np

from .fourier import (
    GLOBAL,
    CoefficientField,
    MaskRaster,
    evaluate,
    fourier_mapping,
    make_grid,
)


def _axis_weights(n_in: int, positions: np.ndarray):
    pos = np.clip(positions, 0.0, n_in - 1)
    i0 = np.floor(pos).astype(np.int64)
    i0 = np.minimum(i0, n_in - 1)
    i1 = np.minimum(i0 + 1, n_in - 1)
    t = pos - i0
    return i0, i1, t


def bilinear_upsample(array: np.ndarray, factor: int) -> np.ndarray:
    """Upsample the two leading axes of ``array`` by an integer ``factor``."""
    array = np.asarray(array, dtype=np.float64)
    if factor == 1:
        return array.copy()
    h, w = array.shape[:2]
    i0, i1, ti = _axis_weights(h, np.arange(h * factor) / factor)
    j0, j1, tj = _axis_weights(w, np.arange(w * factor) / factor)
    extra = (1,) * (array.ndim - 2)
    ti = ti.reshape(-1, 1, *extra)
    tj = tj.reshape(1, -1, *extra)
    rows = array[i0] * (1.0 - ti) + array[i1] * ti
    return rows[:, j0] * (1.0 - tj) + rows[:, j1] * tj


def bilinear_sample(array: np.ndarray, pos_i, pos_j) -> np.ndarray:
    """Sample ``array`` at fractional index positions (clamped to the edges)."""
    array = np.asarray(array, dtype=np.float64)
    h, w = array.shape[:2]
    i0, i1, ti = _axis_weights(h, np.asarray(pos_i, dtype=np.float64))
    j0, j1, tj = _axis_weights(w, np.asarray(pos_j, dtype=np.float64))
    extra = (1,) * (array.ndim - 2)
    ti = ti.reshape(-1, *extra)
    tj = tj.reshape(-1, *extra)
    top = array[i0, j0] * (1.0 - tj) + array[i0, j1] * tj
    bottom = array[i1, j0] * (1.0 - tj) + array[i1, j1] * tj
    return top * (1.0 - ti) + bottom * ti


def upsample_coefficients(W: CoefficientField, s: int) -> CoefficientField:
    """Bilinearly upsample every coefficient channel by ``2^(s-1)``.

    Global fields have no spatial extent; they come back unchanged with a
    RuntimeWarning.
    """
    if s < 1:
        raise ValueError(f"scaling factor s must be >= 1, got {s}")
    if W.mode == GLOBAL:
        warnings.warn("global coefficient field: upsampling is a no-op", RuntimeWarning, stacklevel=2)
        return W
    values = bilinear_upsample(W.values, 2 ** (s - 1))
    return CoefficientField(W.mode, W.f, values)


def coefficients_at(W: CoefficientField, coords: np.ndarray) -> np.ndarray:
    """Coefficient rows at arbitrary normalized coordinates."""
    coords = np.asarray(coords, dtype=np.float64)
    if W.mode == GLOBAL:
        return np.broadcast_to(W.values, (coords.shape[0], W.values.shape[0]))
    return bilinear_sample(W.values, coords[:, 0] * W.h, coords[:, 1] * W.w)


def features_at(W: CoefficientField, coords: np.ndarray) -> np.ndarray:
    """Fourier features at arbitrary normalized coordinates."""
    return fourier_mapping(coords, W.lattice) * coefficients_at(W, coords)


def _scaled_field(W: CoefficientField, h: int, w: int, s: int) -> CoefficientField:
    if W.mode == GLOBAL:
        return W
    if (W.h, W.w) != (h, w):
        raise ValueError(f"per-pixel field is {W.h}x{W.w}, expected {h}x{w}")
    return upsample_coefficients(W, s)


def scaled_features(W: CoefficientField, h: int, w: int, s: int, rows: slice = slice(None)) -> np.ndarray:
    """Fourier features on (a row range of) the scale-``s`` grid.

    Per-pixel fields are upsampled first.
    """
    grid = make_grid(h, w, s)
    W = _scaled_field(W, h, w, s)
    mapping = fourier_mapping(grid.coords[rows], W.lattice)
    if W.mode == GLOBAL:
        return mapping * W.values
    return mapping * W.values.reshape(-1, W.values.shape[-1])[rows]


def super_resolve(W: CoefficientField, h: int, w: int, s: int) -> MaskRaster:
    """Mask at ``(h 2^(s-1)) x (w 2^(s-1))`` from an ``h x w`` representation."""
    return evaluate(make_grid(h, w, s), _scaled_field(W, h, w, s))
