"""Uncertainty-driven subdivision refinement of coarse masks.

Each step doubles the raster bilinearly, then overwrites the ``N`` pixels
closest to 0.5 with point-wise evaluations at their exact coordinates,
either of the implicit Fourier mask itself or of a renderer MLP.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .fourier import CoefficientField, MaskRaster, fourier_mapping, pre_activation, sigmoid
from .siren import SirenParams, siren_backward, siren_forward
from .upsample import bilinear_sample, bilinear_upsample, coefficients_at, features_at, super_resolve

EXACT = "exact-implicit"
MLP = "mlp"


@dataclass(frozen=True)
class RefinementConfig:
    steps: int = 3
    points: int = 784
    point_source: str = EXACT
    oversample: int = 3
    importance: float = 0.75
    learning_rate: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.steps < 0:
            raise ValueError("steps must be >= 0")
        if self.points < 1:
            raise ValueError("points must be >= 1")
        if self.point_source not in (EXACT, MLP):
            raise ValueError(f"unknown point source {self.point_source!r}")
        if self.oversample < 1:
            raise ValueError("oversample must be >= 1")
        if not 0.0 <= self.importance <= 1.0:
            raise ValueError("importance must lie in [0, 1]")


def uncertainty_scores(mask) -> np.ndarray:
    """``|value - 0.5|``; smaller means less certain."""
    values = np.asarray(getattr(mask, "values", mask), dtype=np.float64)
    return np.abs(values - 0.5)


def select_uncertain_points(mask, n: int) -> np.ndarray:
    """``(n, 2)`` row/column indices of the ``n`` least certain pixels.

    Sorted by score, ties broken by row-major index.
    """
    scores = uncertainty_scores(mask)
    if n > scores.size:
        raise ValueError(f"asked for {n} points from a raster of {scores.size} pixels")
    flat = np.argsort(scores.reshape(-1), kind="stable")[:n]
    return np.stack(np.unravel_index(flat, scores.shape), axis=1)


def pixel_coords(indices: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """Normalized coordinates ``(i / rows, j / cols)`` of pixel indices."""
    indices = np.asarray(indices)
    return np.stack([indices[:, 0] / rows, indices[:, 1] / cols], axis=1)


def implicit_values(W: CoefficientField, coords: np.ndarray) -> np.ndarray:
    """The Fourier mask evaluated directly at arbitrary coordinates."""
    mapping = fourier_mapping(coords, W.lattice)
    return sigmoid(pre_activation(mapping * coefficients_at(W, coords)))


def renderer_inputs(W: CoefficientField, coords: np.ndarray, aux: Optional[np.ndarray] = None) -> np.ndarray:
    """Fourier features at ``coords``, with auxiliary grid channels appended."""
    features = features_at(W, coords)
    if aux is None:
        return features
    aux = np.asarray(aux, dtype=np.float64)
    if aux.ndim == 2:
        aux = aux[:, :, None]
    sampled = bilinear_sample(aux, coords[:, 0] * aux.shape[0], coords[:, 1] * aux.shape[1])
    return np.concatenate([features, sampled.reshape(coords.shape[0], -1)], axis=1)


def subdivision_refine(
    W: CoefficientField,
    mlp: Optional[SirenParams],
    h: int,
    w: int,
    config: RefinementConfig = RefinementConfig(),
    aux: Optional[np.ndarray] = None,
    trace: Optional[list] = None,
) -> MaskRaster:
    """Refine the ``h x w`` mask to ``(h 2^steps) x (w 2^steps)``.

    ``N`` is capped at the pixel count of the current level. When ``trace``
    is a list, ``(step, i, j, score)`` tuples of the replaced points are
    appended to it.
    """
    if config.point_source == MLP and mlp is None:
        raise ValueError("mlp point source needs renderer parameters")
    raster = super_resolve(W, h, w, 1).values
    for step in range(1, config.steps + 1):
        raster = bilinear_upsample(raster, 2)
        rows, cols = raster.shape
        n = min(config.points, raster.size)
        idx = select_uncertain_points(raster, n)
        scores = uncertainty_scores(raster)[idx[:, 0], idx[:, 1]]
        coords = pixel_coords(idx, rows, cols)
        if config.point_source == EXACT:
            values = implicit_values(W, coords)
        else:
            values = siren_forward(mlp, renderer_inputs(W, coords, aux))
        raster[idx[:, 0], idx[:, 1]] = values
        if trace is not None:
            trace.extend((step, int(i), int(j), float(sc)) for (i, j), sc in zip(idx, scores))
    return MaskRaster(np.clip(raster, 0.0, 1.0))


def _bce(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean binary cross-entropy and its gradient w.r.t. ``pred``."""
    p = np.clip(pred, 1e-12, 1.0 - 1e-12)
    loss = -np.mean(target * np.log(p) + (1.0 - target) * np.log(1.0 - p))
    grad = (p - target) / (p * (1.0 - p)) / pred.shape[0]
    return float(loss), grad


def sample_training_points(
    W: CoefficientField, n: int, oversample: int, importance: float, rng: np.random.Generator
) -> np.ndarray:
    """Importance-sampled training coordinates.

    Draws ``oversample * n`` uniform points, keeps the ``round(importance * n)``
    least certain under the coarse mask and tops up with fresh uniform points.
    """
    candidates = rng.random((oversample * n, 2))
    n_hard = int(round(importance * n))
    scores = np.abs(implicit_values(W, candidates) - 0.5)
    hard = candidates[np.argsort(scores, kind="stable")[:n_hard]]
    return np.concatenate([hard, rng.random((n - n_hard, 2))], axis=0)


def train_renderer_points(
    target,
    W: CoefficientField,
    mlp: Optional[SirenParams],
    config: RefinementConfig,
    rng: np.random.Generator,
    aux: Optional[np.ndarray] = None,
    optimizer=None,
) -> tuple[SirenParams, float]:
    """One gradient step of the renderer MLP on importance-sampled points.

    Targets are the high-resolution mask sampled bilinearly at the same
    coordinates. Returns the updated parameters and the point loss before
    the step. ``optimizer`` (anything with ``step(params, grads)``) defaults
    to plain gradient descent at ``config.learning_rate``.
    """
    if mlp is None:
        raise ValueError("renderer training needs MLP parameters")
    target = np.asarray(getattr(target, "values", target), dtype=np.float64)
    coords = sample_training_points(W, config.points, config.oversample, config.importance, rng)
    labels = bilinear_sample(target, coords[:, 0] * target.shape[0], coords[:, 1] * target.shape[1])
    inputs = renderer_inputs(W, coords, aux)
    pred = siren_forward(mlp, inputs)
    loss, upstream = _bce(pred, labels)
    grads, _ = siren_backward(mlp, inputs, upstream)
    updated = mlp.copy()
    if optimizer is None:
        for p, g in zip(updated.arrays(), grads.arrays()):
            p -= config.learning_rate * g
    else:
        optimizer.step(updated.arrays(), grads.arrays())
    return updated, loss


def bilinear_only(W: CoefficientField, h: int, w: int, steps: int) -> MaskRaster:
    """Baseline: the ``s = 1`` mask upsampled ``steps`` times without re-evaluation."""
    raster = super_resolve(W, h, w, 1).values
    for _ in range(steps):
        raster = bilinear_upsample(raster, 2)
    return MaskRaster(raster)

