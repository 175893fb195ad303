"""Encode binary masks as global Fourier coefficients and analyse truncation.

The encoder projects the logit target ``alpha * (2m - 1)`` onto the lattice
basis sampled on the mask's own grid. With ``f < min(h, w) / 2`` every lattice
entry maps to a distinct, non-self-conjugate DFT bin, so the basis is
orthogonal and the projection reads straight off ``fft2``.
"""

from __future__ import annotations

import csv
import functools
import io
import json
from dataclasses import dataclass, field
from typing import Iterable, Union

import numpy as np

from .fourier import (
    GLOBAL,
    CoefficientField,
    MaskRaster,
    evaluate,
    fourier_mapping,
    make_grid,
    sigmoid,
)
from .lattice import build_lattice
from .metrics import iou_loss


@dataclass(frozen=True)
class EncoderConfig:
    f: int
    alpha: float = 8.0

    def __post_init__(self):
        if self.f < 0:
            raise ValueError(f"f must be non-negative, got {self.f}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")


def nyquist_limit(h: int, w: int) -> int:
    """Largest f allowed on an ``h x w`` grid (``f < min(h, w) / 2``)."""
    return (min(h, w) - 1) // 2


def check_nyquist(f: int, h: int, w: int) -> None:
    if f > 0 and 2 * f >= min(h, w):
        raise ValueError(f"f={f} is at or above Nyquist for a {h}x{w} grid (need f < {min(h, w) / 2})")


def _as_mask(mask) -> MaskRaster:
    return mask if isinstance(mask, MaskRaster) else MaskRaster(np.asarray(mask))


def encode_mask(mask, config: EncoderConfig) -> CoefficientField:
    """Least-squares projection of the logit target onto the lattice basis."""
    mask = _as_mask(mask)
    if not mask.is_binary():
        raise ValueError("encode_mask needs a binary mask (values 0 or 1)")
    h, w = mask.shape
    check_nyquist(config.f, h, w)
    lattice = build_lattice(config.f)
    target = config.alpha * (2.0 * mask.values - 1.0)
    spectrum = np.fft.fft2(target)
    u = lattice.entries[:, 0]
    v = lattice.entries[:, 1]
    bins = spectrum[u % h, v % w]
    scale = np.full(lattice.c, 2.0 / (h * w))
    scale[0] = 1.0 / (h * w)
    cos_amp = scale * bins.real
    sin_amp = -scale * bins.imag
    sin_amp[0] = 0.0
    return CoefficientField(GLOBAL, config.f, np.concatenate([cos_amp, sin_amp]), h=h, w=w)


def truncate(W: CoefficientField, f_target: int) -> CoefficientField:
    """Keep entries with band ``max(|u|, |v|) <= f_target``, re-indexed to that lattice."""
    if f_target < 0 or f_target > W.f:
        raise ValueError(f"cannot truncate an f={W.f} field to f={f_target}")
    keep = W.lattice.bands <= f_target
    values = np.concatenate([W.cosine[..., keep], W.sine[..., keep]], axis=-1)
    return CoefficientField(W.mode, f_target, values.copy(), h=W.h, w=W.w)


def reconstruct(W: CoefficientField, h: int, w: int, s: int = 1) -> MaskRaster:
    """Evaluate the field on the scale-``s`` grid of an ``h x w`` raster."""
    return evaluate(make_grid(h, w, s), W)


@dataclass
class SpectrumReport:
    """Mean reconstruction IoU loss per truncation frequency.

    ``per_mask`` holds the per-mask losses (rows: masks in dataset order,
    columns: f' ascending) for inspection; it is not serialized.
    """

    rows: list[tuple[int, float, int]]
    names: list[str] = field(default_factory=list)
    per_mask: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["f", "mean_loss", "n_masks"])
        for f, loss, n in self.rows:
            writer.writerow([f, repr(float(loss)), n])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(
            {"rows": [{"f": f, "mean_loss": float(loss), "n_masks": n} for f, loss, n in self.rows]}
        )


@functools.lru_cache(maxsize=4)
def _band_sorted_mapping(h: int, w: int, f: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Mapping columns reordered band-major (stable within a band) plus band ends."""
    lattice = build_lattice(f)
    bands = np.tile(lattice.bands, 2)
    order = np.argsort(bands, kind="stable")
    mapping = fourier_mapping(make_grid(h, w, 1), lattice)[:, order]
    ends = np.searchsorted(bands[order], np.arange(f + 1), side="right")
    mapping.setflags(write=False)
    return mapping, order, ends


def truncation_losses(mask, f_max: int, alpha: float = 8.0) -> np.ndarray:
    """IoU loss of the reconstruction at every ``f' = 0..f_max``.

    Encodes once at ``f_max`` and accumulates the pre-activation band by
    band, reading the running sum at the end of each band. This matches
    ``reconstruct(truncate(W, f'))`` up to float reassociation (~1e-14).
    """
    mask = _as_mask(mask)
    W = encode_mask(mask, EncoderConfig(f_max, alpha))
    h, w = mask.shape
    mapping, order, ends = _band_sorted_mapping(h, w, f_max)
    running = np.cumsum(mapping * W.values[order], axis=1)
    losses = np.empty(f_max + 1)
    for f_prime in range(f_max + 1):
        recon = MaskRaster(sigmoid(running[:, ends[f_prime] - 1]).reshape(h, w))
        losses[f_prime] = iou_loss(recon, mask)
    return losses


def spectrum_analysis(
    masks: Iterable[Union[tuple[str, MaskRaster], MaskRaster]],
    f_max: int,
    alpha: float = 8.0,
    workers: int = 1,
) -> SpectrumReport:
    """Dataset-mean reconstruction loss as frequency bands are added.

    ``masks`` yields ``(name, raster)`` pairs or bare rasters. Named masks are
    processed in ascending name order; the mean is accumulated sequentially
    in that order whatever ``workers`` is.
    """
    items = []
    for k, item in enumerate(masks):
        if isinstance(item, tuple):
            items.append((str(item[0]), _as_mask(item[1])))
        else:
            items.append((f"{k:08d}", _as_mask(item)))
    if not items:
        raise ValueError("spectrum analysis needs at least one mask")
    items.sort(key=lambda kv: kv[0].encode("utf-8"))
    for name, mask in items:
        try:
            check_nyquist(f_max, *mask.shape)
        except ValueError as exc:
            raise ValueError(f"{name}: {exc}") from None
    for shape in sorted({mask.shape for _, mask in items}):
        _band_sorted_mapping(*shape, f_max)

    def work(item):
        return truncation_losses(item[1], f_max, alpha)

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, items))
    else:
        results = [work(item) for item in items]

    per_mask = np.stack(results)
    rows = []
    for f_prime in range(f_max + 1):
        total = 0.0
        for losses in results:
            total += float(losses[f_prime])
        rows.append((f_prime, total / len(results), len(results)))
    return SpectrumReport(rows=rows, names=[n for n, _ in items], per_mask=per_mask)
