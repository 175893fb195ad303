"""Per-instance gradient-descent fitting of Fourier coefficients to a mask.

The mask ``y`` comes from the coefficients alone; with ``use_mlp`` a sine
MLP reads the same Fourier features and produces ``y'``. Both are trained
jointly on the unweighted sum of their IoU losses.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .codec import check_nyquist
from .fourier import (
    GLOBAL,
    PER_PIXEL,
    CoefficientField,
    MaskRaster,
    feature_gradient_to_coefficients,
    fourier_features,
    fourier_mapping,
    make_grid,
    pre_activation,
    row_chunks,
    sigmoid,
)
from .lattice import build_lattice
from .metrics import iou_loss, iou_loss_gradient, soft_iou
from .optim import OPTIMIZERS, make_optimizer
from .siren import DEFAULT_HIDDEN, SirenParams, init_siren, siren_backward, siren_forward
from .upsample import scaled_features, super_resolve


class FitDivergedError(RuntimeError):
    pass


@dataclass(frozen=True)
class FitConfig:
    mode: str = GLOBAL
    f: int = 12
    use_mlp: bool = False
    steps: int = 3000
    learning_rate: float = 1e-2
    optimizer: str = "adaptive-moments"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    init_scale: float = 0.0
    hidden_dims: tuple[int, ...] = DEFAULT_HIDDEN

    def __post_init__(self):
        if self.mode not in (GLOBAL, PER_PIXEL):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.f < 0:
            raise ValueError("f must be non-negative")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


@dataclass
class FitResult:
    W: CoefficientField
    mlp: Optional[SirenParams]
    loss_history: list[tuple[int, float, Optional[float]]]
    final_iou: float
    config: Optional[FitConfig] = field(default=None, repr=False)

    @property
    def h(self) -> int:
        return self.W.h

    @property
    def w(self) -> int:
        return self.W.w

    def history_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["step", "loss_y", "loss_yprime"])
        for step, ly, lyp in self.loss_history:
            writer.writerow([step, repr(float(ly)), "" if lyp is None else repr(float(lyp))])
        return buf.getvalue()

    def save(self, directory) -> None:
        """Write ``coefficients.json``, ``history.csv`` and optionally ``mlp.json``."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        (directory / "coefficients.json").write_text(self.W.to_json())
        (directory / "history.csv").write_text(self.history_csv())
        mlp_path = directory / "mlp.json"
        if self.mlp is not None:
            mlp_path.write_text(self.mlp.to_json())
        elif mlp_path.exists():
            mlp_path.unlink()
        meta = {"final_iou": self.final_iou}
        if self.config is not None:
            meta["config"] = asdict(self.config)
        (directory / "result.json").write_text(json.dumps(meta, sort_keys=True))

    @classmethod
    def load(cls, directory) -> "FitResult":
        directory = Path(directory)
        W = CoefficientField.from_dict(json.loads((directory / "coefficients.json").read_text()))
        mlp_path = directory / "mlp.json"
        mlp = SirenParams.from_dict(json.loads(mlp_path.read_text())) if mlp_path.exists() else None
        history = []
        with open(directory / "history.csv", newline="") as fh:
            for row in csv.DictReader(fh):
                lyp = float(row["loss_yprime"]) if row["loss_yprime"] else None
                history.append((int(row["step"]), float(row["loss_y"]), lyp))
        final_iou = float("nan")
        meta_path = directory / "result.json"
        if meta_path.exists():
            final_iou = json.loads(meta_path.read_text())["final_iou"]
        return cls(W, mlp, history, final_iou)


def _reduce(grad_rows: np.ndarray, mode: str, shape) -> np.ndarray:
    if mode == GLOBAL:
        return grad_rows.sum(axis=0)
    return grad_rows.reshape(shape)


def objective(
    mapping: np.ndarray, W: CoefficientField, mlp: Optional[SirenParams], target: np.ndarray
) -> tuple[float, Optional[float], np.ndarray, Optional[SirenParams]]:
    """Losses for ``y`` and ``y'`` and the gradients of their sum.

    Returns ``(loss_y, loss_yprime, grad_W, grad_mlp)``; ``loss_yprime`` and
    ``grad_mlp`` are None without an MLP.
    """
    t = target.reshape(-1)
    features = fourier_features(mapping, W)
    y = sigmoid(pre_activation(features))
    loss_y = iou_loss(y, t)
    dz = iou_loss_gradient(y, t) * y * (1.0 - y)
    grad_w = _reduce(mapping * dz[:, None], W.mode, W.values.shape)
    if mlp is None:
        return loss_y, None, grad_w, None
    y_prime = siren_forward(mlp, features)
    loss_yp = iou_loss(y_prime, t)
    grad_mlp, grad_features = siren_backward(mlp, features, iou_loss_gradient(y_prime, t))
    grad_w = grad_w + feature_gradient_to_coefficients(mapping, grad_features, W)
    return loss_y, loss_yp, grad_w, grad_mlp


def fit_mask(target, config: FitConfig) -> FitResult:
    """Fit coefficients (and optionally the MLP) to a binary target mask."""
    target = target if isinstance(target, MaskRaster) else MaskRaster(np.asarray(target))
    if not target.is_binary():
        raise ValueError("fit target must be binary")
    h, w = target.shape
    if config.mode == GLOBAL:
        check_nyquist(config.f, h, w)
    lattice = build_lattice(config.f)
    rng = np.random.default_rng(config.seed)
    shape = (2 * lattice.c,) if config.mode == GLOBAL else (h, w, 2 * lattice.c)
    values = np.zeros(shape)
    if config.init_scale:
        values += config.init_scale * rng.standard_normal(shape)
    W = CoefficientField(config.mode, config.f, values, h=h, w=w)
    mlp = init_siren(lattice, config.hidden_dims, config.seed) if config.use_mlp else None

    mapping = fourier_mapping(make_grid(h, w, 1), lattice)
    optimizer = make_optimizer(config.optimizer, config.learning_rate, config.beta1, config.beta2, config.eps)
    params = [W.values] + (mlp.arrays() if mlp is not None else [])
    history = []
    for step in range(config.steps):
        loss_y, loss_yp, grad_w, grad_mlp = objective(mapping, W, mlp, target.values)
        total = loss_y + (loss_yp if mlp is not None else 0.0)
        if not math.isfinite(total):
            raise FitDivergedError(f"loss became non-finite at step {step}")
        history.append((step, loss_y, loss_yp))
        grads = [grad_w] + (grad_mlp.arrays() if grad_mlp is not None else [])
        if not all(np.isfinite(g).all() for g in grads):
            raise FitDivergedError(f"gradient became non-finite at step {step}")
        optimizer.step(params, grads)

    result = FitResult(W, mlp, history, float("nan"), config)
    result.final_iou = soft_iou(predict(result, 1), target)
    return result


def predict(result: FitResult, s: int = 1) -> MaskRaster:
    """``y`` on the scale-``s`` grid, averaged with ``y'`` when an MLP is present."""
    h, w = result.h, result.w
    y = super_resolve(result.W, h, w, s)
    if result.mlp is None:
        return y
    y_prime = np.empty(y.values.size)
    for rows in row_chunks(y_prime.size, 2 * result.W.c):
        y_prime[rows] = siren_forward(result.mlp, scaled_features(result.W, h, w, s, rows))
    return MaskRaster(0.5 * (y.values + y_prime.reshape(y.shape)))
