"""Sine-activation MLP on Fourier feature rows, with hand-derived backprop.

Layers are ``z = a @ W + b``; hidden layers apply ``sin``, the single output
unit applies a sigmoid. Weight matrices are stored ``(fan_in, fan_out)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .fourier import sigmoid
from .lattice import FrequencyLattice

DEFAULT_HIDDEN = (256, 256, 256)


@dataclass
class SirenParams:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    seed: int = 0
    dims: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ValueError("need one bias per weight matrix and at least one layer")
        dims = [self.weights[0].shape[0]]
        for W, b in zip(self.weights, self.biases):
            if W.shape[0] != dims[-1] or b.shape != (W.shape[1],):
                raise ValueError("layer shapes do not chain")
            dims.append(W.shape[1])
        if dims[-1] != 1:
            raise ValueError("the output layer must have a single unit")
        self.dims = tuple(int(d) for d in dims)

    @property
    def input_dim(self) -> int:
        return self.dims[0]

    def arrays(self) -> list[np.ndarray]:
        """Weights and biases interleaved, layer by layer."""
        out = []
        for W, b in zip(self.weights, self.biases):
            out.extend((W, b))
        return out

    def copy(self) -> "SirenParams":
        return SirenParams([W.copy() for W in self.weights], [b.copy() for b in self.biases], self.seed)

    def to_dict(self) -> dict:
        return {
            "dims": list(self.dims),
            "seed": self.seed,
            "layers": [
                {"weight": W.reshape(-1).tolist(), "bias": b.tolist(), "shape": list(W.shape)}
                for W, b in zip(self.weights, self.biases)
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "SirenParams":
        weights, biases = [], []
        for layer in data["layers"]:
            weights.append(np.asarray(layer["weight"], dtype=np.float64).reshape(layer["shape"]))
            biases.append(np.asarray(layer["bias"], dtype=np.float64))
        params = cls(weights, biases, int(data.get("seed", 0)))
        if "dims" in data and tuple(data["dims"]) != params.dims:
            raise ValueError("declared dims disagree with layer shapes")
        return params


def init_siren(
    lattice_or_dim, hidden_dims: Sequence[int] = DEFAULT_HIDDEN, seed: int = 0, extra_inputs: int = 0
) -> SirenParams:
    """Uniform ``(-sqrt(6/fan_in), sqrt(6/fan_in))`` weights, zero biases.

    The input width is ``2c`` for a lattice (or an explicit int), plus
    ``extra_inputs`` auxiliary channels.
    """
    if isinstance(lattice_or_dim, FrequencyLattice):
        in_dim = 2 * lattice_or_dim.c
    else:
        in_dim = int(lattice_or_dim)
    in_dim += extra_inputs
    hidden_dims = list(hidden_dims)
    if not hidden_dims or min(hidden_dims) < 1:
        raise ValueError("hidden_dims must be a non-empty list of positive ints")
    rng = np.random.default_rng(seed)
    dims = [in_dim, *hidden_dims, 1]
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return SirenParams(weights, biases, seed)


def _check_width(params: SirenParams, features: np.ndarray) -> np.ndarray:
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != params.input_dim:
        raise ValueError(f"feature width {features.shape[-1]} != input dim {params.input_dim}")
    return features


def _forward(params: SirenParams, features: np.ndarray):
    pre, acts = [], [features]
    a = features
    last = len(params.weights) - 1
    for k, (W, b) in enumerate(zip(params.weights, params.biases)):
        z = a @ W + b
        pre.append(z)
        a = sigmoid(z[:, 0]) if k == last else np.sin(z)
        acts.append(a)
    return pre, acts


def siren_forward(params: SirenParams, features) -> np.ndarray:
    """One value in (0, 1) per feature row."""
    return _forward(params, _check_width(params, features))[1][-1]


def siren_backward(params: SirenParams, features, upstream) -> tuple[SirenParams, np.ndarray]:
    """Gradients of ``sum(upstream * siren_forward(features))``.

    Returns parameter gradients (laid out as a SirenParams) and the gradient
    w.r.t. the input features.
    """
    features = _check_width(params, features)
    upstream = np.asarray(upstream, dtype=np.float64).reshape(-1)
    if upstream.shape[0] != features.shape[0]:
        raise ValueError(f"upstream has {upstream.shape[0]} values for {features.shape[0]} rows")
    pre, acts = _forward(params, features)
    y = acts[-1]
    dz = (upstream * y * (1.0 - y))[:, None]
    n = len(params.weights)
    grad_w, grad_b = [None] * n, [None] * n
    for k in range(n - 1, -1, -1):
        grad_w[k] = acts[k].T @ dz
        grad_b[k] = dz.sum(axis=0)
        da = dz @ params.weights[k].T
        if k == 0:
            return SirenParams(grad_w, grad_b, params.seed), da
        dz = da * np.cos(pre[k - 1])
    raise AssertionError("unreachable")
