"""Linear-min-max-plus network: parameters, forward pass, softmax head.

The network maps an input x in R^P through three layers:

  1. a sparse linear layer producing, for every pixel p, the pair
     (K+_p * x_p, -K-_p * x_p) with positive scales K+_p, K-_p;
  2. a min-plus hidden layer  g_h = min_i (lin_i + W1[i, h]);
  3. a max-plus output layer  z_d = max_h (g_h + W2[h, d])
     followed by a tempered softmax.

Because both tropical layers are pure selections, every logit is determined
by exactly one hidden neuron and every hidden activation by exactly one
linear branch.  ``forward`` records those winners so downstream code can
walk the active path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, NumericError, ParameterError

# Positive floor for the linear scales.  Keeping every scale at or above this
# value fixes the sign pattern of the linear layer (plus branch strictly
# increasing, minus branch strictly decreasing), which the sensitivity
# formulas in lmmx.explain divide by.
SCALE_FLOOR = 1e-6


def _as_float_array(a, name: str) -> np.ndarray:
    arr = np.asarray(a, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"{name} contains non-finite values")
    return arr


@dataclass
class LmmParams:
    """All trainable weights of a linear-min-max-plus classifier.

    Attributes:
        scales: shape (2P,).  Even entries hold K+_p, odd entries K-_p for
            pixel p; all entries must be >= SCALE_FLOOR.
        minplus_weights: shape (2P, H1) biases of the min-plus layer.
        maxplus_weights: shape (H1, C) biases of the max-plus layer.
        temperature: softmax temperature, > 0.  Training always uses 1;
            calibration overwrites this afterwards.
    """

    scales: np.ndarray
    minplus_weights: np.ndarray
    maxplus_weights: np.ndarray
    temperature: float = 1.0

    def __post_init__(self):
        self.scales = _as_float_array(self.scales, "scales")
        self.minplus_weights = _as_float_array(self.minplus_weights, "minplus_weights")
        self.maxplus_weights = _as_float_array(self.maxplus_weights, "maxplus_weights")
        if self.scales.ndim != 1 or self.scales.size == 0 or self.scales.size % 2:
            raise DimensionError("scales must be a 1-D array of length 2P")
        if self.minplus_weights.ndim != 2 or self.minplus_weights.shape[0] != self.scales.size:
            raise DimensionError("minplus_weights must have shape (2P, H1)")
        if self.maxplus_weights.ndim != 2 or self.maxplus_weights.shape[0] != self.minplus_weights.shape[1]:
            raise DimensionError("maxplus_weights must have shape (H1, C)")
        if self.maxplus_weights.shape[1] < 2:
            raise ParameterError("need at least 2 classes")
        if np.any(self.scales < SCALE_FLOOR):
            raise ParameterError(f"all scales must be >= {SCALE_FLOOR}")
        self.temperature = float(self.temperature)
        if not np.isfinite(self.temperature) or self.temperature <= 0:
            raise ParameterError("temperature must be a positive real")

    @property
    def n_pixels(self) -> int:
        return self.scales.size // 2

    @property
    def n_hidden(self) -> int:
        return self.minplus_weights.shape[1]

    @property
    def n_classes(self) -> int:
        return self.maxplus_weights.shape[1]

    @property
    def n_parameters(self) -> int:
        """Trainable parameter count: 2P + 2P*H1 + H1*C."""
        return self.scales.size + self.minplus_weights.size + self.maxplus_weights.size

    def copy(self) -> "LmmParams":
        return LmmParams(
            self.scales.copy(),
            self.minplus_weights.copy(),
            self.maxplus_weights.copy(),
            self.temperature,
        )


@dataclass
class ForwardTrace:
    """Per-layer values plus the winning indices of one forward pass.

    Indices are 0-based.  ``hidden_argmin[h]`` is the linear branch that
    attained g_h and ``logit_argmax[d]`` the hidden neuron that attained
    z_d; ties go to the lowest index.
    """

    linear: np.ndarray        # (2P,)
    hidden: np.ndarray        # (H1,)
    hidden_argmin: np.ndarray  # (H1,) int
    logits: np.ndarray        # (C,)
    logit_argmax: np.ndarray  # (C,) int
    predicted: int
    probs: np.ndarray         # (C,)


def morphological_perceptron(x, w, b) -> float:
    """Single max-plus neuron: max(b, max_i(x_i + w_i)).

    An empty input falls back to the bias.
    """
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if x.ndim != 1 or w.ndim != 1 or x.shape != w.shape:
        raise DimensionError(f"x and w must be 1-D of equal length, got {x.shape} and {w.shape}")
    if x.size == 0:
        return float(b)
    return float(max(float(b), float(np.max(x + w))))


def linear_layer(params: LmmParams, x) -> np.ndarray:
    """Sparse linear map: out[2p] = K+_p * x_p, out[2p+1] = -K-_p * x_p."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (params.n_pixels,):
        raise DimensionError(f"expected input of length {params.n_pixels}, got shape {x.shape}")
    out = np.empty(2 * params.n_pixels)
    out[0::2] = params.scales[0::2] * x
    out[1::2] = -params.scales[1::2] * x
    return out


def softmax_with_temperature(z, temperature: float) -> np.ndarray:
    """Tempered softmax exp(z_d/T) / sum_d' exp(z_d'/T), max-subtracted."""
    if temperature <= 0:
        raise ParameterError("temperature must be > 0")
    z = np.asarray(z, dtype=np.float64) / temperature
    e = np.exp(z - np.max(z))
    return e / np.sum(e)


def forward(params: LmmParams, x) -> ForwardTrace:
    """Evaluate the network on one input and record the active path."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (params.n_pixels,):
        raise DimensionError(f"expected input of length {params.n_pixels}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise NumericError("input contains non-finite values")

    lin = linear_layer(params, x)
    pre_hidden = lin[:, None] + params.minplus_weights          # (2P, H1)
    hidden_argmin = np.argmin(pre_hidden, axis=0)               # first index on ties
    hidden = pre_hidden[hidden_argmin, np.arange(params.n_hidden)]

    pre_logits = hidden[:, None] + params.maxplus_weights       # (H1, C)
    logit_argmax = np.argmax(pre_logits, axis=0)
    logits = pre_logits[logit_argmax, np.arange(params.n_classes)]

    predicted = int(np.argmax(logits))
    probs = softmax_with_temperature(logits, params.temperature)
    return ForwardTrace(lin, hidden, hidden_argmin, logits, logit_argmax, predicted, probs)


def batch_logits(params: LmmParams, images: np.ndarray) -> np.ndarray:
    """Logits for a batch of inputs, shape (N, C).

    Matches ``forward`` bitwise on every row; the hidden layer is reduced
    one neuron at a time to keep peak memory at O(N * 2P).
    """
    images = np.asarray(images, dtype=np.float64)
    if images.ndim != 2 or images.shape[1] != params.n_pixels:
        raise DimensionError(f"expected (N, {params.n_pixels}) inputs, got shape {images.shape}")
    if not np.all(np.isfinite(images)):
        raise NumericError("batch contains non-finite values")

    lin = np.empty((images.shape[0], 2 * params.n_pixels))
    lin[:, 0::2] = params.scales[0::2] * images
    lin[:, 1::2] = -params.scales[1::2] * images

    hidden = np.empty((images.shape[0], params.n_hidden))
    for h in range(params.n_hidden):
        hidden[:, h] = np.min(lin + params.minplus_weights[:, h], axis=1)
    return np.max(hidden[:, :, None] + params.maxplus_weights[None, :, :], axis=1)


def batch_predict(params: LmmParams, images: np.ndarray) -> np.ndarray:
    """Predicted class per row (temperature-invariant)."""
    return np.argmax(batch_logits(params, images), axis=1)


def softmax_rows(z: np.ndarray, temperature: float) -> np.ndarray:
    """Row-wise tempered softmax for (N, C) logit matrices."""
    if temperature <= 0:
        raise ParameterError("temperature must be > 0")
    z = np.asarray(z, dtype=np.float64) / temperature
    e = np.exp(z - np.max(z, axis=1, keepdims=True))
    return e / np.sum(e, axis=1, keepdims=True)
