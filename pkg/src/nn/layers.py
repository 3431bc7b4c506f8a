"""Stateless layers with hand-written reverse-mode gradients.

Activations are laid out as (batch, probe channels, time, features). Each
layer keeps its parameters outside itself, in a name-keyed dict, and exposes

    forward(params, x)        -> (y, cache)
    backward(params, cache, dy) -> (dx, grads)

Matrix products are stacked per example (``np.matmul`` over the batch axis),
so the arithmetic applied to one example does not depend on what else is in
the batch.
"""

from typing import Dict, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..core.rng import Rng

Params = Dict[str, np.ndarray]
Grads = Dict[str, np.ndarray]

NORM_EPS = 1e-5


def uniform_init(rng: Rng, shape: Tuple[int, ...], fan_in: int) -> np.ndarray:
    bound = np.sqrt(1.0 / fan_in)
    return rng.uniform(int(np.prod(shape)), -bound, bound).reshape(shape)


class Layer:
    """Base class: a named layer whose parameters live in an external dict."""

    def __init__(self, name: str):
        self.name = name

    def param_names(self) -> Tuple[str, ...]:
        return ()

    def init_params(self, rng: Rng) -> Params:
        return {}

    def forward(self, params: Params, x: np.ndarray):
        raise NotImplementedError

    def backward(self, params: Params, cache, dy: np.ndarray):
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}({self.name!r})"


class TemporalConv(Layer):
    """Convolution along time, shared across probe channels, "same" zero padding."""

    def __init__(self, name: str, f_in: int, f_out: int, kernel: int):
        super().__init__(name)
        self.f_in = f_in
        self.f_out = f_out
        self.kernel = kernel

    def param_names(self):
        return (f"{self.name}.weight", f"{self.name}.bias")

    def init_params(self, rng: Rng) -> Params:
        fan_in = self.f_in * self.kernel
        return {
            f"{self.name}.weight": uniform_init(rng, (self.f_out, self.f_in, self.kernel), fan_in),
            f"{self.name}.bias": np.zeros(self.f_out),
        }

    def forward(self, params: Params, x: np.ndarray):
        B, C, T, F = x.shape
        pad = self.kernel // 2
        padded = np.pad(x, ((0, 0), (0, 0), (pad, pad), (0, 0)))
        # (B, C, T, F, k) -> (B, C*T, F*k)
        patches = sliding_window_view(padded, self.kernel, axis=2).reshape(B, C * T, F * self.kernel)
        weight = params[f"{self.name}.weight"].reshape(self.f_out, F * self.kernel).T
        y = np.matmul(patches, weight).reshape(B, C, T, self.f_out) + params[f"{self.name}.bias"]
        return y, (patches, x.shape)

    def backward(self, params: Params, cache, dy: np.ndarray):
        patches, shape = cache
        B, C, T, F = shape
        k = self.kernel
        pad = k // 2
        dy_flat = dy.reshape(B, C * T, self.f_out)
        weight = params[f"{self.name}.weight"].reshape(self.f_out, F * k)
        grads = {
            f"{self.name}.weight": np.tensordot(dy_flat, patches, axes=([0, 1], [0, 1])).reshape(self.f_out, F, k),
            f"{self.name}.bias": dy.sum(axis=(0, 1, 2)),
        }
        dpatches = np.matmul(dy_flat, weight).reshape(B, C, T, F, k)
        dpadded = np.zeros((B, C, T + 2 * pad, F), dtype=dy.dtype)
        for j in range(k):
            dpadded[:, :, j:j + T, :] += dpatches[..., j]
        return dpadded[:, :, pad:pad + T, :], grads


class LayerNorm(Layer):
    """Normalization over the feature axis at every (channel, time) position, affine per feature map."""

    def __init__(self, name: str, features: int, eps: float = NORM_EPS):
        super().__init__(name)
        self.features = features
        self.eps = eps

    def param_names(self):
        return (f"{self.name}.weight", f"{self.name}.bias")

    def init_params(self, rng: Rng) -> Params:
        return {
            f"{self.name}.weight": np.ones(self.features),
            f"{self.name}.bias": np.zeros(self.features),
        }

    def forward(self, params: Params, x: np.ndarray):
        centered = x - x.mean(axis=-1, keepdims=True)
        inv_std = 1.0 / np.sqrt((centered * centered).mean(axis=-1, keepdims=True) + self.eps)
        x_hat = centered * inv_std
        y = x_hat * params[f"{self.name}.weight"] + params[f"{self.name}.bias"]
        return y, (x_hat, inv_std)

    def backward(self, params: Params, cache, dy: np.ndarray):
        x_hat, inv_std = cache
        axes = tuple(range(dy.ndim - 1))
        grads = {
            f"{self.name}.weight": (dy * x_hat).sum(axis=axes),
            f"{self.name}.bias": dy.sum(axis=axes),
        }
        g = dy * params[f"{self.name}.weight"]
        dx = inv_std * (g - g.mean(axis=-1, keepdims=True) - x_hat * (g * x_hat).mean(axis=-1, keepdims=True))
        return dx, grads


class ReLU(Layer):

    def forward(self, params: Params, x: np.ndarray):
        return np.maximum(x, 0.0), x > 0

    def backward(self, params: Params, cache, dy: np.ndarray):
        return dy * cache, {}


class SpatialMap(Layer):
    """Dense map across probe channels, applied identically at every timestep.

    Maps (B, C, T, F) to (B, 1, T, S): each output feature is a linear
    combination of all (channel, feature) pairs at the same time.
    """

    def __init__(self, name: str, n_channels: int, f_in: int, f_out: int):
        super().__init__(name)
        self.n_channels = n_channels
        self.f_in = f_in
        self.f_out = f_out

    def param_names(self):
        return (f"{self.name}.weight", f"{self.name}.bias")

    def init_params(self, rng: Rng) -> Params:
        fan_in = self.n_channels * self.f_in
        return {
            f"{self.name}.weight": uniform_init(rng, (self.f_out, self.n_channels, self.f_in), fan_in),
            f"{self.name}.bias": np.zeros(self.f_out),
        }

    def forward(self, params: Params, x: np.ndarray):
        B, C, T, F = x.shape
        stacked = x.transpose(0, 2, 1, 3).reshape(B, T, C * F)
        weight = params[f"{self.name}.weight"].reshape(self.f_out, C * F).T
        y = np.matmul(stacked, weight) + params[f"{self.name}.bias"]
        return y[:, None, :, :], (stacked, x.shape)

    def backward(self, params: Params, cache, dy: np.ndarray):
        stacked, shape = cache
        B, C, T, F = shape
        dy_flat = dy[:, 0, :, :]
        weight = params[f"{self.name}.weight"].reshape(self.f_out, C * F)
        grads = {
            f"{self.name}.weight": np.tensordot(dy_flat, stacked, axes=([0, 1], [0, 1])).reshape(self.f_out, C, F),
            f"{self.name}.bias": dy_flat.sum(axis=(0, 1)),
        }
        dx = np.matmul(dy_flat, weight).reshape(B, T, C, F).transpose(0, 2, 1, 3)
        return dx, grads


class Dense(Layer):
    """Fully-connected layer over the flattened per-example activation."""

    def __init__(self, name: str, n_in: int, n_out: int):
        super().__init__(name)
        self.n_in = n_in
        self.n_out = n_out

    def param_names(self):
        return (f"{self.name}.weight", f"{self.name}.bias")

    def init_params(self, rng: Rng) -> Params:
        return {
            f"{self.name}.weight": uniform_init(rng, (self.n_out, self.n_in), self.n_in),
            f"{self.name}.bias": np.zeros(self.n_out),
        }

    def forward(self, params: Params, x: np.ndarray):
        B = x.shape[0]
        flat = x.reshape(B, 1, -1)
        y = np.matmul(flat, params[f"{self.name}.weight"].T)[:, 0, :] + params[f"{self.name}.bias"]
        return y, (flat[:, 0, :], x.shape)

    def backward(self, params: Params, cache, dy: np.ndarray):
        flat, shape = cache
        grads = {
            f"{self.name}.weight": dy.T @ flat,
            f"{self.name}.bias": dy.sum(axis=0),
        }
        dx = (dy @ params[f"{self.name}.weight"]).reshape(shape)
        return dx, grads


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max subtraction."""
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)
