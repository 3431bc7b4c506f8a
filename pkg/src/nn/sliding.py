"""Logits of every stride-1 window over a stretch of recording.

The temporal convs, the per-position normalization and the spatial map each
look at a short neighbourhood of one time step. One pass over the recording
therefore gives the backbone features of every window position that is at
least ``reach`` samples away from both window edges. Positions closer to an
edge see the window's zero padding. They come from extra passes in which
the conv taps that fall outside the window are zeroed. The right edge is the
left edge of the time-reversed signal under time-reversed kernels.
"""

from typing import List

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .layers import NORM_EPS, Params
from .model import SorterModel


def reach(model: SorterModel) -> int:
    """Samples on each side that one backbone feature depends on."""
    return model.backbone_cfg.k_t1 // 2 + model.backbone_cfg.k_t2 // 2


def shares_features(model: SorterModel) -> bool:
    """True when no window position is within ``reach`` of both edges."""
    return model.t_window >= 2 * reach(model)


def _neighbourhoods(x: np.ndarray, kernel: int) -> np.ndarray:
    """(C, L, F) -> (C, L, F, kernel) view, zero beyond both ends."""
    pad = kernel // 2
    return sliding_window_view(np.pad(x, ((0, 0), (pad, pad), (0, 0))), kernel, axis=1)


def _conv(patches: np.ndarray, weight: np.ndarray, bias: np.ndarray) -> np.ndarray:
    return np.tensordot(patches, weight, axes=([2, 3], [1, 2])) + bias


def _norm_relu(x: np.ndarray, params: Params, name: str) -> np.ndarray:
    """LayerNorm then ReLU over the last axis, in place on ``x``."""
    x -= x.mean(axis=-1, keepdims=True)
    x *= 1.0 / np.sqrt((x * x).mean(axis=-1, keepdims=True) + NORM_EPS)
    x *= params[f"{name}.weight"]
    x += params[f"{name}.bias"]
    return np.maximum(x, 0.0, out=x)


def _left_edge_features(params: Params, x: np.ndarray, distances: range) -> List[np.ndarray]:
    """Backbone features (L, c_s) at every position of ``x`` (C, L), one array per distance.

    Entry ``p`` holds the features of a position that sits ``p`` samples from
    the left edge of its window; ``p >= reach`` means the edge is out of reach.
    """
    w1, b1 = params["backbone.temporal1.weight"], params["backbone.temporal1.bias"]
    w2, b2 = params["backbone.temporal2.weight"], params["backbone.temporal2.bias"]
    pad1, k2 = w1.shape[-1] // 2, w2.shape[-1]
    pad2 = k2 // 2

    patches1 = _neighbourhoods(x[..., None], w1.shape[-1])
    # Layer-1 output at distance q from the edge; q == pad1 is unaffected by it.
    neighbourhoods1 = []
    for q in range(pad1 + 1):
        weight = w1.copy()
        weight[..., :pad1 - q] = 0.0
        hidden = _norm_relu(_conv(patches1, weight, b1), params, "backbone.norm1")
        neighbourhoods1.append(_neighbourhoods(hidden, k2))
    outside = np.zeros(neighbourhoods1[0].shape[:-1], dtype=x.dtype)

    features = []
    for p in distances:
        taps = []
        for i in range(k2):
            q = p + i - pad2
            taps.append(outside if q < 0 else neighbourhoods1[min(q, pad1)][..., i])
        hidden = _norm_relu(_conv(np.stack(taps, axis=-1), w2, b2), params, "backbone.norm2")
        spatial = np.tensordot(hidden, params["backbone.spatial.weight"], axes=([0, 2], [1, 2]))
        spatial += params["backbone.spatial.bias"]
        features.append(_norm_relu(spatial, params, "backbone.norm3"))
    return features


def _time_reversed(params: Params) -> Params:
    reversed_params = dict(params)
    for name in ("backbone.temporal1.weight", "backbone.temporal2.weight"):
        reversed_params[name] = np.ascontiguousarray(params[name][..., ::-1])
    return reversed_params


def window_logits(model: SorterModel, segment: np.ndarray) -> np.ndarray:
    """Logits (B, n_classes) of the B = L - t_window + 1 windows inside ``segment`` (C, L).

    Agrees with ``model.logits`` on the same windows up to rounding.
    """
    segment = np.asarray(segment, dtype=model.dtype)
    t_window = model.t_window
    n_windows = segment.shape[1] - t_window + 1
    if not shares_features(model):
        windows = sliding_window_view(segment, t_window, axis=1).transpose(1, 0, 2)
        return model.logits(windows)

    r = reach(model)
    left = _left_edge_features(model.params, segment, range(r + 1))
    right = _left_edge_features(_time_reversed(model.params), np.ascontiguousarray(segment[:, ::-1]), range(r))
    right = [f[::-1] for f in right]

    # (B, t_window, c_s); window b covers segment positions b .. b + t_window - 1.
    features = np.ascontiguousarray(sliding_window_view(left[r], t_window, axis=0).transpose(0, 2, 1))
    for p in range(r):
        features[:, p, :] = left[p][p:p + n_windows]
        position = t_window - 1 - p
        features[:, position, :] = right[p][position:position + n_windows]
    weight = model.params["classifier.weight"]
    return features.reshape(n_windows, -1) @ weight.T + model.params["classifier.bias"]
