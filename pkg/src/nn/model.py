"""The sorter network: temporal/spatial backbone plus a softmax classifier."""

import logging
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np

from ..core.rng import Rng
from ..util.errors import InvalidInputError, ShapeMismatchError
from ..util.schema import BackboneConfig
from .layers import Dense, Grads, Layer, LayerNorm, Params, ReLU, SpatialMap, TemporalConv, softmax

logger = logging.getLogger(__name__)

BACKBONE_PREFIX = "backbone."
CLASSIFIER_PREFIX = "classifier."
PROB_FLOOR = 1e-12


def build_backbone(cfg: BackboneConfig, n_channels: int) -> List[Layer]:
    """conv -> norm -> ReLU, twice along time, then spatial map -> norm -> ReLU."""
    return [
        TemporalConv("backbone.temporal1", 1, cfg.c_t1, cfg.k_t1),
        LayerNorm("backbone.norm1", cfg.c_t1),
        ReLU("backbone.relu1"),
        TemporalConv("backbone.temporal2", cfg.c_t1, cfg.c_t2, cfg.k_t2),
        LayerNorm("backbone.norm2", cfg.c_t2),
        ReLU("backbone.relu2"),
        SpatialMap("backbone.spatial", n_channels, cfg.c_t2, cfg.c_s),
        LayerNorm("backbone.norm3", cfg.c_s),
        ReLU("backbone.relu3"),
    ]


def backbone_shapes(cfg: BackboneConfig, n_channels: int) -> Dict[str, Tuple[int, ...]]:
    return {
        "backbone.temporal1.weight": (cfg.c_t1, 1, cfg.k_t1),
        "backbone.temporal1.bias": (cfg.c_t1,),
        "backbone.norm1.weight": (cfg.c_t1,),
        "backbone.norm1.bias": (cfg.c_t1,),
        "backbone.temporal2.weight": (cfg.c_t2, cfg.c_t1, cfg.k_t2),
        "backbone.temporal2.bias": (cfg.c_t2,),
        "backbone.norm2.weight": (cfg.c_t2,),
        "backbone.norm2.bias": (cfg.c_t2,),
        "backbone.spatial.weight": (cfg.c_s, n_channels, cfg.c_t2),
        "backbone.spatial.bias": (cfg.c_s,),
        "backbone.norm3.weight": (cfg.c_s,),
        "backbone.norm3.bias": (cfg.c_s,),
    }


def param_shapes(cfg: BackboneConfig, n_channels: int, t_window: int, n_classes: int) -> Dict[str, Tuple[int, ...]]:
    shapes = backbone_shapes(cfg, n_channels)
    shapes["classifier.weight"] = (n_classes, t_window * cfg.c_s)
    shapes["classifier.bias"] = (n_classes,)
    return shapes


class SorterModel:
    """Backbone and classifier parameters plus the dimensions they were built for."""

    def __init__(self, backbone_cfg: BackboneConfig, n_channels: int, t_window: int,
                 n_classes: int, params: Params):
        if n_classes < 2:
            raise InvalidInputError(f"n_classes must be at least 2, got {n_classes}")
        if max(backbone_cfg.k_t1, backbone_cfg.k_t2) > t_window:
            raise InvalidInputError(
                f"Kernel lengths {backbone_cfg.k_t1}/{backbone_cfg.k_t2} exceed t_window={t_window}"
            )
        self.backbone_cfg = backbone_cfg
        self.n_channels = int(n_channels)
        self.t_window = int(t_window)
        self.n_classes = int(n_classes)
        self.layers = build_backbone(backbone_cfg, self.n_channels) + [
            Dense("classifier", self.t_window * backbone_cfg.c_s, self.n_classes)
        ]
        expected = self.param_shapes()
        missing = sorted(set(expected) - set(params))
        extra = sorted(set(params) - set(expected))
        if missing or extra:
            raise InvalidInputError(f"Parameter set mismatch: missing {missing}, unexpected {extra}")
        for name, shape in expected.items():
            if params[name].shape != shape:
                raise ShapeMismatchError(f"parameter {name}", shape, params[name].shape)
        self.params = params

    @classmethod
    def initialize(cls, backbone_cfg: BackboneConfig, n_channels: int, t_window: int,
                   n_classes: int, rng: Rng) -> "SorterModel":
        """Fan-in scaled uniform weights, zero biases, unit norm gains."""
        layers = build_backbone(backbone_cfg, n_channels) + [
            Dense("classifier", t_window * backbone_cfg.c_s, n_classes)
        ]
        params: Params = {}
        for layer in layers:
            params.update(layer.init_params(rng))
        return cls(backbone_cfg, n_channels, t_window, n_classes, params)

    def param_shapes(self) -> Dict[str, Tuple[int, ...]]:
        return param_shapes(self.backbone_cfg, self.n_channels, self.t_window, self.n_classes)

    @property
    def dtype(self):
        return self.params["classifier.weight"].dtype

    def backbone_params(self) -> Params:
        return {k: v for k, v in self.params.items() if k.startswith(BACKBONE_PREFIX)}

    def classifier_params(self) -> Params:
        return {k: v for k, v in self.params.items() if k.startswith(CLASSIFIER_PREFIX)}

    def copy(self) -> "SorterModel":
        return SorterModel(self.backbone_cfg, self.n_channels, self.t_window, self.n_classes,
                           {k: v.copy() for k, v in self.params.items()})

    def astype(self, dtype) -> "SorterModel":
        """Copy with every parameter cast to ``dtype``."""
        return SorterModel(self.backbone_cfg, self.n_channels, self.t_window, self.n_classes,
                           {k: v.astype(dtype) for k, v in self.params.items()})

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(v)) for v in self.params.values())

    def check_windows(self, windows: np.ndarray) -> np.ndarray:
        """Validate a (B, channels, t_window) batch and cast it to the parameter dtype."""
        windows = np.asarray(windows)
        expected = (self.n_channels, self.t_window)
        if windows.ndim != 3 or windows.shape[1:] != expected:
            raise ShapeMismatchError("window batch (B, channels, t_window)", ("B",) + expected, windows.shape)
        return windows.astype(self.dtype, copy=False)

    def logits(self, windows: np.ndarray, keep_caches: bool = False):
        x = self.check_windows(windows)[..., None]
        caches = []
        for layer in self.layers:
            x, cache = layer.forward(self.params, x)
            if keep_caches:
                caches.append(cache)
        return (x, caches) if keep_caches else x

    def predict_proba(self, windows: np.ndarray) -> np.ndarray:
        """Class probabilities (B, n_classes), normalized in float64."""
        return softmax(self.logits(windows).astype(np.float64))

    def __repr__(self):
        return (f"SorterModel(n_channels={self.n_channels}, t_window={self.t_window}, "
                f"n_classes={self.n_classes}, dtype={self.dtype})")


def init_model(cfg: BackboneConfig, n_channels: int, t_window: int, n_classes: int, rng: Rng) -> SorterModel:
    return SorterModel.initialize(cfg, n_channels, t_window, n_classes, rng)


def forward(model: SorterModel, window: np.ndarray) -> np.ndarray:
    """Probability vector over classes for one (channels, t_window) window."""
    window = np.asarray(window)
    if window.ndim != 2:
        raise ShapeMismatchError("window (channels, t_window)", (model.n_channels, model.t_window), window.shape)
    return model.predict_proba(window[None])[0]


def _check_labels(labels: np.ndarray, n_classes: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise InvalidInputError(f"Labels must lie in [0, {n_classes}), got range [{labels.min()}, {labels.max()}]")
    return labels


def loss_cross_entropy(probs: np.ndarray, label: int) -> float:
    """-log(probs[label]) with the probability floored at 1e-12."""
    probs = np.asarray(probs, dtype=np.float64)
    if not 0 <= label < probs.shape[-1]:
        raise InvalidInputError(f"Label {label} out of range for {probs.shape[-1]} classes")
    return float(-np.log(max(probs[label], PROB_FLOOR)))


def backward_batch(model: SorterModel, windows: np.ndarray, labels: np.ndarray,
                   reduction: Literal["mean", "sum"] = "mean") -> Tuple[float, Grads]:
    """Cross-entropy loss of a batch and its gradient for every parameter."""
    labels = _check_labels(labels, model.n_classes)
    if labels.size != len(windows):
        raise ShapeMismatchError("labels", len(windows), labels.size)
    logits, caches = model.logits(windows, keep_caches=True)
    probs = softmax(logits)
    rows = np.arange(labels.size)
    picked = probs[rows, labels]
    losses = -np.log(np.maximum(picked, PROB_FLOOR))

    dy = probs.copy()
    dy[rows, labels] -= 1.0
    # Clamped examples have a constant loss.
    dy[picked < PROB_FLOOR] = 0.0
    scale = 1.0 / labels.size if reduction == "mean" else 1.0
    dy *= scale

    grads: Grads = {}
    for layer, cache in zip(reversed(model.layers), reversed(caches)):
        dy, layer_grads = layer.backward(model.params, cache, dy)
        grads.update(layer_grads)
    loss = float(losses.sum() * scale)
    return loss, grads


def backward(model: SorterModel, window: np.ndarray, label: int) -> Grads:
    """Gradient of the cross-entropy loss of one window."""
    _, grads = backward_batch(model, np.asarray(window)[None], np.array([label]), reduction="sum")
    return grads
