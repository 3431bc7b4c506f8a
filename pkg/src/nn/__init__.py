"""Sorter network, gradients, optimizer and training loops."""

from .layers import Dense, LayerNorm, ReLU, SpatialMap, TemporalConv, softmax
from .model import (
    SorterModel,
    backward,
    backward_batch,
    build_backbone,
    forward,
    init_model,
    loss_cross_entropy,
)
from .optim import Adam
from .sliding import window_logits
from .train import PretrainedBackbone, TrainResult, finetune, finetune_run, pretrain, train, window_accuracy

__all__ = [
    "Dense",
    "LayerNorm",
    "ReLU",
    "SpatialMap",
    "TemporalConv",
    "softmax",
    "SorterModel",
    "backward",
    "backward_batch",
    "build_backbone",
    "forward",
    "init_model",
    "loss_cross_entropy",
    "Adam",
    "window_logits",
    "PretrainedBackbone",
    "TrainResult",
    "finetune",
    "finetune_run",
    "pretrain",
    "train",
    "window_accuracy",
]
