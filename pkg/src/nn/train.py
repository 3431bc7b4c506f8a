"""Mini-batch training, backbone pretraining and few-shot finetuning."""

import logging
from dataclasses import dataclass, field
from typing import List, Literal, Optional

import numpy as np

from ..core.recording import GroundTruth, Recording
from ..core.rng import Rng
from ..dataset.windows import WindowDataset, build_dataset
from ..util.errors import InvalidInputError, ShapeMismatchError, TrainingDivergedError
from ..util.hashing import derive_seed
from ..util.logging import log_epoch
from ..util.schema import BackboneConfig, TrainConfig, WindowSpec
from .layers import Params
from .model import SorterModel, backward_batch, init_model
from .optim import Adam

logger = logging.getLogger(__name__)


@dataclass
class TrainResult:
    """Trained model and the mean loss of every epoch."""
    model: SorterModel
    epoch_losses: List[float] = field(default_factory=list)


@dataclass(frozen=True)
class PretrainedBackbone:
    """Backbone parameters detached from the classifier they were trained with."""
    params: Params
    backbone_cfg: BackboneConfig
    n_channels: int
    t_window: int
    epoch_losses: List[float] = field(default_factory=list)


def _check_dataset(model: SorterModel, ds: WindowDataset) -> None:
    if len(ds) == 0:
        raise InvalidInputError("Cannot train on an empty dataset")
    if ds.n_channels != model.n_channels:
        raise ShapeMismatchError("dataset channels", model.n_channels, ds.n_channels)
    if ds.t_window != model.t_window:
        raise ShapeMismatchError("dataset t_window", model.t_window, ds.t_window)
    if ds.n_classes != model.n_classes:
        raise ShapeMismatchError("dataset classes", model.n_classes, ds.n_classes)


def train(model: SorterModel, ds: WindowDataset, cfg: TrainConfig,
          freeze: Literal["none"] = "none") -> TrainResult:
    """Train a float64 copy of ``model`` with shuffled mini-batch Adam.

    The shuffle stream is derived from ``cfg.seed``, so identical inputs give
    identical trajectories.
    """
    if freeze != "none":
        raise InvalidInputError(f"Unsupported freeze mode {freeze!r}")
    _check_dataset(model, ds)
    model = model.astype(np.float64)
    optimizer = Adam.from_config(model.params, cfg)
    shuffle = Rng(derive_seed(cfg.seed, "shuffle"))
    n = len(ds)
    losses: List[float] = []
    for epoch in range(1, cfg.epochs + 1):
        order = shuffle.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            indices = order[start:start + cfg.batch_size]
            loss, grads = backward_batch(model, ds.batch(indices), ds.labels[indices], reduction="mean")
            optimizer.step(grads)
            total += loss * indices.size
            logger.debug(f"epoch {epoch} batch {start // cfg.batch_size}: loss {loss:.6f}")
        mean_loss = total / n
        if not np.isfinite(mean_loss):
            raise TrainingDivergedError(f"Mean loss became non-finite at epoch {epoch}: {mean_loss}")
        losses.append(mean_loss)
        log_epoch(logger, epoch, cfg.epochs, mean_loss)
    return TrainResult(model=model, epoch_losses=losses)


def window_accuracy(model: SorterModel, ds: WindowDataset, batch_size: int = 256) -> float:
    """Fraction of windows in ``ds`` whose arg-max class equals the label."""
    correct = 0
    for start in range(0, len(ds), batch_size):
        indices = np.arange(start, min(start + batch_size, len(ds)))
        predicted = np.argmax(model.predict_proba(ds.batch(indices)), axis=1)
        correct += int(np.count_nonzero(predicted == ds.labels[indices]))
    return correct / len(ds) if len(ds) else 1.0


def pretrain(rec: Recording, gt: GroundTruth, spec: WindowSpec, backbone_cfg: BackboneConfig,
             train_cfg: TrainConfig) -> PretrainedBackbone:
    """Train a full model on the complete dataset of ``rec`` and keep only its backbone."""
    if gt.n_neurons < 2:
        raise InvalidInputError(f"Pretraining needs at least 2 neurons, got {gt.n_neurons}")
    ds = build_dataset(rec, gt, spec, Rng(derive_seed(train_cfg.seed, "dataset")))
    model = init_model(backbone_cfg, rec.n_channels, spec.t_window, ds.n_classes,
                       Rng(derive_seed(train_cfg.seed, "init")))
    logger.info(f"Pretraining on {len(ds)} windows, {ds.n_classes} classes")
    result = train(model, ds, train_cfg)
    return PretrainedBackbone(
        params={k: v.copy() for k, v in result.model.backbone_params().items()},
        backbone_cfg=backbone_cfg,
        n_channels=rec.n_channels,
        t_window=spec.t_window,
        epoch_losses=result.epoch_losses,
    )


def finetune_run(backbone: Optional[PretrainedBackbone], ds_fewshot: WindowDataset, train_cfg: TrainConfig,
                 backbone_cfg: Optional[BackboneConfig] = None) -> TrainResult:
    """Finetune all parameters from ``backbone``, or train from scratch when it is None.

    The classifier is always freshly initialized.
    """
    if backbone is not None:
        if backbone_cfg is not None and backbone_cfg != backbone.backbone_cfg:
            raise InvalidInputError("backbone_cfg disagrees with the pretrained backbone")
        backbone_cfg = backbone.backbone_cfg
        if backbone.n_channels != ds_fewshot.n_channels:
            raise ShapeMismatchError("backbone channels", backbone.n_channels, ds_fewshot.n_channels)
    backbone_cfg = backbone_cfg or BackboneConfig()
    model = init_model(backbone_cfg, ds_fewshot.n_channels, ds_fewshot.t_window, ds_fewshot.n_classes,
                       Rng(derive_seed(train_cfg.seed, "init")))
    if backbone is not None:
        for name, value in backbone.params.items():
            model.params[name] = value.astype(np.float64, copy=True)
    logger.info(
        f"{'Finetuning' if backbone is not None else 'Training from scratch'} on "
        f"{len(ds_fewshot)} windows, {ds_fewshot.n_classes} classes"
    )
    return train(model, ds_fewshot, train_cfg)


def finetune(backbone: Optional[PretrainedBackbone], ds_fewshot: WindowDataset, train_cfg: TrainConfig,
             backbone_cfg: Optional[BackboneConfig] = None) -> SorterModel:
    return finetune_run(backbone, ds_fewshot, train_cfg, backbone_cfg).model
