"""".ckpt" model and backbone checkpoints.

Tensors are located by their manifest ``offset`` (bytes from the start of
the payload), not by manifest order.
"""

from typing import Dict, Union

import numpy as np
from pydantic import ValidationError

from ..nn.model import SorterModel, backbone_shapes
from ..nn.train import PretrainedBackbone
from ..util.errors import InvalidInputError, PersistError, ShapeMismatchError
from ..util.schema import BackboneConfig
from .framing import F32, PathLike, f32_bytes, read_f32, read_framed, require, write_framed

CKPT_MAGIC = b"FAFECKP1"

Checkpoint = Union[SorterModel, PretrainedBackbone]


def _manifest(params: Dict[str, np.ndarray]):
    tensors = []
    chunks = []
    offset = 0
    for name in sorted(params):
        value = params[name]
        tensors.append({"name": name, "shape": list(value.shape), "offset": offset})
        data = f32_bytes(value)
        chunks.append(data)
        offset += len(data)
    return tensors, b"".join(chunks)


def write_checkpoint(path: PathLike, item: Checkpoint) -> None:
    """Write a full model, or a backbone with ``meta.classifier_present = false``."""
    if isinstance(item, SorterModel):
        params = item.params
        meta = {"n_channels": item.n_channels, "t_window": item.t_window,
                "n_classes": item.n_classes, "classifier_present": True}
    else:
        params = item.params
        meta = {"n_channels": item.n_channels, "t_window": item.t_window,
                "n_classes": None, "classifier_present": False}
    tensors, payload = _manifest(params)
    header = {"backbone_cfg": item.backbone_cfg.model_dump(), "meta": meta, "tensors": tensors}
    write_framed(path, CKPT_MAGIC, header, payload)


def read_checkpoint(path: PathLike) -> Checkpoint:
    header, data, start = read_framed(path, CKPT_MAGIC)
    try:
        backbone_cfg = BackboneConfig.model_validate(require(header, "backbone_cfg", dict, path))
    except ValidationError as e:
        raise PersistError(f"Invalid backbone_cfg: {e.errors()[0]['msg']}", path=str(path),
                           json_path="$.backbone_cfg") from e
    meta = require(header, "meta", dict, path)
    tensors = require(header, "tensors", list, path)
    n_channels = require(meta, "n_channels", int, path, "$.meta")
    t_window = require(meta, "t_window", int, path, "$.meta")
    classifier_present = require(meta, "classifier_present", bool, path, "$.meta")

    params: Dict[str, np.ndarray] = {}
    for index, entry in enumerate(tensors):
        where = f"$.tensors[{index}]"
        if not isinstance(entry, dict):
            raise PersistError("Tensor entry must be an object", path=str(path), json_path=where)
        name = require(entry, "name", str, path, where)
        shape = tuple(require(entry, "shape", list, path, where))
        offset = require(entry, "offset", int, path, where)
        if offset < 0 or offset % F32.itemsize:
            raise PersistError(f"Bad tensor offset {offset}", path=str(path), json_path=f"{where}.offset")
        if name in params:
            raise PersistError(f"Duplicate tensor {name!r}", path=str(path), json_path=where)
        count = int(np.prod(shape)) if shape else 1
        params[name] = read_f32(data, start + offset, count, path).reshape(shape)

    try:
        if classifier_present:
            n_classes = require(meta, "n_classes", int, path, "$.meta")
            return SorterModel(backbone_cfg, n_channels, t_window, n_classes, params)
        return _backbone_from(params, backbone_cfg, n_channels, t_window, path)
    except InvalidInputError as e:
        raise PersistError(str(e), path=str(path), json_path="$.tensors") from e


def _backbone_from(params: Dict[str, np.ndarray], backbone_cfg: BackboneConfig, n_channels: int,
                   t_window: int, path: PathLike) -> PretrainedBackbone:
    shapes = backbone_shapes(backbone_cfg, n_channels)
    if set(shapes) != set(params):
        raise PersistError(f"Backbone tensors {sorted(params)} do not match {sorted(shapes)}",
                           path=str(path), json_path="$.tensors")
    for name, shape in shapes.items():
        if params[name].shape != shape:
            raise ShapeMismatchError(f"tensor {name}", shape, params[name].shape)
    return PretrainedBackbone(params=params, backbone_cfg=backbone_cfg, n_channels=n_channels, t_window=t_window)


def load_model(path: PathLike) -> SorterModel:
    item = read_checkpoint(path)
    if not isinstance(item, SorterModel):
        raise PersistError("Checkpoint holds a backbone only; a full model is required", path=str(path),
                           json_path="$.meta.classifier_present")
    return item


def load_backbone(path: PathLike) -> PretrainedBackbone:
    """Backbone of a backbone-only or full checkpoint."""
    item = read_checkpoint(path)
    if isinstance(item, SorterModel):
        return PretrainedBackbone(params=item.backbone_params(), backbone_cfg=item.backbone_cfg,
                                  n_channels=item.n_channels, t_window=item.t_window)
    return item
