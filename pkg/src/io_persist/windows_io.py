"""".wds" window dataset dumps (debugging aid)."""

import numpy as np
from pydantic import ValidationError

from ..dataset.windows import WindowDataset
from ..util.errors import InvalidInputError, PersistError
from ..util.schema import WindowSpec
from .framing import PathLike, f32_bytes, read_f32, read_framed, require, write_framed

WDS_MAGIC = b"FAFEWDS1"


def write_windows(path: PathLike, ds: WindowDataset) -> None:
    """Manifest plus every window's (channels, t_window) block in manifest order."""
    header = {
        "spec": ds.spec.model_dump(),
        "n_classes": ds.n_classes,
        "n_channels": ds.n_channels,
        "counts": ds.counts(),
        "labels": ds.labels.tolist(),
        "centers": ds.centers.tolist(),
        "spike_ids": ds.spike_ids.tolist(),
    }
    payload = f32_bytes(ds.batch(np.arange(len(ds)))) if len(ds) else b""
    write_framed(path, WDS_MAGIC, header, payload)


def read_windows(path: PathLike) -> WindowDataset:
    header, data, offset = read_framed(path, WDS_MAGIC)
    try:
        spec = WindowSpec.model_validate(require(header, "spec", dict, path))
    except ValidationError as e:
        raise PersistError(f"Invalid spec: {e.errors()[0]['msg']}", path=str(path), json_path="$.spec") from e
    n_classes = require(header, "n_classes", int, path)
    n_channels = require(header, "n_channels", int, path)
    labels = np.asarray(require(header, "labels", list, path), dtype=np.int64)
    centers = np.asarray(require(header, "centers", list, path), dtype=np.int64)
    spike_ids = np.asarray(require(header, "spike_ids", list, path), dtype=np.int64)
    windows = read_f32(data, offset, labels.size * n_channels * spec.t_window, path)
    try:
        return WindowDataset(
            centers=centers,
            labels=labels,
            spike_ids=spike_ids,
            n_classes=n_classes,
            spec=spec,
            materialized=windows.reshape(labels.size, n_channels, spec.t_window),
        )
    except InvalidInputError as e:
        raise PersistError(str(e), path=str(path), json_path="$.labels") from e
