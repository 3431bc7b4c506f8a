"""Readers and writers for every on-disk format."""

from .checkpoint_io import CKPT_MAGIC, load_backbone, load_model, read_checkpoint, write_checkpoint
from .framing import FORMAT_VERSION
from .recording_io import REC_MAGIC, read_ground_truth, read_recording, write_ground_truth, write_recording
from .run_config_io import (
    RunSidecar,
    load_run_config,
    read_sidecar,
    save_run_config,
    sidecar_path,
    with_overrides,
    write_sidecar,
)
from .spikes_io import read_spikes, write_spikes
from .windows_io import WDS_MAGIC, read_windows, write_windows

__all__ = [
    "CKPT_MAGIC",
    "FORMAT_VERSION",
    "REC_MAGIC",
    "WDS_MAGIC",
    "RunSidecar",
    "load_backbone",
    "load_model",
    "load_run_config",
    "read_checkpoint",
    "read_ground_truth",
    "read_recording",
    "read_sidecar",
    "read_spikes",
    "read_windows",
    "save_run_config",
    "sidecar_path",
    "with_overrides",
    "write_checkpoint",
    "write_ground_truth",
    "write_recording",
    "write_sidecar",
    "write_spikes",
    "write_windows",
]
