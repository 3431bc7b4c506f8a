"""".rec" recordings and ".gt.json" ground truth."""

import numpy as np
from pydantic import ValidationError

from ..core.probe import ProbeGeometry
from ..core.recording import GroundTruth, Recording
from ..util.errors import InvalidInputError, PersistError
from .framing import PathLike, f32_bytes, read_f32, read_framed, read_json, require, write_framed, write_json

REC_MAGIC = b"FAFEREC1"


def write_recording(path: PathLike, rec: Recording) -> None:
    header = {
        "sample_rate_hz": rec.sample_rate_hz,
        "n_channels": rec.n_channels,
        "n_samples": rec.n_samples,
        "geometry": [list(p) for p in rec.geometry.channel_positions],
        "pitch_um": rec.geometry.pitch_um,
        "probe_name": rec.geometry.name,
        "name": rec.name,
    }
    # Sample-major frames: all channels of sample 0, then sample 1, ...
    write_framed(path, REC_MAGIC, header, f32_bytes(rec.samples.T))


def read_recording(path: PathLike) -> Recording:
    header, data, offset = read_framed(path, REC_MAGIC)
    n_channels = require(header, "n_channels", int, path)
    n_samples = require(header, "n_samples", int, path)
    sample_rate = require(header, "sample_rate_hz", (int, float), path)
    positions = require(header, "geometry", list, path)
    try:
        geometry = ProbeGeometry(
            channel_positions=positions,
            pitch_um=header.get("pitch_um", 1.0),
            name=header.get("probe_name", ""),
        )
    except ValidationError as e:
        raise PersistError(f"Invalid probe geometry: {e.errors()[0]['msg']}", path=str(path), json_path="$.geometry") from e
    if geometry.n_channels != n_channels:
        raise PersistError(
            f"Geometry lists {geometry.n_channels} channels, header says {n_channels}",
            path=str(path), json_path="$.geometry",
        )
    frames = read_f32(data, offset, n_channels * n_samples, path).reshape(n_samples, n_channels)
    try:
        return Recording(samples=frames.T.copy(), sample_rate_hz=sample_rate, geometry=geometry,
                         name=header.get("name", ""))
    except InvalidInputError as e:
        raise PersistError(str(e), path=str(path), offset=offset) from e


def write_ground_truth(path: PathLike, gt: GroundTruth) -> None:
    doc = {
        "n_neurons": gt.n_neurons,
        "spikes": [[int(i), int(s)] for i, s in zip(gt.neuron_ids, gt.sample_indices)],
    }
    if gt.n_samples >= 0:
        doc["n_samples"] = gt.n_samples
    write_json(path, doc)


def read_ground_truth(path: PathLike) -> GroundTruth:
    doc = read_json(path)
    n_neurons = require(doc, "n_neurons", int, path)
    spikes = require(doc, "spikes", list, path)
    for index, pair in enumerate(spikes):
        if not (isinstance(pair, list) and len(pair) == 2 and all(isinstance(v, int) for v in pair)):
            raise PersistError("Expected [neuron_id, sample_index]", path=str(path), json_path=f"$.spikes[{index}]")
    pairs = np.asarray(spikes, dtype=np.int64).reshape(-1, 2)
    try:
        return GroundTruth(pairs[:, 0], pairs[:, 1], n_neurons, doc.get("n_samples", -1))
    except InvalidInputError as e:
        raise PersistError(str(e), path=str(path), json_path="$.spikes") from e
