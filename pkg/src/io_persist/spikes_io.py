"""".spikes.json" sorted output."""

import numpy as np

from ..postproc.filters import SortedOutput
from ..util.errors import InvalidInputError, PersistError
from .framing import PathLike, read_json, require, write_json


def write_spikes(path: PathLike, sorted_output: SortedOutput) -> None:
    doc = {
        "n_neurons": sorted_output.n_neurons,
        "spikes": [[int(i), int(s), float(score)] for i, s, score in sorted_output.spikes],
    }
    write_json(path, doc)


def read_spikes(path: PathLike) -> SortedOutput:
    doc = read_json(path)
    n_neurons = require(doc, "n_neurons", int, path)
    spikes = require(doc, "spikes", list, path)
    ids, samples, scores = [], [], []
    for index, entry in enumerate(spikes):
        valid = (isinstance(entry, list) and len(entry) == 3
                 and isinstance(entry[0], int) and isinstance(entry[1], int)
                 and isinstance(entry[2], (int, float)))
        if not valid:
            raise PersistError("Expected [neuron_id, sample_index, score]", path=str(path),
                               json_path=f"$.spikes[{index}]")
        ids.append(entry[0])
        samples.append(entry[1])
        scores.append(entry[2])
    try:
        return SortedOutput(np.asarray(ids, dtype=np.int64), np.asarray(samples, dtype=np.int64),
                            np.asarray(scores, dtype=np.float64), n_neurons)
    except InvalidInputError as e:
        raise PersistError(str(e), path=str(path), json_path="$.spikes") from e
