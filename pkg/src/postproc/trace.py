"""Stride-1 inference over a recording and the full sorting pipeline."""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Tuple

import numpy as np

from ..core.recording import Recording
from ..nn.layers import softmax
from ..nn.model import SorterModel
from ..nn.sliding import window_logits
from ..util.errors import ShapeMismatchError
from ..util.schema import PostprocConfig
from .filters import ProbTrace, SortedOutput, postprocess

logger = logging.getLogger(__name__)

DEFAULT_BATCH_SIZE = 4096
# Windows are evaluated in tiles of this many consecutive centers, starting at
# the first full window.
INFER_TILE = 1024


def _chunks(start: int, stop: int, size: int) -> List[Tuple[int, int]]:
    return [(a, min(a + size, stop)) for a in range(start, stop, size)]


def infer_trace(model: SorterModel, rec: Recording, batch_size: int = DEFAULT_BATCH_SIZE,
                threads: int = 1) -> ProbTrace:
    """Class probabilities of the window centered at every sample.

    Samples without a full window get the uniform distribution. The tile
    grid is fixed by the recording alone; ``batch_size`` only sets how many
    windows one task covers and ``threads`` how many tasks run at once, so
    neither changes a single bit of the result.
    """
    if rec.n_channels != model.n_channels:
        raise ShapeMismatchError("recording channels", model.n_channels, rec.n_channels)
    half = model.t_window // 2
    n = rec.n_samples
    probs = np.full((n, model.n_classes), 1.0 / model.n_classes)
    first, last = half, n - half - 1
    if last < first:
        logger.warning(f"Recording of {n} samples is shorter than one window; trace is uniform")
        return ProbTrace(probs=probs, valid_start=first, valid_stop=last)

    samples = np.asarray(rec.samples, dtype=model.dtype)
    tiles = _chunks(first, last + 1, INFER_TILE)
    per_task = max(1, -(-int(batch_size) // INFER_TILE))
    tasks = [tiles[i:i + per_task] for i in range(0, len(tiles), per_task)]

    def run(task: List[Tuple[int, int]]) -> None:
        for a, b in task:
            logits = window_logits(model, samples[:, a - half:b + half])
            probs[a:b] = softmax(logits.astype(np.float64))

    if threads > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run, tasks))
    else:
        for task in tasks:
            run(task)
    return ProbTrace(probs=probs, valid_start=first, valid_stop=last)


def sort_recording(model: SorterModel, rec: Recording, cfg: PostprocConfig,
                   batch_size: int = DEFAULT_BATCH_SIZE, threads: int = 1,
                   inference_dtype: Optional[type] = np.float32) -> SortedOutput:
    """infer_trace, triangle_filter and finalize in one call."""
    if inference_dtype is not None and model.dtype != inference_dtype:
        model = model.astype(inference_dtype)
    trace = infer_trace(model, rec, batch_size=batch_size, threads=threads)
    sorted_output = postprocess(trace, cfg)
    logger.info(f"Sorted {rec.n_samples} samples: {len(sorted_output)} spikes")
    return sorted_output
