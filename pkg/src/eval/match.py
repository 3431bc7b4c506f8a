"""Greedy one-to-one matching of sorted spikes against ground truth."""

from typing import List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..core.recording import GroundTruth
from ..postproc.filters import SortedOutput
from ..util.errors import InvalidInputError
from ..util.schema import MatchConfig


def ratio(numerator: int, denominator: int) -> float:
    """numerator / denominator, or 1.0 when both are zero."""
    return numerator / denominator if denominator > 0 else 1.0


class NeuronReport(BaseModel):
    """Matching counts of one neuron."""
    model_config = ConfigDict(frozen=True)

    neuron_id: int
    tp: int = Field(..., ge=0)
    fp: int = Field(..., ge=0)
    fn: int = Field(..., ge=0)
    accuracy: float
    precision: float
    recall: float

    @classmethod
    def from_counts(cls, neuron_id: int, tp: int, fp: int, fn: int) -> "NeuronReport":
        return cls(neuron_id=neuron_id, tp=tp, fp=fp, fn=fn,
                   accuracy=ratio(tp, tp + fp + fn), precision=ratio(tp, tp + fp), recall=ratio(tp, tp + fn))


class EvalReport(BaseModel):
    """Aggregate and per-neuron accuracy = tp / (tp + fp + fn)."""
    model_config = ConfigDict(frozen=True)

    tp: int = Field(..., ge=0)
    fp: int = Field(..., ge=0)
    fn: int = Field(..., ge=0)
    accuracy: float
    precision: float
    recall: float
    tolerance_samples: int
    per_neuron: List[NeuronReport] = Field(default_factory=list)

    @classmethod
    def from_neurons(cls, per_neuron: List[NeuronReport], tolerance_samples: int) -> "EvalReport":
        tp = sum(n.tp for n in per_neuron)
        fp = sum(n.fp for n in per_neuron)
        fn = sum(n.fn for n in per_neuron)
        return cls(tp=tp, fp=fp, fn=fn,
                   accuracy=ratio(tp, tp + fp + fn), precision=ratio(tp, tp + fp), recall=ratio(tp, tp + fn),
                   tolerance_samples=tolerance_samples, per_neuron=per_neuron)


def match_train(detected: np.ndarray, truth: np.ndarray, tolerance: int) -> Tuple[int, int, int]:
    """(tp, fp, fn) of one neuron.

    Detections are visited in time order and each takes the nearest unmatched
    true spike within ``tolerance``; equal distances go to the earlier one.
    """
    detected = np.sort(np.asarray(detected, dtype=np.int64))
    truth = np.sort(np.asarray(truth, dtype=np.int64))
    taken = np.zeros(truth.size, dtype=bool)
    tp = 0
    for d in detected.tolist():
        lo = int(np.searchsorted(truth, d - tolerance, side='left'))
        hi = int(np.searchsorted(truth, d + tolerance, side='right'))
        best = -1
        best_distance = None
        for j in range(lo, hi):
            if taken[j]:
                continue
            distance = abs(int(truth[j]) - d)
            if best_distance is None or distance < best_distance:
                best, best_distance = j, distance
        if best >= 0:
            taken[best] = True
            tp += 1
    return tp, int(detected.size) - tp, int(truth.size) - tp


def match(sorted_output: SortedOutput, gt: GroundTruth, cfg: MatchConfig) -> EvalReport:
    """Per-neuron greedy matching aggregated into an EvalReport."""
    if sorted_output.n_neurons != gt.n_neurons:
        raise InvalidInputError(
            f"Sorted output has {sorted_output.n_neurons} neurons but ground truth has {gt.n_neurons}"
        )
    per_neuron = []
    for neuron in range(gt.n_neurons):
        tp, fp, fn = match_train(sorted_output.for_neuron(neuron), gt.for_neuron(neuron), cfg.tolerance_samples)
        per_neuron.append(NeuronReport.from_counts(neuron, tp, fp, fn))
    return EvalReport.from_neurons(per_neuron, cfg.tolerance_samples)
