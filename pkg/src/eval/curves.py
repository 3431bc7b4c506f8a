"""Few-shot accuracy curves and transfer studies."""

import logging
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field

from ..core.recording import GroundTruth, Recording
from ..core.rng import Rng
from ..dataset.windows import build_dataset, subsample_few_shot
from ..nn.train import PretrainedBackbone, finetune
from ..postproc.trace import sort_recording
from ..util.errors import InvalidInputError
from ..util.hashing import derive_seed
from ..util.schema import RunConfig
from .match import EvalReport, match

logger = logging.getLogger(__name__)

Segment = Tuple[Recording, GroundTruth]

# Accuracies within half a percentage point count as comparable.
COMPARABLE_WITHIN = 0.005


class CurvePoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_ft: int = Field(..., ge=1)
    accuracy: float
    precision: float
    recall: float


class FewShotCurve(BaseModel):
    """Accuracy versus spikes per neuron for one training arm."""
    model_config = ConfigDict(frozen=True)

    arm: str
    points: List[CurvePoint] = Field(default_factory=list)

    def accuracy_at(self, n_ft: int) -> float:
        for point in self.points:
            if point.n_ft == n_ft:
                return point.accuracy
        raise KeyError(n_ft)

    def table(self) -> str:
        from ..render.to_table import render_curve_table
        return render_curve_table([self])


class GeneralityMatrix(BaseModel):
    """Accuracy for each (pretraining condition, finetuning condition) pair."""
    model_config = ConfigDict(frozen=True)

    n_ft: int
    pretrain_conditions: List[str]
    finetune_conditions: List[str]
    accuracy: List[List[float]]


def evaluate_model_on(model, test: Segment, cfg: RunConfig, threads: int = 1) -> EvalReport:
    rec, gt = test
    sorted_output = sort_recording(model, rec, cfg.postproc, threads=threads)
    return match(sorted_output, gt, cfg.eval.match_config())


def fewshot_point(pretrained: Optional[PretrainedBackbone], train: Segment, test: Segment,
                  n_ft: int, cfg: RunConfig, threads: int = 1) -> CurvePoint:
    rec_train, gt_train = train
    seed = cfg.train.seed
    full = build_dataset(rec_train, gt_train, cfg.window, Rng(derive_seed(seed, "dataset")))
    few = subsample_few_shot(full, n_ft, Rng(derive_seed(seed, f"fewshot:{n_ft}")), cfg.train.selection)
    model = finetune(pretrained, few, cfg.train.train_config(), cfg.backbone)
    report = evaluate_model_on(model, test, cfg, threads)
    logger.info(f"n_ft={n_ft}: accuracy {report.accuracy:.4f}")
    return CurvePoint(n_ft=n_ft, accuracy=report.accuracy, precision=report.precision, recall=report.recall)


def fewshot_curve(pretrained: Optional[PretrainedBackbone], train: Segment, test: Segment,
                  n_ft_list: List[int], cfg: RunConfig, threads: int = 1) -> FewShotCurve:
    """Subsample, finetune (or train from scratch), sort the test segment and evaluate, per n_ft."""
    if not n_ft_list:
        raise InvalidInputError("n_ft_list must not be empty")
    points = [fewshot_point(pretrained, train, test, n_ft, cfg, threads) for n_ft in n_ft_list]
    return FewShotCurve(arm="pretrained" if pretrained is not None else "scratch", points=points)


def shots_to_reach(curve: FewShotCurve, target: float, within: float = COMPARABLE_WITHIN) -> Optional[int]:
    """Smallest n_ft whose accuracy is within ``within`` of ``target`` or above it."""
    reached = [p.n_ft for p in curve.points if p.accuracy >= target - within]
    return min(reached) if reached else None


def annotation_reduction(scratch: FewShotCurve, pretrained: FewShotCurve,
                         target: Optional[float] = None) -> Optional[float]:
    """How many times fewer annotated spikes the pretrained arm needs to reach ``target``.

    ``target`` defaults to the scratch arm's accuracy at its largest n_ft.
    """
    if not scratch.points or not pretrained.points:
        return None
    if target is None:
        target = max(scratch.points, key=lambda p: p.n_ft).accuracy
    n_scratch = shots_to_reach(scratch, target)
    n_pretrained = shots_to_reach(pretrained, target)
    if n_scratch is None or n_pretrained is None:
        return None
    return n_scratch / n_pretrained


def generality_matrix(backbones: Dict[str, Optional[PretrainedBackbone]], finetune_sets: Dict[str, Tuple[Segment, Segment]],
                      n_ft: int, cfg: RunConfig, threads: int = 1) -> GeneralityMatrix:
    """Finetune every backbone on every condition's train segment and score its test segment."""
    rows = list(backbones)
    cols = list(finetune_sets)
    accuracy = []
    for row in rows:
        accuracy.append([
            fewshot_point(backbones[row], *finetune_sets[col], n_ft, cfg, threads).accuracy
            for col in cols
        ])
        logger.info(f"pretrained on {row}: {dict(zip(cols, accuracy[-1]))}")
    return GeneralityMatrix(n_ft=n_ft, pretrain_conditions=rows, finetune_conditions=cols, accuracy=accuracy)
