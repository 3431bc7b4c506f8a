"""Accuracy against ground truth and few-shot experiments."""

from .curves import (
    CurvePoint,
    FewShotCurve,
    GeneralityMatrix,
    annotation_reduction,
    fewshot_curve,
    fewshot_point,
    generality_matrix,
    shots_to_reach,
)
from .match import EvalReport, NeuronReport, match, match_train

__all__ = [
    "CurvePoint",
    "FewShotCurve",
    "GeneralityMatrix",
    "annotation_reduction",
    "fewshot_curve",
    "fewshot_point",
    "generality_matrix",
    "shots_to_reach",
    "EvalReport",
    "NeuronReport",
    "match",
    "match_train",
]
