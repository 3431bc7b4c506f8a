"""Tests for spike matching, accuracy reports and few-shot curves."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.core.recording import GroundTruth
from src.dataset.split import split_train_test
from src.eval.curves import (
    CurvePoint,
    FewShotCurve,
    annotation_reduction,
    fewshot_curve,
    shots_to_reach,
)
from src.eval.match import EvalReport, NeuronReport, match, match_train, ratio
from src.postproc.filters import SortedOutput
from src.util.errors import InvalidInputError
from src.util.schema import MatchConfig


def detections(pairs, n_neurons):
    """SortedOutput with unit scores from (neuron, sample) pairs."""
    ids = [n for n, _ in pairs]
    samples = [s for _, s in pairs]
    return SortedOutput(ids, samples, np.ones(len(pairs)), n_neurons)


def curve(arm, accuracies):
    """Curve with points at n_ft = 1, 2, ... holding the given accuracies."""
    points = [CurvePoint(n_ft=i + 1, accuracy=a, precision=a, recall=a) for i, a in enumerate(accuracies)]
    return FewShotCurve(arm=arm, points=points)


class TestMatchTrain:
    """Test greedy matching of one neuron."""

    def test_perfect_match(self):
        assert match_train(np.array([10, 50, 90]), np.array([10, 50, 90]), 3) == (3, 0, 0)

    def test_three_of_four(self):
        tp, fp, fn = match_train(np.array([100, 200, 300, 1000]), np.array([100, 200, 300, 400]), 12)
        assert (tp, fp, fn) == (3, 1, 1)
        assert ratio(tp, tp + fp + fn) == pytest.approx(0.6)

    def test_two_detections_one_spike(self):
        assert match_train(np.array([100, 104]), np.array([102]), 5) == (1, 1, 0)

    def test_equal_distance_takes_earlier(self):
        """105 is 5 from both 100 and 110; taking 100 leaves 110 for 118."""
        assert match_train(np.array([105, 118]), np.array([100, 110]), 8) == (2, 0, 0)

    def test_outside_tolerance(self):
        assert match_train(np.array([113]), np.array([100]), 12) == (0, 1, 1)
        assert match_train(np.array([112]), np.array([100]), 12) == (1, 0, 0)

    def test_empty_trains(self):
        assert match_train(np.array([]), np.array([]), 12) == (0, 0, 0)
        assert ratio(0, 0) == 1.0

    @given(st.data())
    @settings(max_examples=200, deadline=None)
    def test_matches_coverage_oracle(self, data):
        """With true spikes more than 2*tol apart, tp is the number of covered true spikes."""
        tol = data.draw(st.integers(0, 6))
        gaps = data.draw(st.lists(st.integers(2 * tol + 1, 40), min_size=0, max_size=8))
        truth = np.cumsum([50] + gaps)[:len(gaps)] if gaps else np.array([], dtype=np.int64)
        det = np.array(data.draw(st.lists(st.integers(0, 400), max_size=8)), dtype=np.int64)
        covered = sum(1 for t in truth.tolist() if np.any(np.abs(det - t) <= tol))
        tp, fp, fn = match_train(det, truth, tol)
        assert tp == covered
        assert tp + fp == det.size
        assert tp + fn == truth.size

    @given(st.data())
    @settings(max_examples=200, deadline=None)
    def test_equals_exhaustive_assignment(self, data):
        """Greedy tp equals the best one-to-one assignment on well-separated trains."""
        tol = data.draw(st.integers(0, 6))
        gaps = data.draw(st.lists(st.integers(2 * tol + 1, 30), min_size=1, max_size=8))
        truth = np.cumsum([20] + gaps[:-1])
        det = np.array(sorted(data.draw(st.lists(st.integers(0, 300), max_size=8))), dtype=np.int64)
        tp, _, _ = match_train(det, truth, tol)
        assert tp == best_assignment(det.tolist(), truth.tolist(), tol)


def best_assignment(det, truth, tol):
    """Maximum number of (detection, true spike) pairs within tol, by exhaustive search."""
    if not det:
        return 0
    first, rest = det[0], det[1:]
    best = best_assignment(rest, truth, tol)
    for i, t in enumerate(truth):
        if abs(first - t) <= tol:
            best = max(best, 1 + best_assignment(rest, truth[:i] + truth[i + 1:], tol))
    return best


class TestMatch:
    """Test the report over all neurons."""

    def test_per_neuron_and_total(self):
        gt = GroundTruth.from_pairs([(0, 100), (0, 300), (1, 200)], n_neurons=2, n_samples=1000)
        out = detections([(0, 102), (1, 500), (0, 301)], 2)
        report = match(out, gt, MatchConfig(tolerance_samples=12))
        assert (report.tp, report.fp, report.fn) == (2, 1, 1)
        assert report.accuracy == pytest.approx(0.5)
        assert report.per_neuron[0].accuracy == 1.0
        assert report.per_neuron[1].accuracy == 0.0
        assert report.tolerance_samples == 12

    def test_wrong_neuron_is_fp_and_fn(self):
        gt = GroundTruth.from_pairs([(0, 100)], n_neurons=2, n_samples=1000)
        report = match(detections([(1, 100)], 2), gt, MatchConfig())
        assert (report.tp, report.fp, report.fn) == (0, 1, 1)

    def test_all_empty_is_perfect(self):
        gt = GroundTruth.from_pairs([], n_neurons=2, n_samples=1000)
        report = match(detections([], 2), gt, MatchConfig())
        assert report.accuracy == 1.0
        assert report.precision == 1.0 and report.recall == 1.0

    def test_neuron_count_mismatch(self):
        gt = GroundTruth.from_pairs([(0, 100)], n_neurons=2, n_samples=1000)
        with pytest.raises(InvalidInputError):
            match(detections([(0, 100)], 3), gt, MatchConfig())

    def test_accuracy_bounds(self):
        rng = np.random.default_rng(4)
        gt = GroundTruth.from_pairs([(int(n), int(s)) for n, s in zip(rng.integers(0, 3, 40), rng.integers(0, 5000, 40))],
                                    n_neurons=3, n_samples=5000)
        out = detections([(int(n), int(s)) for n, s in zip(rng.integers(0, 3, 30), rng.integers(0, 5000, 30))], 3)
        report = match(out, gt, MatchConfig())
        assert 0.0 <= report.accuracy <= min(report.precision, report.recall) <= 1.0
        assert report.tp + report.fp == len(out)
        assert report.tp + report.fn == len(gt)

    def test_report_from_counts(self):
        neuron = NeuronReport.from_counts(0, tp=6, fp=2, fn=2)
        assert neuron.accuracy == pytest.approx(0.6)
        assert neuron.precision == pytest.approx(0.75)
        report = EvalReport.from_neurons([neuron, NeuronReport.from_counts(1, 0, 0, 0)], 12)
        assert report.accuracy == pytest.approx(0.6)


class TestCurveSummaries:
    """Test the summaries drawn from accuracy curves."""

    def test_accuracy_at(self):
        c = curve("scratch", [0.5, 0.6])
        assert c.accuracy_at(2) == 0.6
        with pytest.raises(KeyError):
            c.accuracy_at(3)

    def test_shots_to_reach(self):
        c = curve("scratch", [0.5, 0.7, 0.8, 0.9])
        assert shots_to_reach(c, 0.8) == 3
        assert shots_to_reach(c, 0.903) == 4
        assert shots_to_reach(c, 0.95) is None

    def test_annotation_reduction(self):
        scratch = curve("scratch", [0.3, 0.4, 0.5, 0.6, 0.7, 0.8])
        pretrained = curve("pretrained", [0.7, 0.8, 0.85, 0.85, 0.86, 0.86])
        assert annotation_reduction(scratch, pretrained) == pytest.approx(3.0)
        assert annotation_reduction(scratch, pretrained, target=0.7) == pytest.approx(5.0)
        assert annotation_reduction(scratch, pretrained, target=0.99) is None

    def test_annotation_reduction_empty(self):
        assert annotation_reduction(curve("scratch", []), curve("pretrained", [0.5])) is None


class TestFewShotCurve:
    """Run a tiny from-scratch curve end to end."""

    @pytest.fixture
    def segments(self, tiny_recording):
        rec, gt = tiny_recording
        return split_train_test(rec, gt, 1.5)

    def test_single_point_deterministic(self, segments, tiny_run_config):
        train, test = segments
        first = fewshot_curve(None, train, test, [2], tiny_run_config)
        second = fewshot_curve(None, train, test, [2], tiny_run_config)
        assert first.arm == "scratch"
        assert [p.n_ft for p in first.points] == [2]
        assert 0.0 <= first.points[0].accuracy <= 1.0
        assert first == second

    def test_empty_list_rejected(self, segments, tiny_run_config):
        train, test = segments
        with pytest.raises(InvalidInputError):
            fewshot_curve(None, train, test, [], tiny_run_config)
