"""Tests for rendering modules."""

from src.eval.curves import CurvePoint, FewShotCurve, GeneralityMatrix
from src.eval.match import EvalReport, NeuronReport
from src.render.to_csv import render_curve_csv
from src.render.to_table import format_table, render_curve_table, render_matrix_table, render_report_table
from src.run import parse_n_ft


def make_curve(arm, pairs):
    return FewShotCurve(arm=arm, points=[CurvePoint(n_ft=n, accuracy=a, precision=a, recall=a) for n, a in pairs])


class TestFormatTable:
    """Test the aligned table layout."""

    def test_columns_aligned(self):
        table = format_table(["a", "value"], [[1, 0.5], [10, None]])
        lines = table.splitlines()
        assert lines[0] == " a   value"
        assert lines[1] == "--  ------"
        assert lines[2] == " 1  0.5000"
        assert lines[3] == "10       -"
        assert len({len(line) for line in lines}) == 1

    def test_no_rows(self):
        assert format_table(["x"], []) == "x\n-\n"


class TestReportTable:
    """Test the evaluation report table."""

    def test_rows_and_footer(self):
        neurons = [NeuronReport.from_counts(0, 3, 1, 1), NeuronReport.from_counts(1, 2, 0, 0)]
        table = render_report_table(EvalReport.from_neurons(neurons, 12))
        lines = table.splitlines()
        assert lines[0].split() == ["neuron", "tp", "fp", "fn", "accuracy", "precision", "recall"]
        assert lines[2].split() == ["0", "3", "1", "1", "0.6000", "0.7500", "0.7500"]
        assert lines[4].split()[0] == "all"
        assert "0.7143" in lines[4]
        assert table.rstrip().endswith("tolerance: 12 samples")


class TestCurveTable:
    """Test curve tables with one column per arm."""

    def test_two_arms(self):
        scratch = make_curve("scratch", [(3, 0.5), (5, 0.7)])
        pretrained = make_curve("pretrained", [(3, 0.8)])
        lines = render_curve_table([scratch, pretrained]).splitlines()
        assert lines[0].split() == ["n_ft", "scratch", "pretrained"]
        assert lines[2].split() == ["3", "0.5000", "0.8000"]
        assert lines[3].split() == ["5", "0.7000", "-"]

    def test_curve_table_method(self):
        curve = make_curve("scratch", [(1, 0.25)])
        assert curve.table() == render_curve_table([curve])


class TestMatrixTable:
    """Test the generality matrix table."""

    def test_layout(self):
        matrix = GeneralityMatrix(n_ft=15, pretrain_conditions=["10uV", "scratch"],
                                  finetune_conditions=["10uV", "20uV"],
                                  accuracy=[[0.9, 0.8], [0.6, 0.5]])
        lines = render_matrix_table(matrix).splitlines()
        assert lines[0] == "n_ft = 15"
        assert lines[1].split()[-2:] == ["10uV", "20uV"]
        assert lines[3].split() == ["10uV", "0.9000", "0.8000"]
        assert lines[4].split() == ["scratch", "0.6000", "0.5000"]


class TestCurveCsv:
    """Test CSV emission."""

    def test_header_and_rows(self):
        csv_text = render_curve_csv(make_curve("scratch", [(3, 0.5), (4, 0.1)]))
        assert csv_text == "n_ft,accuracy\n3,0.5\n4,0.1\n"

    def test_full_range_row_count(self):
        n_fts = parse_n_ft("3..37")
        csv_text = render_curve_csv(make_curve("pretrained", [(n, 0.5) for n in n_fts]))
        lines = csv_text.splitlines()
        assert len(lines) == 36
        assert lines[1].startswith("3,") and lines[-1].startswith("37,")
