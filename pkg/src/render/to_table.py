"""Aligned plain-text tables for reports, curves and generality matrices."""

from typing import List, Sequence

from ..eval.curves import FewShotCurve, GeneralityMatrix
from ..eval.match import EvalReport


def format_table(headers: Sequence[str], rows: Sequence[Sequence[object]]) -> str:
    """Render rows under headers with right-aligned, space-padded columns."""
    cells = [[str(h) for h in headers]] + [[_cell(v) for v in row] for row in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(headers))]

    def line(row: List[str]) -> str:
        return "  ".join(value.rjust(width) for value, width in zip(row, widths))

    table = line(cells[0]) + "\n"
    table += "  ".join("-" * width for width in widths) + "\n"
    for row in cells[1:]:
        table += line(row) + "\n"
    return table


def _cell(value: object) -> str:
    if isinstance(value, float):
        return f"{value:.4f}"
    if value is None:
        return "-"
    return str(value)


def render_report_table(report: EvalReport) -> str:
    """Per-neuron rows followed by the aggregate."""
    rows = [[n.neuron_id, n.tp, n.fp, n.fn, n.accuracy, n.precision, n.recall] for n in report.per_neuron]
    rows.append(["all", report.tp, report.fp, report.fn, report.accuracy, report.precision, report.recall])
    table = format_table(["neuron", "tp", "fp", "fn", "accuracy", "precision", "recall"], rows)
    table += f"\ntolerance: {report.tolerance_samples} samples\n"
    return table


def render_curve_table(curves: List[FewShotCurve]) -> str:
    """One row per n_ft, one accuracy column per arm."""
    n_fts = sorted({p.n_ft for curve in curves for p in curve.points})
    rows = []
    for n_ft in n_fts:
        row: List[object] = [n_ft]
        for curve in curves:
            try:
                row.append(curve.accuracy_at(n_ft))
            except KeyError:
                row.append(None)
        rows.append(row)
    return format_table(["n_ft"] + [curve.arm for curve in curves], rows)


def render_matrix_table(matrix: GeneralityMatrix) -> str:
    """Rows are pretraining conditions, columns finetuning conditions."""
    rows = [[name] + list(values) for name, values in zip(matrix.pretrain_conditions, matrix.accuracy)]
    table = f"n_ft = {matrix.n_ft}\n"
    table += format_table(["pretrained \\ finetuned"] + matrix.finetune_conditions, rows)
    return table
