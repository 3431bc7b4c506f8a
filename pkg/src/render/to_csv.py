"""CSV emission for plotting."""

import csv
import io

from ..eval.curves import FewShotCurve


def render_curve_csv(curve: FewShotCurve) -> str:
    """``n_ft,accuracy`` header plus one row per point."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["n_ft", "accuracy"])
    for point in curve.points:
        writer.writerow([point.n_ft, repr(point.accuracy)])
    return buffer.getvalue()
