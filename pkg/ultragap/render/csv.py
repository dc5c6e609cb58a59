import io
import csv
from typing import Any, List, Sequence
from fractions import Fraction

from ultragap.utils import format_decimal
from ultragap.results import CurveDocument, CoefficientsDocument

CURVE_COLUMNS = ("p", "gamma", "gamma_over_alpha1_p", "residual_to_infinity")
COEFFICIENT_COLUMNS = ("k", "alpha_k", "c_k", "tail")


def _cell(x: Any) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return format_decimal(x)
    return str(x)


def _write(header: Sequence[str], rows: List[Sequence[Any]]) -> str:
    f = io.StringIO()
    writer = csv.writer(f, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(x) for x in row])
    return f.getvalue()


def render_curve(doc: CurveDocument) -> str:
    """
    one row per exponent, then a final `inf` row carrying the asymptote for plotting
    when it is known.
    """
    rows: List[Sequence[Any]] = [
        (point.p, point.gamma, point.gamma_over_alpha1_p, point.residual_to_infinity) for point in doc.points
    ]
    if doc.gamma_infinity is not None:
        rows.append(("inf", None, float(Fraction(doc.gamma_infinity)), 0))
    return _write(CURVE_COLUMNS, rows)


def render_coefficients(doc: CoefficientsDocument) -> str:
    return _write(COEFFICIENT_COLUMNS, [(c.k, c.height, c.c, c.tail) for c in doc.coefficients])
