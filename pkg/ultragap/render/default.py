import io
from typing import Any, List, Tuple, Optional, Sequence

from rich import box
from rich.table import Table
from rich.markup import escape
from rich.console import Console

import ultragap.logging_
from ultragap.utils import format_decimal
from ultragap.render import Verbosity
from ultragap.results import (
    GapDocument,
    CurveDocument,
    OracleDocument,
    VerifyDocument,
    FailureDocument,
    AsymptoteDocument,
    ValidationDocument,
    CoefficientsDocument,
    ClassificationDocument,
)

logger = ultragap.logging_.getLogger(__name__)


def heading_style(s: str):
    colored_string = "[cyan]" + escape(s) + "[/cyan]"
    return colored_string


def verdict_style(ok: bool, s: str):
    color = "green" if ok else "red"
    return f"[{color}]" + escape(s) + f"[/{color}]"


def get_color(color):
    if color == "always":
        color_system = "256"
    elif color == "auto":
        color_system = "windows"
    elif color == "never":
        color_system = None
    else:
        raise RuntimeError("unexpected --color value: " + color)

    return color_system


def _value(x: Any) -> str:
    if x is None:
        return "-"
    if isinstance(x, float):
        return format_decimal(x)
    return str(x)


def _weights(labels: Sequence[str], witness: Optional[Sequence[Any]]) -> str:
    if not witness:
        return "-"
    return " ".join(f"{label}={_value(w)}" for label, w in zip(labels, witness) if w not in (0, "0"))


def render_key_values(rows: List[Tuple[str, str]], console: Console):
    table = Table(box=box.ASCII2, show_header=False)
    for key, value in rows:
        table.add_row(key, value)
    console.print(table)


def render_heading(heading: str, console: Console, verbose: Verbosity):
    """
    example::

        +--------------------------+
        | GAP AT p = 1             |
        +--------------------------+
    """
    table = Table(box=box.ASCII2, show_header=False)
    table.add_row(heading_style(heading) if verbose > Verbosity.DEFAULT else escape(heading))
    console.print(table)


def render_validation(doc: ValidationDocument, console: Console, verbose: Verbosity):
    kind = doc.kind if doc.kind is not None else "not a metric"
    render_heading("VALIDATION", console, verbose)
    render_key_values([("kind", verdict_style(doc.kind == "ultrametric", kind))], console)

    if doc.structural_errors:
        table = Table(title="structural errors", box=box.ASCII2, show_header=True)
        table.add_column("reason")
        table.add_column("entries")
        for e in doc.structural_errors:
            shown = e.indices if verbose > Verbosity.DEFAULT else e.indices[:10]
            entries = ", ".join("(" + ", ".join(map(str, ix)) + ")" for ix in shown)
            if len(shown) < len(e.indices):
                entries += f" and {len(e.indices) - len(shown)} more"
            table.add_row(escape(e.reason), escape(entries))
        console.print(table)

    for title, violations in (
        ("triangle inequality violations", doc.triangle_violations),
        ("strong triangle inequality violations", doc.ultrametric_violations),
    ):
        if not violations:
            continue
        table = Table(title=title, box=box.ASCII2, show_header=True)
        for column in ("i", "j", "via k", "d(i, j)", "bound"):
            table.add_column(column)
        shown = violations if verbose > Verbosity.DEFAULT else violations[:10]
        for v in shown:
            table.add_row(escape(v.i), escape(v.j), escape(v.k), _value(v.lhs), _value(v.rhs))
        console.print(table)
        if len(shown) < len(violations):
            console.print(f"{len(violations) - len(shown)} more, use -v to list all")


def render_gap(doc: GapDocument, labels: Sequence[str], console: Console, verbose: Verbosity):
    render_heading(f"GAP AT p = {doc.p:g}", console, verbose)
    rows = [("gap", _value(doc.value)), ("witness", escape(_weights(labels, doc.witness)))]
    if verbose > Verbosity.DEFAULT:
        rows.append(("sign partitions", str(doc.partitions_explored)))
    render_key_values(rows, console)


def render_oracle(doc: OracleDocument, labels: Sequence[str], console: Console, verbose: Verbosity):
    render_heading(f"RANDOMIZED UPPER BOUND AT p = {doc.p:g}", console, verbose)
    render_key_values(
        [
            ("upper bound", _value(doc.value)),
            ("witness", escape(_weights(labels, doc.witness))),
            ("trials", str(doc.trials)),
            ("seed", str(doc.seed)),
        ],
        console,
    )


def render_curve(doc: CurveDocument, console: Console, verbose: Verbosity):
    render_heading("GAP CURVE", console, verbose)
    table = Table(box=box.ASCII2, show_header=True)
    for column in ("p", "gap", "gap / alpha_1^p", "residual to the asymptote"):
        table.add_column(column, justify="right")
    for point in doc.points:
        table.add_row(
            _value(point.p),
            _value(point.gamma),
            _value(point.gamma_over_alpha1_p),
            _value(point.residual_to_infinity),
        )
    if doc.gamma_infinity is not None:
        table.add_row("inf", "", escape(doc.gamma_infinity), "")
    console.print(table)


def render_asymptote(doc: AsymptoteDocument, labels: Sequence[str], console: Console, verbose: Verbosity):
    render_heading("ASYMPTOTIC GAP", console, verbose)
    rows = [
        ("limit", f"{doc.gamma_infinity} ({_value(doc.decimal)})"),
        ("coterie sizes", ", ".join(str(s) for s in doc.coterie_sizes)),
    ]
    if verbose > Verbosity.DEFAULT:
        rows.append(("flat witness", escape(_weights(labels, doc.witness))))
    render_key_values(rows, console)


def render_classification(doc: ClassificationDocument, console: Console, verbose: Verbosity):
    render_heading("CONSTANCY", console, verbose)
    render_key_values(
        [
            ("class", verdict_style(doc.kind != "non-constant", doc.kind)),
            ("gap at p = 0", doc.gamma_zero),
            ("asymptotic gap", doc.gamma_infinity),
            ("coterie sizes", ", ".join(str(s) for s in doc.coterie_sizes)),
            ("points in coteries", str(doc.covered)),
            ("points outside coteries", escape(", ".join(doc.uncovered)) or "-"),
        ],
        console,
    )


def render_verify(doc: VerifyDocument, labels: Sequence[str], console: Console, verbose: Verbosity):
    render_heading(f"ENHANCED INEQUALITY AT p = {doc.p:g}", console, verbose)
    rows = [
        ("verdict", verdict_style(doc.holds, "holds" if doc.holds else "fails")),
        ("G * alpha^p", _value(doc.threshold)),
        ("gap", _value(doc.gap)),
    ]
    if doc.witness is not None:
        rows.append(("violating simplex", escape(_weights(labels, doc.witness))))
    if verbose > Verbosity.DEFAULT:
        rows.extend(
            [
                ("alpha", _value(doc.alpha)),
                ("samples", f"{doc.samples} (seed {doc.seed})"),
                ("largest sampled left-hand side", _value(doc.max_sampled_lhs)),
            ]
        )
    render_key_values(rows, console)


def render_coefficients(doc: CoefficientsDocument, console: Console, verbose: Verbosity):
    render_heading("LEVEL COEFFICIENTS", console, verbose)
    table = Table(box=box.ASCII2, show_header=True)
    for column in ("k", "alpha_k", "c_k", "c_k + ... + c_l"):
        table.add_column(column, justify="right")
    for c in doc.coefficients:
        table.add_row(str(c.k), _value(c.height), _value(c.c), _value(c.tail))
    console.print(table)

    rows = [
        ("flat", verdict_style(doc.flat, "yes" if doc.flat else "no")),
        ("gap as p grows", doc.trend),
    ]
    if doc.certificate:
        rows.append(("reason", escape(doc.certificate)))
    render_key_values(rows, console)


def render_failure(doc: FailureDocument, labels: Sequence[str], console: Console, verbose: Verbosity):
    render_heading(doc.error, console, verbose)
    rows = [("message", escape(doc.message))]
    if doc.value is not None:
        rows.append(("gap of witness", _value(doc.value)))
    if doc.witness is not None:
        rows.append(("witness", escape(_weights(labels, doc.witness))))
    render_key_values(rows, console)


def render(document, labels: Sequence[str] = (), verbose: Verbosity = Verbosity.DEFAULT, color: str = "auto") -> str:
    console = Console(file=io.StringIO(), color_system=get_color(color), highlight=False, soft_wrap=True)

    if isinstance(document, ValidationDocument):
        render_validation(document, console, verbose)
    elif isinstance(document, GapDocument):
        render_gap(document, labels, console, verbose)
    elif isinstance(document, OracleDocument):
        render_oracle(document, labels, console, verbose)
    elif isinstance(document, CurveDocument):
        render_curve(document, console, verbose)
    elif isinstance(document, AsymptoteDocument):
        render_asymptote(document, labels, console, verbose)
    elif isinstance(document, ClassificationDocument):
        render_classification(document, console, verbose)
    elif isinstance(document, VerifyDocument):
        render_verify(document, labels, console, verbose)
    elif isinstance(document, CoefficientsDocument):
        render_coefficients(document, console, verbose)
    elif isinstance(document, FailureDocument):
        render_failure(document, labels, console, verbose)
    else:
        raise ValueError(f"no text rendering for {type(document).__name__}")

    console.file.seek(0)
    return console.file.read()
