import json
import dataclasses
from typing import List, Optional, Sequence
from fractions import Fraction

import numpy as np

import ultragap.asymptote
from ultragap.utils import Number, round_sig, to_scalar, format_exact
from ultragap.solver import GapCurve, GapResult, NegativeTypeError
from ultragap.verify import EnhancedVerdict
from ultragap.metric import Violation, ValidationReport, MetricStructureError
from ultragap.oracle import OracleResult
from ultragap.simplex import Simplex, LevelCoefficients, FlatnessCertificate, Trend
from ultragap.results import (
    GapDocument,
    CurveDocument,
    OracleDocument,
    VerifyDocument,
    FailureDocument,
    ViolationDocument,
    AsymptoteDocument,
    CurvePointDocument,
    ValidationDocument,
    CoefficientDocument,
    CoefficientsDocument,
    ClassificationDocument,
    StructuralErrorDocument,
)
from ultragap.dendrogram import DendroTree


class UltragapJSONEncoder(json.JSONEncoder):
    """
    serializes ultragap data structures into JSON.
    specifically:
      - dataclasses into their dict representation
      - fractions to exact "a/b" strings
      - numpy scalars to plain numbers
    """

    def default(self, o):
        if dataclasses.is_dataclass(o):
            return dataclasses.asdict(o)
        if isinstance(o, Fraction):
            return format_exact(o)
        if isinstance(o, np.generic):
            return o.item()
        return super().default(o)


def render(doc) -> str:
    return json.dumps(
        doc,
        cls=UltragapJSONEncoder,
        sort_keys=True,
    )


def decimals(values: Sequence[Number]) -> List[float]:
    return [round_sig(x) for x in values]


def scalar(x: Number):
    """exact values as ints or "a/b", floats rounded for output"""
    s = to_scalar(x)
    return round_sig(s) if isinstance(s, float) else s


def violation_document(v: Violation, labels: Sequence[str]) -> ViolationDocument:
    return ViolationDocument(
        i=labels[v.i], j=labels[v.j], k=labels[v.k], lhs=round_sig(v.lhs), rhs=round_sig(v.rhs)
    )


def validation_document(report: ValidationReport, labels: Sequence[str]) -> ValidationDocument:
    return ValidationDocument(
        kind=report.kind.value if report.kind is not None else None,
        ultrametric_violations=[violation_document(v, labels) for v in report.ultrametric_violations],
        triangle_violations=[violation_document(v, labels) for v in report.triangle_violations],
    )


def structural_error_document(e: MetricStructureError) -> ValidationDocument:
    return ValidationDocument(
        kind=None,
        structural_errors=[StructuralErrorDocument(reason=e.reason, indices=[list(ix) for ix in e.indices])],
    )


def gap_document(result: GapResult) -> GapDocument:
    return GapDocument(
        p=result.p,
        value=round_sig(result.value),
        witness=decimals(result.witness.omega),
        partitions_explored=result.partitions_explored,
    )


def oracle_document(result: OracleResult) -> OracleDocument:
    return OracleDocument(
        p=result.p,
        value=round_sig(result.value),
        witness=decimals(result.witness.omega),
        trials=result.trials,
        seed=result.seed,
    )


def curve_document(curve: GapCurve) -> CurveDocument:
    points = []
    for point in curve.points:
        residual = curve.residual(point)
        points.append(
            CurvePointDocument(
                p=point.p,
                gamma=round_sig(point.value),
                gamma_over_alpha1_p=round_sig(point.normalized_value),
                residual_to_infinity=round_sig(residual) if residual is not None else None,
            )
        )
    final = curve.final_residual
    return CurveDocument(
        points=points,
        gamma_infinity=format_exact(curve.gamma_infinity) if curve.gamma_infinity is not None else None,
        final_residual=round_sig(final) if final is not None else None,
    )


def asymptote_document(t: DendroTree) -> AsymptoteDocument:
    value = ultragap.asymptote.gamma_infinity(t)
    return AsymptoteDocument(
        gamma_infinity=format_exact(value),
        decimal=round_sig(value),
        coterie_sizes=[len(c) for c in t.coteries],
        witness=[format_exact(x) for x in ultragap.asymptote.flat_witness(t).omega],
    )


def classification_document(c: ultragap.asymptote.ConstancyClass, labels: Sequence[str]) -> ClassificationDocument:
    return ClassificationDocument(
        kind=c.kind.value,
        gamma_zero=format_exact(c.gamma_zero),
        gamma_infinity=format_exact(c.gamma_infinity),
        coterie_sizes=list(c.profile.sizes),
        covered=c.profile.covered,
        uncovered=[labels[i] for i in c.profile.uncovered],
    )


def verify_document(v: EnhancedVerdict) -> VerifyDocument:
    return VerifyDocument(
        holds=v.holds,
        G=v.G,
        p=v.p,
        alpha=round_sig(v.alpha),
        threshold=round_sig(v.threshold),
        gap=round_sig(v.gap),
        samples=v.samples,
        seed=v.seed,
        max_sampled_lhs=round_sig(v.max_sampled_lhs) if v.max_sampled_lhs is not None else None,
        witness=decimals(v.witness.omega) if v.witness is not None else None,
    )


def coefficients_document(
    coeffs: LevelCoefficients, certificate: FlatnessCertificate, trend: Trend
) -> CoefficientsDocument:
    rows = [
        CoefficientDocument(k=k, height=scalar(h), c=scalar(c), tail=scalar(tail))
        for k, (h, c, tail) in enumerate(zip(coeffs.heights, coeffs.c, coeffs.tail_sums()), 1)
    ]
    return CoefficientsDocument(
        coefficients=rows,
        flat=certificate.flat,
        trend=trend.value,
        certificate=certificate.reason or None,
    )


def failure_document(e: Exception, witness: Optional[Simplex] = None) -> FailureDocument:
    value: Optional[float] = None
    if isinstance(e, NegativeTypeError):
        witness = e.witness
        value = round_sig(e.value)
    return FailureDocument(
        error=type(e).__name__,
        message=str(e),
        value=value,
        witness=decimals(witness.omega) if witness is not None else None,
    )
