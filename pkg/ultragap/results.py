import json
from typing import List, Type, Union, TypeVar, Optional
from pathlib import Path
from dataclasses import field

from pydantic import TypeAdapter, ValidationError

# we use pydantic for dataclasses so that we can
# easily load and validate JSON documents.
#
# pydantic checks all the JSON fields look as they should
# while using the nice and familiar dataclass syntax.
#
# these documents only hold plain data; converting domain objects into them
# is the job of `ultragap.render.json`.
from pydantic.dataclasses import dataclass

import ultragap.logging_

logger = ultragap.logging_.getLogger(__name__)

# exact values are carried as strings like "3/7", decimals as JSON numbers
Scalar = Union[int, float, str]


class InvalidResultsFile(Exception):
    pass


@dataclass(frozen=True)
class LevelDocument:
    """
    one level of a dendrogram.

    Attributes:
      height: the height alpha_k, exact heights as "a/b" strings
      blocks: the partition at this height, as lists of point indices
    """

    height: Scalar
    blocks: List[List[int]]


@dataclass(frozen=True)
class DendrogramDocument:
    labels: List[str]
    levels: List[LevelDocument]


@dataclass(frozen=True)
class SimplexDocument:
    omega: List[Scalar]
    labels: Optional[List[str]] = None


@dataclass(frozen=True)
class ViolationDocument:
    i: str
    j: str
    k: str
    lhs: float
    rhs: float


@dataclass(frozen=True)
class StructuralErrorDocument:
    """
    a matrix that cannot describe a metric.

    Attributes:
      reason: which axiom fails
      indices: the offending entries, as (i, j) pairs, (i,) for a ragged row
    """

    reason: str
    indices: List[List[int]]


@dataclass(frozen=True)
class ValidationDocument:
    kind: Optional[str]
    structural_errors: List[StructuralErrorDocument] = field(default_factory=list)
    ultrametric_violations: List[ViolationDocument] = field(default_factory=list)
    triangle_violations: List[ViolationDocument] = field(default_factory=list)


@dataclass(frozen=True)
class GapDocument:
    p: float
    value: float
    witness: List[float]
    partitions_explored: int


@dataclass(frozen=True)
class OracleDocument:
    p: float
    value: float
    witness: List[float]
    trials: int
    seed: int


@dataclass(frozen=True)
class CurvePointDocument:
    p: float
    gamma: float
    gamma_over_alpha1_p: float
    residual_to_infinity: Optional[float] = None


@dataclass(frozen=True)
class CurveDocument:
    points: List[CurvePointDocument]
    gamma_infinity: Optional[str] = None
    final_residual: Optional[float] = None


@dataclass(frozen=True)
class AsymptoteDocument:
    gamma_infinity: str
    decimal: float
    coterie_sizes: List[int]
    witness: List[str]


@dataclass(frozen=True)
class ClassificationDocument:
    kind: str
    gamma_zero: str
    gamma_infinity: str
    coterie_sizes: List[int]
    covered: int
    uncovered: List[str]


@dataclass(frozen=True)
class VerifyDocument:
    holds: bool
    G: float
    p: float
    alpha: float
    threshold: float
    gap: float
    samples: int
    seed: int
    max_sampled_lhs: Optional[float] = None
    witness: Optional[List[float]] = None


@dataclass(frozen=True)
class CoefficientDocument:
    k: int
    height: Scalar
    c: Scalar
    tail: Scalar


@dataclass(frozen=True)
class CoefficientsDocument:
    coefficients: List[CoefficientDocument]
    flat: bool
    trend: str
    certificate: Optional[str] = None


@dataclass(frozen=True)
class FailureDocument:
    error: str
    message: str
    value: Optional[float] = None
    witness: Optional[List[float]] = None


Document = TypeVar("Document")


def read(path: Path, document_type: Type[Document]) -> Document:
    """
    load and validate a JSON document of the given type.

    raises:
      InvalidResultsFile: the file is not JSON or does not match the document shape.
    """
    try:
        with path.open("rb") as f:
            raw = json.loads(f.read().decode("utf-8"))
    except (OSError, json.decoder.JSONDecodeError, UnicodeDecodeError) as e:
        raise InvalidResultsFile(f"{path}: {e}")

    try:
        doc = TypeAdapter(document_type).validate_python(raw)
    except (TypeError, ValidationError) as e:
        raise InvalidResultsFile(f"{path} is not a valid {document_type.__name__}: {e}")

    logger.debug("loaded %s from %s", document_type.__name__, path)
    return doc
