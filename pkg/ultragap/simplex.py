import itertools
from enum import Enum
from typing import Dict, List, Tuple, Mapping, Optional, Sequence
from pathlib import Path
from fractions import Fraction
from dataclasses import dataclass

import numpy as np

import ultragap.utils
import ultragap.results
import ultragap.logging_
from ultragap.const import SIMPLEX_ATOL, FLATNESS_ATOL, IDENTITY_ATOL
from ultragap.utils import Number, DomainError, is_exact, to_scalar, all_exact, format_exact
from ultragap.metric import FiniteMetric, ArithmeticMode, InvalidInputFile, power_entry, parse_number, distance_matrix
from ultragap.results import SimplexDocument
from ultragap.dendrogram import Block, DendroTree

logger = ultragap.logging_.getLogger(__name__)


class SimplexError(ValueError):
    def __init__(self, message: str, sum_residual: Number, abs_residual: Number):
        super().__init__(message)
        self.sum_residual = sum_residual
        self.abs_residual = abs_residual


@dataclass(frozen=True)
class Team:
    """points with positive (M) or negative (N) weight, in index order, weights positive and summing to 1"""

    indices: Tuple[int, ...]
    weights: Tuple[Number, ...]

    def __len__(self):
        return len(self.indices)


@dataclass(frozen=True)
class Simplex:
    """
    a normalized simplex: one weight per point, summing to 0 with absolute values summing to 2.

    points with zero weight belong to neither team.
    """

    omega: Tuple[Number, ...]

    def __post_init__(self):
        sum_residual = abs(sum(self.omega))
        abs_residual = abs(sum(abs(w) for w in self.omega) - 2)
        tol = 0 if self.exact else SIMPLEX_ATOL
        if sum_residual > tol or abs_residual > tol:
            raise SimplexError(
                f"not a normalized simplex: |sum| = {float(sum_residual):.3g}, |sum of abs - 2| = {float(abs_residual):.3g}",
                sum_residual,
                abs_residual,
            )

    @property
    def n(self) -> int:
        return len(self.omega)

    @property
    def exact(self) -> bool:
        return all_exact(self.omega)

    @property
    def m_team(self) -> Team:
        indices = tuple(k for k, w in enumerate(self.omega) if w > 0)
        return Team(indices, tuple(self.omega[k] for k in indices))

    @property
    def n_team(self) -> Team:
        indices = tuple(k for k, w in enumerate(self.omega) if w < 0)
        return Team(indices, tuple(-self.omega[k] for k in indices))

    def teams(self) -> Tuple[Team, Team]:
        return self.m_team, self.n_team

    def as_array(self) -> np.ndarray:
        return np.array([float(w) for w in self.omega], dtype=np.float64)

    @classmethod
    def normalized(cls, omega: Sequence[float], positive: Optional[Sequence[bool]] = None) -> "Simplex":
        """
        rescale a float weight vector onto the constraint set:
        each team is divided by its total, so the constraints hold up to rounding.

        `positive` fixes the team of every point; weights on the wrong side of zero are dropped.
        """
        w = np.asarray(omega, dtype=np.float64)
        if positive is None:
            positive = w > 0
        mask = np.asarray(positive, dtype=bool)
        pos = np.where(mask, np.maximum(w, 0.0), 0.0)
        neg = np.where(~mask, np.maximum(-w, 0.0), 0.0)
        if pos.sum() <= 0 or neg.sum() <= 0:
            raise SimplexError("both teams need positive weight", float(w.sum()), float(np.abs(w).sum() - 2))
        out = pos / pos.sum() - neg / neg.sum()
        return cls(tuple(float(x) for x in out))


def simplex_from_weights(omega: Sequence[Number]) -> Simplex:
    if len(omega) < 2:
        raise SimplexError("a simplex needs at least two points", sum(omega), abs(sum(abs(w) for w in omega) - 2))
    exact = all_exact(omega)
    return Simplex(tuple(Fraction(w) if exact else float(w) for w in omega))


def _check_sizes(m_n: int, w: Simplex) -> None:
    if m_n != w.n:
        raise DomainError(f"simplex has {w.n} weights but the space has {m_n} points")


def gamma_def(m: FiniteMetric, p: Number, w: Simplex) -> Number:
    """
    the p-simplex gap from its definition: cross-team distances minus within-team distances,
    all weighted by the products of team weights.

    exact when the metric, the simplex and the exponent are.
    """
    _check_sizes(m.n, w)
    mt, nt = w.teams()

    def dp(i: int, j: int) -> Number:
        return power_entry(m.dist[i][j], p)

    cross = sum(a * b * dp(i, j) for i, a in zip(mt.indices, mt.weights) for j, b in zip(nt.indices, nt.weights))
    within_m = sum(
        mt.weights[x] * mt.weights[y] * dp(mt.indices[x], mt.indices[y])
        for x, y in itertools.combinations(range(len(mt)), 2)
    )
    within_n = sum(
        nt.weights[x] * nt.weights[y] * dp(nt.indices[x], nt.indices[y])
        for x, y in itertools.combinations(range(len(nt)), 2)
    )
    return cross - within_m - within_n


def gamma_quadratic(m: FiniteMetric, p: float, w: Simplex) -> float:
    """-1/2 omega^T D_p omega in floating point"""
    _check_sizes(m.n, w)
    omega = w.as_array()
    return float(-0.5 * omega @ distance_matrix(m, p) @ omega)


@dataclass(frozen=True)
class BlockSums:
    """
    M(v) and N(v): the M-team and N-team weight inside each node of the tree.

    the subtree of v is simplicially balanced when M(v) = N(v).
    """

    m: Mapping[Block, Number]
    n: Mapping[Block, Number]

    def imbalance(self, v: Block) -> Number:
        return self.m[v] - self.n[v]

    def is_balanced(self, v: Block, tol: float = FLATNESS_ATOL) -> bool:
        d = self.imbalance(v)
        if is_exact(d):
            return d == 0
        return abs(d) <= tol


def block_sums(t: DendroTree, w: Simplex) -> BlockSums:
    _check_sizes(t.n, w)
    zero: Number = 0 if w.exact else 0.0
    m: Dict[Block, Number] = {}
    n: Dict[Block, Number] = {}
    # children are strictly smaller than their parent, so sorting by size is bottom-up
    for v in sorted(t.nodes, key=len):
        if len(v) == 1:
            x = w.omega[v[0]]
            m[v] = x if x > 0 else zero
            n[v] = -x if x < 0 else zero
        else:
            m[v] = sum((m[u] for u in t.adjacency[v]), zero)
            n[v] = sum((n[u] for u in t.adjacency[v]), zero)
    return BlockSums(m=m, n=n)


@dataclass(frozen=True)
class LevelCoefficients:
    """
    gamma_p(omega) = sum of c[k] * heights[k] ** p over the nonzero heights.

    Attributes:
      c: c_1, ..., c_l
      heights: alpha_1, ..., alpha_l
    """

    c: Tuple[Number, ...]
    heights: Tuple[Number, ...]

    @property
    def ell(self) -> int:
        return len(self.c)

    def tail_sums(self) -> Tuple[Number, ...]:
        """c_k + ... + c_l for each k, all nonnegative"""
        tails: List[Number] = []
        acc: Number = 0
        for c in reversed(self.c):
            acc = acc + c
            tails.append(acc)
        return tuple(reversed(tails))

    def total(self) -> Number:
        return sum(self.c, 0)


def level_coefficients(t: DendroTree, w: Simplex) -> LevelCoefficients:
    """
    c_k summed over the level k nodes, where each node contributes half of
    (sum of squared child imbalances) - (own imbalance squared).
    """
    sums = block_sums(t, w)
    zero: Number = 0 if w.exact else 0.0
    c: List[Number] = [zero] * t.ell
    for v in t.nodes:
        k = t.level[v]
        if k == 0:
            continue
        children = sum((sums.imbalance(u) ** 2 for u in t.adjacency[v]), zero)
        c[k - 1] += (children - sums.imbalance(v) ** 2) / 2

    coefficients = LevelCoefficients(c=tuple(c), heights=tuple(t.heights[1:]))
    if logger.isEnabledFor(ultragap.logging_.TRACE):
        rows = [(k, format_exact(h), format_exact(ck)) for k, (h, ck) in enumerate(zip(t.heights[1:], c), 1)]
        logger.trace("level coefficients:\n%s", ultragap.utils.format_table(("k", "height", "c_k"), rows))
    return coefficients


def reconstruct(coeffs: LevelCoefficients, p: Number) -> Number:
    """sum of c_k alpha_k^p, with 0^0 = 0 so that p = 0 gives the plain sum"""
    return sum((c * power_entry(h, p) for c, h in zip(coeffs.c, coeffs.heights)), 0)


class Trend(str, Enum):
    CONSTANT = "constant"
    INCREASING = "increasing"


def trend(coeffs: LevelCoefficients, tol: float = FLATNESS_ATOL) -> Tuple[Trend, Number]:
    """
    gamma_p(omega) is constant in p when c_2 = ... = c_l = 0, and strictly increasing otherwise.

    returns the trend and the margin: the first tail sum beyond c_1 that is nonzero, or 0.
    """
    for tail in coeffs.tail_sums()[1:]:
        nonzero = tail != 0 if is_exact(tail) else abs(tail) > tol
        if nonzero:
            return Trend.INCREASING, tail
    # all tails beyond c_1 vanish, which forces c_2 = ... = c_l = 0
    return Trend.CONSTANT, 0


@dataclass(frozen=True)
class FlatnessCertificate:
    """
    whether a simplex is flat, and if not, which node shows it.

    Attributes:
      flat: every coterie is balanced and every weighted leaf sits inside a coterie
      node: the offending node: an unbalanced coterie, or a weighted leaf outside all coteries
      reason: human readable description of the failure
    """

    flat: bool
    node: Optional[Block] = None
    reason: str = ""

    def __bool__(self):
        return self.flat


def is_flat(t: DendroTree, w: Simplex, tol: float = FLATNESS_ATOL) -> FlatnessCertificate:
    sums = block_sums(t, w)
    for u in t.coteries:
        if not sums.is_balanced(u, tol):
            return FlatnessCertificate(
                flat=False,
                node=u,
                reason=f"coterie {t.block_labels(u)} is not balanced: M - N = {format_exact(sums.imbalance(u))}",
            )

    for leaf in t.leaves:
        x = w.omega[leaf[0]]
        weighted = x != 0 if is_exact(x) else abs(x) > tol
        if not weighted:
            continue
        parent = t.parent(leaf)
        if parent is not None and t.level[parent] >= 2:
            return FlatnessCertificate(
                flat=False,
                node=leaf,
                reason=f"leaf {t.block_labels(leaf)} adjacent to a level-{t.level[parent]} node",
            )
    return FlatnessCertificate(flat=True)


def lemma0_check(a: Sequence[Number], b: Sequence[Number]) -> Number:
    """
    residual of the identity

        sum_{i != j} a_i b_j - sum_{i < j} (a_i a_j + b_i b_j)
          = sum_i (a_i - b_i) / 2 * sum_{j != i} (b_j - a_j)

    which underlies the per-node level coefficient formula.
    """
    if len(a) != len(b):
        raise ValueError(f"lengths differ: {len(a)} and {len(b)}")
    k = len(a)
    if k < 2:
        raise ValueError("the identity needs at least two terms")

    lhs = sum(a[i] * b[j] for i in range(k) for j in range(k) if i != j)
    lhs -= sum(a[i] * a[j] + b[i] * b[j] for i, j in itertools.combinations(range(k), 2))

    total = sum(b[j] - a[j] for j in range(k))
    half = Fraction(1, 2) if all_exact(a) and all_exact(b) else 0.5
    rhs = sum(half * (a[i] - b[i]) * (total - (b[i] - a[i])) for i in range(k))
    return abs(lhs - rhs)


def check_identity(a: Sequence[Number], b: Sequence[Number], tol: float = IDENTITY_ATOL) -> bool:
    return lemma0_check(a, b) <= tol


def from_document(doc: SimplexDocument, mode: ArithmeticMode = ArithmeticMode.RATIONAL) -> Simplex:
    try:
        omega = [parse_number(str(x), mode) for x in doc.omega]
    except (ValueError, ZeroDivisionError) as e:
        raise InvalidInputFile(f"cannot parse simplex weight: {e}")
    return simplex_from_weights(omega)


def read_simplex_json(path: Path, mode: ArithmeticMode = ArithmeticMode.RATIONAL) -> Simplex:
    try:
        doc = ultragap.results.read(path, SimplexDocument)
    except ultragap.results.InvalidResultsFile as e:
        raise InvalidInputFile(str(e))
    return from_document(doc, mode)


def to_document(w: Simplex, labels: Optional[Sequence[str]] = None) -> SimplexDocument:
    return SimplexDocument(
        omega=[to_scalar(x) for x in w.omega],
        labels=list(labels) if labels is not None else None,
    )
