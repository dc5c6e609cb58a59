from typing import List, Sequence
from pathlib import Path
from fractions import Fraction

import numpy as np
import pytest

from ultragap.metric import FiniteMetric, ArithmeticMode, validate
from ultragap.dendrogram import Dendrogram, DendroTree, tree, build_dendrogram

CD = Path(__file__).resolve().parent
DATA = CD / "data"


def six_point_matrix(alpha2=2) -> List[List]:
    """
    six points: z1 alone, coteries {z2, z3} and {z4, z5, z6} at distance 1, everything else at alpha2.
    the gap is (9x^2 - 7x + 1) / (21x^2 - 12x) with x = alpha2^p.
    """
    coteries = [(1, 2), (3, 4, 5)]
    n = 6
    rows = [[0 if i == j else alpha2 for j in range(n)] for i in range(n)]
    for c in coteries:
        for i in c:
            for j in c:
                if i != j:
                    rows[i][j] = 1
    return rows


def six_point_gap(p: float, alpha2: float = 2.0) -> float:
    x = alpha2**p
    return (9 * x**2 - 7 * x + 1) / (21 * x**2 - 12 * x)


def seven_point_dendrogram() -> Dendrogram:
    """seven points merged at heights 1 < 2 < 3 < 4, the only coterie is {z5, z6}"""
    return Dendrogram(
        labels=tuple(f"z{i}" for i in range(1, 8)),
        heights=(0, 1, 2, 3, 4),
        partitions=(
            tuple((i,) for i in range(7)),
            ((0,), (1,), (2,), (3,), (4, 5), (6,)),
            ((0, 1, 2), (3,), (4, 5, 6)),
            ((0, 1, 2), (3, 4, 5, 6)),
            (tuple(range(7)),),
        ),
    )


def discrete_matrix(n: int, scale=1) -> List[List]:
    return [[0 if i == j else scale for j in range(n)] for i in range(n)]


def two_pairs_matrix() -> List[List]:
    """coteries {a, b} and {c, d} at distance 1, merged at height 2"""
    return [
        [0, 1, 2, 2],
        [1, 0, 2, 2],
        [2, 2, 0, 1],
        [2, 2, 1, 0],
    ]


def path_matrix() -> List[List]:
    """three points on a line, a metric that is not an ultrametric"""
    return [
        [0, 1, 2],
        [1, 0, 1],
        [2, 1, 0],
    ]


def metric(matrix: Sequence[Sequence], mode=None) -> FiniteMetric:
    report = validate(matrix, mode=mode)
    assert report.metric is not None
    return report.metric


def random_ultrametric(rng: np.random.Generator, n: int, integral: bool = False) -> List[List[Fraction]]:
    """
    a random ultrametric with rational heights.

    every level groups the current blocks into fewer, larger blocks;
    points first sharing a block at a level are at that level's height.
    with `integral` the heights are 1, 2, 3, ... so powers stay well conditioned.
    """
    blocks: List[List[int]] = [[i] for i in range(n)]
    dist = [[Fraction(0)] * n for _ in range(n)]
    height = Fraction(0)
    while len(blocks) > 1:
        height += 1 if integral else Fraction(int(rng.integers(1, 5)), int(rng.integers(1, 4)))
        groups = int(rng.integers(1, len(blocks)))
        owner = rng.integers(0, groups, size=len(blocks))
        merged: List[List[int]] = []
        for g in range(groups):
            members = [blocks[b] for b in range(len(blocks)) if owner[b] == g]
            if not members:
                continue
            for x, a in enumerate(members):
                for b in members[x + 1 :]:
                    for i in a:
                        for j in b:
                            dist[i][j] = dist[j][i] = height
            merged.append([i for block in members for i in block])
        blocks = merged
    return dist


def squeeze_heights(dist: List[List[Fraction]]) -> List[List[Fraction]]:
    """map the nonzero distances h of an integral ultrametric to 1 + (h - 1) / max h, keeping every height below 2"""
    top = max(x for row in dist for x in row)
    return [[x if x == 0 else 1 + (x - 1) / top for x in row] for row in dist]


def random_simplex(rng: np.random.Generator, n: int) -> List[Fraction]:
    """exact random weights with both teams nonempty; some points may get zero weight"""
    signs = rng.integers(-1, 2, size=n)
    signs[0] = 1
    if not (signs < 0).any():
        signs[int(rng.integers(1, n))] = -1
    raw = [Fraction(int(rng.integers(1, 10))) for _ in range(n)]
    m_total = sum(r for r, s in zip(raw, signs) if s > 0)
    n_total = sum(r for r, s in zip(raw, signs) if s < 0)
    return [r / m_total if s > 0 else (-r / n_total if s < 0 else Fraction(0)) for r, s in zip(raw, signs)]


def random_flat_simplex(rng: np.random.Generator, t: DendroTree) -> List[Fraction]:
    """exact weights that are balanced inside every coterie and zero outside the coteries"""
    omega = [Fraction(0)] * t.n
    used = [c for c in t.coteries if rng.random() < 0.7] or [t.coteries[0]]
    total = Fraction(0)
    for c in used:
        share = Fraction(int(rng.integers(1, 6)))
        members = list(c)
        rng.shuffle(members)
        k = int(rng.integers(1, len(members)))
        for side, sign in ((members[:k], 1), (members[k:], -1)):
            raw = [Fraction(int(rng.integers(1, 10))) for _ in side]
            for i, r in zip(side, raw):
                omega[i] = sign * share * r / sum(raw)
        total += share
    return [x / total for x in omega]


@pytest.fixture
def six_point() -> FiniteMetric:
    return metric(six_point_matrix())


@pytest.fixture
def six_point_tree() -> DendroTree:
    return tree(build_dendrogram(metric(six_point_matrix())))


@pytest.fixture
def seven_point() -> Dendrogram:
    return seven_point_dendrogram()


@pytest.fixture
def seven_point_tree() -> DendroTree:
    return tree(seven_point_dendrogram())


@pytest.fixture
def two_pairs() -> FiniteMetric:
    return metric(two_pairs_matrix())


@pytest.fixture
def path() -> FiniteMetric:
    return metric(path_matrix())


@pytest.fixture
def pair() -> FiniteMetric:
    return metric([[0, 1], [1, 0]])


@pytest.fixture
def six_point_csv() -> Path:
    return DATA / "six-point" / "six-point.csv"


@pytest.fixture
def path_csv() -> Path:
    return DATA / "path" / "path.csv"


@pytest.fixture
def seven_point_json() -> Path:
    return DATA / "seven-point" / "seven-point.json"


@pytest.fixture
def float_six_point() -> FiniteMetric:
    return metric(six_point_matrix(2.0), mode=ArithmeticMode.FLOAT)
