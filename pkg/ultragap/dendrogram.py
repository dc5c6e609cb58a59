import json
import itertools
from typing import Dict, List, Tuple, Mapping, Iterable, Optional
from pathlib import Path
from fractions import Fraction
from dataclasses import field, dataclass

import networkx as nx

import ultragap.utils
import ultragap.results
import ultragap.logging_
from ultragap.utils import Number, to_scalar, all_exact, format_exact
from ultragap.metric import (
    MetricKind,
    FiniteMetric,
    ArithmeticMode,
    InvalidInputFile,
    validate,
    parse_number,
)
from ultragap.results import LevelDocument, DendrogramDocument

logger = ultragap.logging_.getLogger(__name__)

# a block is a sorted tuple of point indices, a partition a sorted tuple of blocks
Block = Tuple[int, ...]
Partition = Tuple[Block, ...]


class DendrogramError(ValueError):
    pass


def canonical_partition(blocks: Iterable[Iterable[int]]) -> Partition:
    return tuple(sorted(tuple(sorted(block)) for block in blocks))


def _check_partition(partition: Partition, n: int, k: int) -> None:
    seen = [x for block in partition for x in block]
    if any(len(block) == 0 for block in partition):
        raise DendrogramError(f"level {k} has an empty block")
    if sorted(seen) != list(range(n)):
        raise DendrogramError(f"level {k} is not a partition of the {n} points")


def _refines(finer: Partition, coarser: Partition) -> bool:
    owner = {x: i for i, block in enumerate(coarser) for x in block}
    return all(len({owner[x] for x in block}) == 1 for block in finer)


@dataclass(frozen=True)
class Dendrogram:
    """
    a proximity dendrogram: heights 0 = alpha_0 < alpha_1 < ... < alpha_l and one partition per height,
    starting from singletons and ending with a single block, each a proper refinement of the next.
    """

    labels: Tuple[str, ...]
    heights: Tuple[Number, ...]
    partitions: Tuple[Partition, ...]

    def __post_init__(self):
        n = len(self.labels)
        if n < 1:
            raise DendrogramError("a dendrogram needs at least one point")
        if len(self.heights) != len(self.partitions):
            raise DendrogramError(f"{len(self.heights)} heights but {len(self.partitions)} partitions")
        if len(self.heights) < 2:
            raise DendrogramError("a dendrogram needs at least one nonzero height")
        if self.heights[0] != 0:
            raise DendrogramError(f"the first height must be 0, got {self.heights[0]}")
        for k in range(1, len(self.heights)):
            if not self.heights[k] > self.heights[k - 1]:
                raise DendrogramError(f"heights are not strictly increasing at level {k}")

        # blocks are canonicalized so equality does not depend on the order given
        partitions = tuple(canonical_partition(p) for p in self.partitions)
        object.__setattr__(self, "partitions", partitions)

        for k, partition in enumerate(partitions):
            _check_partition(partition, n, k)
        if any(len(block) != 1 for block in partitions[0]):
            raise DendrogramError("the partition at height 0 must consist of singletons")
        if partitions[-1] != (tuple(range(n)),):
            raise DendrogramError("the partition at the top height must be the whole space")
        for k in range(1, len(partitions)):
            if partitions[k - 1] == partitions[k] or not _refines(partitions[k - 1], partitions[k]):
                raise DendrogramError(f"level {k - 1} is not a proper refinement of level {k}")

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def ell(self) -> int:
        """number of nonzero heights"""
        return len(self.heights) - 1

    def partition_at(self, height: Number) -> Partition:
        """the partition pi(height) for any height, not only the alpha_k"""
        if height < 0:
            raise ValueError("heights are nonnegative")
        k = max(i for i, h in enumerate(self.heights) if h <= height)
        return self.partitions[k]


def build_dendrogram(m: FiniteMetric) -> Dendrogram:
    """
    the unique proximity dendrogram of an ultrametric.

    the partition at each height is the set of connected components of the threshold graph
    that joins points at distance at most that height.

    raises:
      DendrogramError: the metric is not an ultrametric, or has a single point.
    """
    if m.kind != MetricKind.ULTRAMETRIC:
        raise DendrogramError("only ultrametrics have a proximity dendrogram")
    if m.n < 2:
        raise DendrogramError("a dendrogram needs at least two points")

    edges = sorted(m.entries(), key=lambda e: e[2])
    heights: List[Number] = sorted({x for _, _, x in edges})

    g = nx.Graph()
    g.add_nodes_from(range(m.n))
    partitions: List[Partition] = [tuple((i,) for i in range(m.n))]

    cursor = 0
    for height in heights:
        while cursor < len(edges) and edges[cursor][2] <= height:
            i, j, _ = edges[cursor]
            g.add_edge(i, j)
            cursor += 1
        partitions.append(canonical_partition(nx.connected_components(g)))

    zero: Number = 0 if m.mode == ArithmeticMode.RATIONAL else 0.0
    d = Dendrogram(labels=m.labels, heights=(zero, *heights), partitions=tuple(partitions))
    log_levels(d)
    return d


def log_levels(d: Dendrogram) -> None:
    if not logger.isEnabledFor(ultragap.logging_.TRACE):
        return
    rows = []
    for k, (height, partition) in enumerate(zip(d.heights, d.partitions)):
        blocks = " ".join("{" + ",".join(d.labels[i] for i in block) + "}" for block in partition)
        rows.append((k, format_exact(height), blocks))
    logger.trace("dendrogram levels:\n%s", ultragap.utils.format_table(("k", "height", "blocks"), rows))


def dendrogram_to_metric(d: Dendrogram) -> FiniteMetric:
    """d(x, y) is the smallest height at which x and y share a block"""
    n = d.n
    mode = ArithmeticMode.RATIONAL if all_exact(d.heights) else ArithmeticMode.FLOAT
    zero: Number = 0 if mode == ArithmeticMode.RATIONAL else 0.0
    dist: List[List[Number]] = [[zero] * n for _ in range(n)]

    merged_at: Dict[Tuple[int, int], Number] = {}
    for height, partition in zip(d.heights[1:], d.partitions[1:]):
        for block in partition:
            for i, j in itertools.combinations(block, 2):
                merged_at.setdefault((i, j), height)

    for (i, j), height in merged_at.items():
        dist[i][j] = dist[j][i] = height

    report = validate(dist, d.labels, mode=mode)
    if report.metric is None or report.metric.kind != MetricKind.ULTRAMETRIC:
        raise DendrogramError("dendrogram does not induce an ultrametric")
    return report.metric


@dataclass(frozen=True)
class CoterieProfile:
    sizes: Tuple[int, ...]
    covered: int
    uncovered: Tuple[int, ...]


@dataclass(frozen=True)
class DendroTree:
    """
    the Hasse diagram of all blocks of a dendrogram.

    edges point from a node to its left-adjacent children, the blocks one level below that it splits into.
    nodes are ordered by smallest contained point index, then by size.

    Attributes:
      labels: point names
      heights: alpha_0, ..., alpha_l of the dendrogram
      nodes: every block of every partition, deduplicated
      root: the whole space
      level: smallest k with the node in pi(alpha_k)
      adjacency: the children Adj(v) of each node, leaves map to ()
      coteries: the level 1 nodes
      graph: the same tree as a networkx DiGraph
    """

    labels: Tuple[str, ...]
    heights: Tuple[Number, ...]
    nodes: Tuple[Block, ...]
    root: Block
    level: Mapping[Block, int]
    adjacency: Mapping[Block, Tuple[Block, ...]]
    coteries: Tuple[Block, ...]
    graph: nx.DiGraph = field(compare=False, repr=False)

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def ell(self) -> int:
        return len(self.heights) - 1

    @property
    def leaves(self) -> Tuple[Block, ...]:
        return tuple(v for v in self.nodes if len(v) == 1)

    def left_degree(self, v: Block) -> int:
        return len(self.adjacency[v])

    def parent(self, v: Block) -> Optional[Block]:
        predecessors = list(self.graph.predecessors(v))
        return predecessors[0] if predecessors else None

    def subtree(self, v: Block) -> Tuple[Block, ...]:
        """the nodes of T(v), including v"""
        members = nx.descendants(self.graph, v) | {v}
        return tuple(u for u in self.nodes if u in members)

    def level_nodes(self, k: int) -> Tuple[Block, ...]:
        """Pi_k, the nodes of level k"""
        return tuple(v for v in self.nodes if self.level[v] == k)

    def height_of(self, v: Block) -> Number:
        return self.heights[self.level[v]]

    def block_labels(self, v: Block) -> str:
        return "{" + ",".join(self.labels[i] for i in v) + "}"


def _node_key(v: Block) -> Tuple[int, int]:
    return (v[0], len(v))


def tree(d: Dendrogram) -> DendroTree:
    level: Dict[Block, int] = {}
    for k, partition in enumerate(d.partitions):
        for block in partition:
            level.setdefault(block, k)

    nodes = tuple(sorted(level, key=_node_key))
    g = nx.DiGraph()
    g.add_nodes_from(nodes)

    adjacency: Dict[Block, Tuple[Block, ...]] = {}
    for v in nodes:
        k = level[v]
        if k == 0:
            adjacency[v] = ()
            continue
        members = set(v)
        children = tuple(sorted((u for u in d.partitions[k - 1] if members.issuperset(u)), key=_node_key))
        adjacency[v] = children
        g.add_edges_from((v, u) for u in children)

    root = tuple(range(d.n))
    coteries = tuple(v for v in nodes if level[v] == 1)
    logger.debug("tree with %d nodes, %d levels, %d coteries", len(nodes), d.ell, len(coteries))
    return DendroTree(
        labels=d.labels,
        heights=d.heights,
        nodes=nodes,
        root=root,
        level=level,
        adjacency=adjacency,
        coteries=coteries,
        graph=nx.freeze(g),
    )


def coterie_profile(t: DendroTree) -> CoterieProfile:
    sizes = tuple(len(c) for c in t.coteries)
    covered = set(itertools.chain.from_iterable(t.coteries))
    uncovered = tuple(i for i in range(t.n) if i not in covered)
    return CoterieProfile(sizes=sizes, covered=len(covered), uncovered=uncovered)


def from_document(doc: DendrogramDocument, mode: ArithmeticMode = ArithmeticMode.RATIONAL) -> Dendrogram:
    """
    build a dendrogram from its JSON document; the height 0 level of singletons may be omitted.

    raises:
      InvalidInputFile: a height cannot be parsed.
      DendrogramError: the levels do not form a proximity dendrogram.
    """

    def parse_height(raw) -> Number:
        try:
            return parse_number(str(raw), mode) if isinstance(raw, str) else _coerce_height(raw, mode)
        except (ValueError, ZeroDivisionError) as e:
            raise InvalidInputFile(f"cannot parse height {raw!r}: {e}")

    heights = [parse_height(level.height) for level in doc.levels]
    partitions = [canonical_partition(level.blocks) for level in doc.levels]

    n = len(doc.labels)
    if not heights or heights[0] != 0:
        heights.insert(0, 0 if mode == ArithmeticMode.RATIONAL else 0.0)
        partitions.insert(0, tuple((i,) for i in range(n)))

    return Dendrogram(labels=tuple(doc.labels), heights=tuple(heights), partitions=tuple(partitions))


def _coerce_height(raw: Number, mode: ArithmeticMode) -> Number:
    if mode == ArithmeticMode.RATIONAL:
        # JSON decimals like 1.5 are meant as written, not as their binary expansion
        return Fraction(str(raw)) if isinstance(raw, float) else Fraction(raw)
    return float(raw)


def read_json(path: Path, mode: ArithmeticMode = ArithmeticMode.RATIONAL) -> Dendrogram:
    try:
        doc = ultragap.results.read(path, DendrogramDocument)
    except ultragap.results.InvalidResultsFile as e:
        raise InvalidInputFile(str(e))
    d = from_document(doc, mode)
    logger.debug("read dendrogram with %d points and %d levels from %s", d.n, d.ell, path)
    return d


def to_document(d: Dendrogram) -> DendrogramDocument:
    levels = [
        LevelDocument(height=to_scalar(h), blocks=[list(block) for block in partition])
        for h, partition in zip(d.heights[1:], d.partitions[1:])
    ]
    return DendrogramDocument(labels=list(d.labels), levels=levels)


def to_json(d: Dendrogram) -> str:
    doc = to_document(d)
    return json.dumps(
        {
            "labels": doc.labels,
            "levels": [{"height": level.height, "blocks": level.blocks} for level in doc.levels],
        },
        sort_keys=True,
    )
