"""图模型：带离散标签与连续属性的无向图、图集合及其基本操作。"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from .errors import PreconditionError

Edge = Tuple[int, int]


def _normalize_edges(edges: Iterable[Sequence[int]], node_count: int) -> FrozenSet[Edge]:
    normalized = set()
    for edge in edges:
        u, v = int(edge[0]), int(edge[1])
        if u == v:
            raise ValueError(f"Self-loop on node {u} is not allowed")
        if not (0 <= u < node_count and 0 <= v < node_count):
            raise ValueError(f"Edge ({u}, {v}) has an endpoint outside 0..{node_count - 1}")
        normalized.add((u, v) if u < v else (v, u))
    return frozenset(normalized)


@dataclass(frozen=True, eq=False)
class AttributedGraph:
    """无向图：节点编号为 0..n-1，可选离散标签与 d 维实数属性。

    构造后不可变，可在线程之间共享。
    """
    node_count: int
    edges: FrozenSet[Edge] = frozenset()
    labels: Optional[Tuple[int, ...]] = None
    attributes: Optional[np.ndarray] = None
    class_label: Optional[int] = None

    _adjacency: Tuple[FrozenSet[int], ...] = field(init=False, repr=False)

    def __post_init__(self):
        if self.node_count < 0:
            raise ValueError(f"node_count must be non-negative, got {self.node_count}")
        object.__setattr__(self, "edges", _normalize_edges(self.edges, self.node_count))

        if self.labels is not None:
            labels = tuple(int(label) for label in self.labels)
            if len(labels) != self.node_count:
                raise ValueError(f"Expected {self.node_count} labels, got {len(labels)}")
            object.__setattr__(self, "labels", labels)

        if self.attributes is not None:
            attributes = np.array(self.attributes, dtype=float)
            if attributes.ndim == 1 and self.node_count == 0:
                attributes = attributes.reshape(0, 0)
            if attributes.ndim != 2 or attributes.shape[0] != self.node_count:
                raise ValueError(
                    f"Attributes must be an array of shape ({self.node_count}, d), got {attributes.shape}"
                )
            if self.node_count and attributes.shape[1] < 1:
                raise ValueError("Attribute dimension must be at least 1")
            attributes.setflags(write=False)
            object.__setattr__(self, "attributes", attributes)

        adjacency: List[set] = [set() for _ in range(self.node_count)]
        for u, v in self.edges:
            adjacency[u].add(v)
            adjacency[v].add(u)
        object.__setattr__(self, "_adjacency", tuple(frozenset(nbrs) for nbrs in adjacency))

    # ========== 基本查询 ==========

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @property
    def has_labels(self) -> bool:
        return self.labels is not None

    @property
    def has_attributes(self) -> bool:
        return self.attributes is not None

    @property
    def attribute_dim(self) -> Optional[int]:
        if self.attributes is None:
            return None
        return int(self.attributes.shape[1])

    def neighbors(self, v: int) -> FrozenSet[int]:
        """返回节点 v 的邻居集合 N(v)。"""
        if not 0 <= v < self.node_count:
            raise ValueError(f"Node index {v} out of range for graph with {self.node_count} nodes")
        return self._adjacency[v]

    def degree(self, v: int) -> int:
        return len(self.neighbors(v))

    def max_degree(self) -> int:
        return max((len(nbrs) for nbrs in self._adjacency), default=0)

    # ========== 派生副本 ==========

    def with_labels(self, labels: Optional[Sequence[int]]) -> "AttributedGraph":
        return AttributedGraph(
            node_count=self.node_count,
            edges=self.edges,
            labels=None if labels is None else tuple(labels),
            attributes=self.attributes,
            class_label=self.class_label,
        )

    def with_attributes(self, attributes: Optional[np.ndarray]) -> "AttributedGraph":
        return AttributedGraph(
            node_count=self.node_count,
            edges=self.edges,
            labels=self.labels,
            attributes=attributes,
            class_label=self.class_label,
        )

    def with_class_label(self, class_label: Optional[int]) -> "AttributedGraph":
        return AttributedGraph(
            node_count=self.node_count,
            edges=self.edges,
            labels=self.labels,
            attributes=self.attributes,
            class_label=class_label,
        )

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(self.node_count))
        graph.add_edges_from(self.edges)
        return graph

    def require_labels(self) -> Tuple[int, ...]:
        if self.labels is None:
            raise PreconditionError("Graph has no discrete node labels")
        return self.labels

    def require_attributes(self) -> np.ndarray:
        if self.attributes is None:
            raise PreconditionError("Graph has no node attributes")
        return self.attributes


@dataclass
class GraphCollection:
    """图集合：所有带属性的图共享同一属性维度 d。"""
    graphs: List[AttributedGraph]
    name: str = ""
    attribute_dim: Optional[int] = None
    class_names: Dict[int, str] = field(default_factory=dict)
    # 解析时被丢弃的自环与重复边计数
    parse_stats: Dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        self.graphs = list(self.graphs)
        dims = {g.attribute_dim for g in self.graphs if g.attributes is not None and g.node_count > 0}
        if len(dims) > 1:
            raise ValueError(f"Graphs in collection {self.name!r} have mixed attribute dimensions {sorted(dims)}")
        if dims:
            (dim,) = dims
            if self.attribute_dim is not None and self.attribute_dim != dim:
                raise ValueError(f"attribute_dim {self.attribute_dim} does not match graphs (d={dim})")
            self.attribute_dim = dim

    def __len__(self) -> int:
        return len(self.graphs)

    def __iter__(self) -> Iterator[AttributedGraph]:
        return iter(self.graphs)

    def __getitem__(self, index: int) -> AttributedGraph:
        return self.graphs[index]

    @property
    def has_attributes(self) -> bool:
        return bool(self.graphs) and all(g.attributes is not None for g in self.graphs)

    @property
    def has_labels(self) -> bool:
        return bool(self.graphs) and all(g.labels is not None for g in self.graphs)

    def class_labels(self) -> List[int]:
        """返回每个图的类别标签；缺失时抛出前置条件错误。"""
        missing = [i for i, g in enumerate(self.graphs) if g.class_label is None]
        if missing:
            raise PreconditionError(f"{len(missing)} graphs have no class label (first: #{missing[0]})")
        return [int(g.class_label) for g in self.graphs]

    def replace_graphs(self, graphs: Sequence[AttributedGraph]) -> "GraphCollection":
        return GraphCollection(
            graphs=list(graphs),
            name=self.name,
            class_names=dict(self.class_names),
            parse_stats=dict(self.parse_stats),
        )

    def subset(self, indices: Sequence[int]) -> "GraphCollection":
        return self.replace_graphs([self.graphs[i] for i in indices])


# ========== 图操作 ==========

def neighbors(g: AttributedGraph, v: int) -> FrozenSet[int]:
    """N(v)：与 v 相邻的节点集合。"""
    return g.neighbors(v)


def assign_degree_labels(g: AttributedGraph, force: bool = False) -> AttributedGraph:
    """以节点度数作为离散标签。

    已有标签时默认保留，force=True 时强制覆盖。
    """
    if g.labels is not None and not force:
        return g.with_labels(g.labels)
    return g.with_labels([g.degree(v) for v in range(g.node_count)])


def assign_degree_labels_to_collection(c: GraphCollection, force: bool = False) -> GraphCollection:
    return c.replace_graphs([assign_degree_labels(g, force=force) for g in c.graphs])
