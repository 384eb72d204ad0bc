"""离散基核：Weisfeiler-Lehman 子树核与最短路径核的显式特征映射，以及稀疏向量运算。"""

from __future__ import annotations

import logging
import threading
from collections import Counter
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np
import networkx as nx

from .graph import AttributedGraph

logger = logging.getLogger(__name__)

# apsp 中表示不可达（距离为 ∞）的哨兵值
UNREACHABLE = -1

WL_PREFIX = "wl"
SP_PREFIX = "sp"
KEY_SEPARATOR = "|"


def wl_key(depth: int, label: int) -> str:
    return f"{WL_PREFIX}{KEY_SEPARATOR}{depth}{KEY_SEPARATOR}{label}"


def sp_key(label_u: int, label_v: int, distance: int) -> str:
    return f"{SP_PREFIX}{KEY_SEPARATOR}{label_u}{KEY_SEPARATOR}{label_v}{KEY_SEPARATOR}{distance}"


def _format_weight(weight: float) -> str:
    if float(weight).is_integer():
        return str(int(weight))
    return repr(float(weight))


class FeatureVector(dict):
    """稀疏特征向量：特征键 -> 权重，不存储零权重。"""

    def __init__(self, items: Optional[Mapping[str, float] | Iterable[Tuple[str, float]]] = None):
        super().__init__()
        if items is None:
            return
        pairs = items.items() if isinstance(items, Mapping) else items
        for key, weight in pairs:
            if weight != 0:
                self[key] = float(weight)

    def add(self, key: str, weight: float = 1.0) -> None:
        value = self.get(key, 0.0) + weight
        if value == 0:
            self.pop(key, None)
        else:
            self[key] = value

    def scaled(self, factor: float) -> "FeatureVector":
        if factor == 0:
            return FeatureVector()
        return FeatureVector((key, weight * factor) for key, weight in self.items())

    def prefixed(self, prefix: str) -> "FeatureVector":
        """给所有键加前缀，用于键空间不相交的拼接。"""
        return FeatureVector((f"{prefix}{key}", weight) for key, weight in self.items())

    def extend_disjoint(self, other: Mapping[str, float]) -> None:
        for key, weight in other.items():
            if key in self:
                raise ValueError(f"feature key {key!r} already present; blocks must be key-disjoint")
            if weight != 0:
                self[key] = float(weight)

    def squared_norm(self) -> float:
        return float(sum(weight * weight for weight in self.values()))

    def to_text(self) -> str:
        """按键排序的 `key<TAB>weight` 文本行。"""
        return "".join(f"{key}\t{_format_weight(self[key])}\n" for key in sorted(self))

    @classmethod
    def from_text(cls, text: str) -> "FeatureVector":
        vector = cls()
        for line in text.splitlines():
            if not line.strip():
                continue
            key, weight = line.rsplit("\t", 1)
            vector[key] = float(weight)
        return vector


def dot(u: Mapping[str, float], v: Mapping[str, float]) -> float:
    """共享键上的权重乘积之和。"""
    if len(u) > len(v):
        u, v = v, u
    total = 0.0
    for key, weight in u.items():
        other = v.get(key)
        if other is not None:
            total += weight * other
    return total


# ========== Weisfeiler-Lehman ==========

class WlContext:
    """WL 压缩字典：(深度, 旧标签, 邻居标签有序多重集) -> 新的压缩标签。

    在一次特征化过程中被所有参与比较的图共享，保证压缩是单射；插入操作加锁。
    """

    def __init__(self):
        self._table: Dict[Tuple[int, int, Tuple[int, ...]], int] = {}
        self._counter = 0
        self._lock = threading.Lock()

    def compress(self, depth: int, label: int, neighbor_labels: Tuple[int, ...]) -> int:
        signature = (depth, label, neighbor_labels)
        code = self._table.get(signature)
        if code is not None:
            return code
        with self._lock:
            code = self._table.get(signature)
            if code is None:
                code = self._counter
                self._table[signature] = code
                self._counter += 1
            return code

    def __len__(self) -> int:
        return len(self._table)


def wl_refine(g: AttributedGraph, labels: Sequence[int], depth: int, ctx: WlContext) -> Tuple[int, ...]:
    """一步 WL 重标记：depth 为新标签所在的迭代序号。"""
    new_labels = []
    for v in range(g.node_count):
        neighbor_labels = tuple(sorted(labels[w] for w in g.neighbors(v)))
        new_labels.append(ctx.compress(depth, labels[v], neighbor_labels))
    return tuple(new_labels)


def wl_feature_map(g: AttributedGraph, h: int, ctx: WlContext) -> FeatureVector:
    """WL 子树核特征：第 0..h 轮每个标签的出现次数，各轮键空间不相交。"""
    if h < 0:
        raise ValueError(f"refinement depth h must be >= 0, got {h}")
    labels: Tuple[int, ...] = g.require_labels()
    counts: Counter = Counter()
    for depth in range(h + 1):
        if depth > 0:
            labels = wl_refine(g, labels, depth, ctx)
        counts.update(wl_key(depth, label) for label in labels)
    return FeatureVector(counts)


# ========== 最短路径 ==========

def apsp(g: AttributedGraph) -> np.ndarray:
    """全源最短路径（无权，逐节点 BFS）。不可达记为 UNREACHABLE，对角线为 0。"""
    n = g.node_count
    distances = np.full((n, n), UNREACHABLE, dtype=np.int64)
    graph = g.to_networkx()
    for source in range(n):
        for target, length in nx.single_source_shortest_path_length(graph, source).items():
            distances[source, target] = length
    return distances


def sp_feature_map(g: AttributedGraph, distances: Optional[np.ndarray] = None) -> FeatureVector:
    """最短路径核特征：对每个有序对 (u, v)，u≠v 且可达，计数三元组 (l(u), l(v), d_uv)。"""
    labels = np.asarray(g.require_labels(), dtype=np.int64)
    if g.node_count < 2:
        return FeatureVector()
    if distances is None:
        distances = apsp(g)
    sources, targets = np.nonzero(distances > 0)
    if sources.size == 0:
        return FeatureVector()
    triples = np.stack([labels[sources], labels[targets], distances[sources, targets]], axis=1)
    unique, counts = np.unique(triples, axis=0, return_counts=True)
    return FeatureVector(
        (sp_key(int(lu), int(lv), int(d)), float(count)) for (lu, lv, d), count in zip(unique, counts)
    )
