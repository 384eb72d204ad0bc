"""合成数据生成：Synthie 风格数据集与属性测试用的随机图工具。"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Set, Tuple

import networkx as nx
import numpy as np

from .config import SynthieParams
from .graph import AttributedGraph, Edge, GraphCollection

logger = logging.getLogger(__name__)

SYNTHIE_CLASS_NAMES = {0: "C1A", 1: "C1B", 2: "C2A", 3: "C2B"}

# 属性池的构造常数：簇中心位于半径 4 的球面上，沿分隔方向的分量为 ±3
POOL_RADIUS = 4.0
POOL_SEPARATION = 3.0
CLUSTERS_PER_POOL = 2


# ========== 随机图 ==========

def gen_er_graph(n: int, p: float, rng: np.random.Generator) -> AttributedGraph:
    """Erdős-Rényi 图：C(n,2) 条边各自以概率 p 独立出现。"""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    rows, cols = np.triu_indices(n, k=1)
    present = rng.random(rows.size) < p
    return AttributedGraph(node_count=n, edges=frozenset(zip(rows[present].tolist(), cols[present].tolist())))


def perturb_edges(g: AttributedGraph, fraction: float, rng: np.random.Generator) -> AttributedGraph:
    """随机增删边：共 round(fraction·|E|) 次操作，每次以 1/2 概率选择添加或删除。

    无可添加的非边时改为删除，无可删除的边时改为添加。
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction must lie in [0, 1], got {fraction}")
    operations = int(round(fraction * g.edge_count))
    edges: Set[Edge] = set(g.edges)
    n = g.node_count
    all_pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]

    for _ in range(operations):
        add = rng.random() < 0.5
        non_edges = None
        if add:
            non_edges = [pair for pair in all_pairs if pair not in edges]
            if not non_edges:
                add = False
        if not add and not edges:
            non_edges = [pair for pair in all_pairs if pair not in edges]
            if not non_edges:
                break
            add = True
        if add:
            edges.add(non_edges[int(rng.integers(len(non_edges)))])
        else:
            ordered = sorted(edges)
            edges.remove(ordered[int(rng.integers(len(ordered)))])

    return AttributedGraph(
        node_count=n,
        edges=frozenset(edges),
        labels=g.labels,
        attributes=g.attributes,
        class_label=g.class_label,
    )


def random_labeled_graph(n: int, p: float, alphabet: int, rng: np.random.Generator) -> AttributedGraph:
    """ER 图 + 均匀随机的离散标签（0..alphabet-1）。"""
    g = gen_er_graph(n, p, rng)
    return g.with_labels(rng.integers(alphabet, size=n).tolist())


def random_attributed_graph(n: int, p: float, d: int, rng: np.random.Generator) -> AttributedGraph:
    """ER 图 + 标准正态属性。"""
    g = gen_er_graph(n, p, rng)
    return g.with_attributes(rng.standard_normal((n, d)))


def random_bounded_degree_graph(
    n: int,
    p: float,
    max_degree: int,
    alphabet: int,
    rng: np.random.Generator,
) -> AttributedGraph:
    """最大度受限的随机标签图：按随机顺序尝试每条候选边，超出度上限则跳过。"""
    rows, cols = np.triu_indices(n, k=1)
    order = rng.permutation(rows.size)
    degree = np.zeros(n, dtype=int)
    edges = []
    for index in order:
        u, v = int(rows[index]), int(cols[index])
        if rng.random() >= p or degree[u] >= max_degree or degree[v] >= max_degree:
            continue
        edges.append((u, v))
        degree[u] += 1
        degree[v] += 1
    labels = rng.integers(alphabet, size=n).tolist()
    return AttributedGraph(node_count=n, edges=frozenset(edges), labels=labels)


# ========== 属性池 ==========

@dataclass
class AttributePools:
    """两个线性可分的属性池 A、B，各为两个单位协方差高斯簇的混合。

    每个簇中心位于半径 4 的球面上，沿分隔方向 direction 的分量为 +3（A）或 -3（B）。
    """
    direction: np.ndarray
    means_a: np.ndarray
    means_b: np.ndarray

    @classmethod
    def sample(cls, dim: int, rng: np.random.Generator) -> "AttributePools":
        if dim < 2:
            raise ValueError(f"attribute pools need dim >= 2, got {dim}")
        direction = rng.standard_normal(dim)
        direction /= np.linalg.norm(direction)
        orthogonal_length = np.sqrt(POOL_RADIUS ** 2 - POOL_SEPARATION ** 2)

        def _means(sign: float) -> np.ndarray:
            means = []
            for _ in range(CLUSTERS_PER_POOL):
                w = rng.standard_normal(dim)
                w -= np.dot(w, direction) * direction
                w /= np.linalg.norm(w)
                means.append(sign * POOL_SEPARATION * direction + orthogonal_length * w)
            return np.array(means)

        return cls(direction=direction, means_a=_means(1.0), means_b=_means(-1.0))

    def draw(self, pool: str, rng: np.random.Generator, count: int = 1) -> np.ndarray:
        """从池 "A" 或 "B" 抽取 count 个属性向量。"""
        if pool == "A":
            means = self.means_a
        elif pool == "B":
            means = self.means_b
        else:
            raise ValueError(f"pool must be 'A' or 'B', got {pool!r}")
        clusters = rng.integers(len(means), size=count)
        return means[clusters] + rng.standard_normal((count, means.shape[1]))


# ========== Synthie ==========

def _connect_seeds(
    edges: Set[Edge],
    node_seed: np.ndarray,
    rng: np.random.Generator,
    extra_edges: int,
) -> None:
    """在种子图之间随机加边直到整图连通，再额外添加 extra_edges 条种子间的随机边。"""
    n = node_seed.size
    graph = nx.Graph()
    graph.add_nodes_from(range(n))
    graph.add_edges_from(edges)
    inter_seed = node_seed[:, None] != node_seed[None, :]
    if not inter_seed.any():
        # 只有一个种子时退化为普通随机边
        inter_seed = ~np.eye(n, dtype=bool)

    while not nx.is_connected(graph):
        component = np.empty(n, dtype=int)
        for index, members in enumerate(nx.connected_components(graph)):
            component[list(members)] = index
        candidates = inter_seed & (component[:, None] != component[None, :])
        if not candidates.any():
            candidates = component[:, None] != component[None, :]
        rows, cols = np.nonzero(np.triu(candidates, k=1))
        pick = int(rng.integers(rows.size))
        u, v = int(rows[pick]), int(cols[pick])
        edges.add((u, v))
        graph.add_edge(u, v)

    rows, cols = np.nonzero(np.triu(inter_seed, k=1))
    free = [(int(u), int(v)) for u, v in zip(rows, cols) if (int(u), int(v)) not in edges]
    for index in rng.permutation(len(free))[:extra_edges]:
        edges.add(free[int(index)])


def _compose(
    seeds: Sequence[AttributedGraph],
    from_first_set: Sequence[bool],
    pools: AttributePools,
    subclass_a: bool,
    extra_edges: int,
    rng: np.random.Generator,
) -> Tuple[int, Set[Edge], np.ndarray]:
    edges: Set[Edge] = set()
    node_seed = []
    attribute_rows = []
    offset = 0
    for seed_number, (seed, first) in enumerate(zip(seeds, from_first_set)):
        edges.update((u + offset, v + offset) for u, v in seed.edges)
        node_seed.extend([seed_number] * seed.node_count)
        # 子类 A：来自 S1 的节点取池 A 的属性，否则取池 B；子类 B 相反
        pool = "A" if first == subclass_a else "B"
        attribute_rows.append(pools.draw(pool, rng, seed.node_count))
        offset += seed.node_count
    _connect_seeds(edges, np.array(node_seed), rng, extra_edges)
    return offset, edges, np.vstack(attribute_rows)


def gen_synthie(params: Optional[SynthieParams] = None) -> GraphCollection:
    """按 Synthie 的构造生成四类图：C1A、C1B、C2A、C2B（类别编号 0..3）。"""
    params = (params or SynthieParams()).validate()
    rng = np.random.default_rng(params.seed)

    base_graphs = [gen_er_graph(params.seed_graph_size_n, params.er_edge_prob, rng) for _ in range(2)]
    seed_sets = [
        [perturb_edges(base, params.perturbation_fraction, rng) for _ in range(params.variants_per_seed_set)]
        for base in base_graphs
    ]
    pools = AttributePools.sample(params.attr_dim, rng)

    graphs: List[AttributedGraph] = []
    half = params.graphs_per_superclass // 2
    for superclass in range(2):
        # C1 以 mix_prob 从 S1 取种子，C2 概率互换
        first_set_prob = params.mix_prob if superclass == 0 else 1.0 - params.mix_prob
        for position in range(params.graphs_per_superclass):
            subclass_a = position < half
            from_first = rng.random(params.seeds_per_graph) < first_set_prob
            seeds = []
            for first in from_first:
                pool = seed_sets[0] if first else seed_sets[1]
                seeds.append(pool[int(rng.integers(len(pool)))])
            node_count, edges, attributes = _compose(
                seeds, from_first.tolist(), pools, subclass_a, params.seeds_per_graph, rng
            )
            class_label = 2 * superclass + (0 if subclass_a else 1)
            graphs.append(
                AttributedGraph(
                    node_count=node_count,
                    edges=frozenset(edges),
                    attributes=attributes,
                    class_label=class_label,
                )
            )

    collection = GraphCollection(graphs=graphs, name="Synthie", class_names=dict(SYNTHIE_CLASS_NAMES))
    mean_nodes = float(np.mean([g.node_count for g in graphs]))
    logger.info(f"Generated Synthie collection: {len(graphs)} graphs, {mean_nodes:.1f} nodes on average")
    return collection
