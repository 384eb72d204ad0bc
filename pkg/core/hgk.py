"""哈希图核框架：迭代哈希属性、拼接离散基核特征、属性预处理与 gram 矩阵计算。"""

from __future__ import annotations

import logging
import math
import threading
import time
from dataclasses import replace
from typing import Dict, List, Optional, Sequence, Set, Tuple

import numpy as np
from joblib import Parallel, delayed
from scipy.sparse import csr_matrix
from sklearn.feature_extraction import DictVectorizer

from .base_kernels import (
    KEY_SEPARATOR,
    WL_PREFIX,
    FeatureVector,
    WlContext,
    apsp,
    sp_feature_map,
    wl_feature_map,
)
from .config import BaseKernel, HashMode, HgkConfig, LabelMode
from .errors import PreconditionError
from .graph import AttributedGraph, GraphCollection, assign_degree_labels_to_collection
from .hashing import LabelAlphabet, SeedSpec, StableHashFunction, hash_graph, sample_lsh

logger = logging.getLogger(__name__)

# 拼接时各块的键前缀
LABEL_BLOCK_PREFIX = "L/"


def iteration_prefix(iteration: int) -> str:
    return f"h{iteration}/"


# ========== 属性预处理 ==========

def standardize_attributes(c: GraphCollection) -> GraphCollection:
    """逐维中心化并除以总体标准差（统计量取自所有图的所有节点）；方差为 0 的维度只做中心化。"""
    if not c.has_attributes:
        raise PreconditionError(f"Collection {c.name!r} has no node attributes to standardize")
    stacked = np.vstack([g.attributes for g in c.graphs if g.node_count > 0])
    mean = stacked.mean(axis=0)
    std = stacked.std(axis=0)
    constant = std == 0
    if constant.any():
        logger.warning(f"{int(constant.sum())} attribute dimensions have zero variance; centering only")
    scale = np.where(constant, 1.0, std)
    graphs = [
        g.with_attributes((g.attributes - mean) / scale) if g.node_count > 0 else g
        for g in c.graphs
    ]
    return c.replace_graphs(graphs)


# ========== 特征化上下文 ==========

class HgkFeaturizer:
    """共享特征化上下文：每轮的哈希函数、标签字母表与 WL 压缩字典，以及缓存的最短路径表。

    同一组需要相互比较的图必须使用同一个上下文和同一份配置。
    """

    def __init__(self, cfg: HgkConfig):
        self.cfg = cfg.validate()
        self.seed_spec = SeedSpec(cfg.seed)
        self._shared_functions: Dict[int, StableHashFunction] = {}
        self._alphabets: Dict[int, LabelAlphabet] = {}
        self._wl_contexts: Dict[int, WlContext] = {}
        self._label_context = WlContext()
        self._distances: Dict[int, Tuple[AttributedGraph, np.ndarray]] = {}
        # id(图) -> (图, 随机流编号)；保留图的引用，id 不会被复用
        self._graph_indices: Dict[int, Tuple[AttributedGraph, int]] = {}
        self._claimed_indices: Set[int] = set()
        self._next_index = 0
        self._lock = threading.Lock()

    # ---------- 每轮状态 ----------

    def _per_iteration(self, store: Dict, iteration: int, factory):
        value = store.get(iteration)
        if value is None:
            with self._lock:
                value = store.get(iteration)
                if value is None:
                    value = factory()
                    store[iteration] = value
        return value

    def shared_function(self, iteration: int, d: int) -> StableHashFunction:
        """共享模式下第 iteration 轮的唯一哈希函数。"""
        f = self._per_iteration(
            self._shared_functions,
            iteration,
            lambda: sample_lsh(d, self.cfg.width_r, self.seed_spec.stream(iteration)),
        )
        if f.dim != d:
            raise ValueError(f"attribute dimension {d} differs from earlier graphs (d={f.dim})")
        return f

    def alphabet(self, iteration: int) -> LabelAlphabet:
        return self._per_iteration(self._alphabets, iteration, LabelAlphabet)

    def wl_context(self, iteration: int) -> WlContext:
        return self._per_iteration(self._wl_contexts, iteration, WlContext)

    def graph_index(self, g: AttributedGraph, graph_index: Optional[int] = None) -> int:
        """图的随机流编号。

        未指定时同一个图对象总是得到同一个编号，新图按出现顺序取下一个未占用的编号；
        指定的编号会被登记为已占用。
        """
        with self._lock:
            if graph_index is None:
                entry = self._graph_indices.get(id(g))
                if entry is not None and entry[0] is g:
                    return entry[1]
                while self._next_index in self._claimed_indices:
                    self._next_index += 1
                graph_index = self._next_index
            elif graph_index < 0:
                raise ValueError(f"graph_index must be non-negative, got {graph_index}")
            self._claimed_indices.add(graph_index)
            self._graph_indices[id(g)] = (g, graph_index)
            return graph_index

    def distances(self, g: AttributedGraph, graph_index: int) -> np.ndarray:
        """g 的最短路径表，按编号缓存；同一编号换了图时重新计算。"""
        cached = self._distances.get(graph_index)
        if cached is not None and cached[0] is g:
            return cached[1]
        table = apsp(g)
        self._distances[graph_index] = (g, table)
        return table

    # ---------- 哈希与基核 ----------

    def hashed_graph(self, g: AttributedGraph, graph_index: int, iteration: int) -> AttributedGraph:
        """第 iteration 轮哈希后的图，标签已压缩为本轮的稠密字母表。"""
        attributes = g.require_attributes()
        mode = self.cfg.hash_mode
        if mode is HashMode.SHARED:
            shared = self.shared_function(iteration, attributes.shape[1]) if g.node_count else None
            hashed = hash_graph(g, mode, self.cfg.width_r, self.seed_spec.stream(iteration), shared=shared)
        else:
            hashed = hash_graph(g, mode, self.cfg.width_r, self.seed_spec.stream(iteration, graph_index))

        alphabet = self.alphabet(iteration)
        if self.cfg.label_mode is LabelMode.LABEL_CONT and self.cfg.base_kernel is BaseKernel.SP:
            # SP 没有传播过程，使用 (离散标签, 哈希标签) 组合
            discrete = g.require_labels()
            labels = [alphabet.intern((discrete[v], hashed.labels[v])) for v in range(g.node_count)]
        else:
            labels = [alphabet.intern(label) for label in hashed.labels]
        return hashed.with_labels(labels)

    def base_features(self, g: AttributedGraph, graph_index: int, ctx: WlContext, labeled: AttributedGraph) -> FeatureVector:
        """labeled 为带本轮标签的 g（边与 g 相同），最短路径表按原图 g 缓存。"""
        if self.cfg.base_kernel is BaseKernel.WL:
            return wl_feature_map(labeled, self.cfg.wl_depth, ctx)
        return sp_feature_map(labeled, self.distances(g, graph_index))

    def iteration_block(self, g: AttributedGraph, graph_index: int, iteration: int) -> FeatureVector:
        """φ_b(h_i(G))：未缩放、未加前缀的单轮特征。"""
        hashed = self.hashed_graph(g, graph_index, iteration)
        return self.base_features(g, graph_index, self.wl_context(iteration), hashed)

    def label_block(self, g: AttributedGraph, graph_index: int) -> FeatureVector:
        """仅基于离散标签的特征块（不哈希，没有方差）。"""
        g.require_labels()
        return self.base_features(g, graph_index, self._label_context, g)

    # ---------- 组合 ----------

    def assemble(self, label_block: Optional[FeatureVector], blocks: Sequence[FeatureVector]) -> FeatureVector:
        scale = math.sqrt(1.0 / self.cfg.iterations)
        vector = FeatureVector()
        for iteration, block in enumerate(blocks, start=1):
            vector.extend_disjoint(block.scaled(scale).prefixed(iteration_prefix(iteration)))
        if label_block is not None:
            vector.extend_disjoint(label_block.prefixed(LABEL_BLOCK_PREFIX))
        return vector

    def feature_map(self, g: AttributedGraph, graph_index: Optional[int] = None) -> FeatureVector:
        graph_index = self.graph_index(g, graph_index)
        mode = self.cfg.label_mode
        if mode is LabelMode.LABEL:
            return self.label_block(g, graph_index).prefixed(LABEL_BLOCK_PREFIX)
        if g.attributes is None:
            raise PreconditionError(f"Graph #{graph_index} has no attributes; required in {mode.value} mode")

        blocks = [self.iteration_block(g, graph_index, i) for i in range(1, self.cfg.iterations + 1)]
        label_block = None
        if mode is LabelMode.LABEL_CONT and self.cfg.base_kernel is BaseKernel.WL:
            label_block = self.label_block(g, graph_index)
        return self.assemble(label_block, blocks)


def hgk_feature_map(
    g: AttributedGraph,
    cfg: HgkConfig,
    collection_ctx: HgkFeaturizer,
    graph_index: Optional[int] = None,
) -> FeatureVector:
    """Φ(G) = sqrt(1/I) · ⊕_i φ_b(h_i(G))，各轮以键前缀实现拼接。

    graph_index 为 G 的随机流编号，独立哈希模式据此派生每个节点的哈希函数；
    省略时由上下文为每个图分配不同的编号。
    """
    if collection_ctx.cfg is not cfg and collection_ctx.cfg != cfg:
        raise ValueError("featurization context was created for a different configuration")
    return collection_ctx.feature_map(g, graph_index)


def featurize_collection(
    c: GraphCollection,
    cfg: HgkConfig,
    threads: int = 1,
    featurizer: Optional[HgkFeaturizer] = None,
) -> List[FeatureVector]:
    """为整个集合计算 Φ。

    各轮之间相互独立，按轮次并行；同一轮内按图的顺序处理，结果与调度顺序无关。
    """
    cfg.validate()
    if len(c) == 0:
        raise ValueError("Cannot featurize an empty collection")
    needs_labels = cfg.label_mode is not LabelMode.CONT
    if needs_labels and not c.has_labels:
        logger.info(f"Collection {c.name!r} has no node labels; using node degrees")
        c = assign_degree_labels_to_collection(c)
    if cfg.standardize and cfg.label_mode is not LabelMode.LABEL:
        c = standardize_attributes(c)
    featurizer = featurizer or HgkFeaturizer(cfg)

    started = time.perf_counter()
    graphs = c.graphs
    if cfg.label_mode is LabelMode.LABEL:
        features = [featurizer.feature_map(g, index) for index, g in enumerate(graphs)]
        logger.info(f"Featurized {len(graphs)} graphs (labels only) in {time.perf_counter() - started:.2f}s")
        return features

    for index, g in enumerate(graphs):
        if g.attributes is None:
            raise PreconditionError(f"Graph #{index} has no attributes; required in {cfg.label_mode.value} mode")
        featurizer.graph_index(g, index)
        if cfg.base_kernel is BaseKernel.SP:
            featurizer.distances(g, index)

    def run_iteration(iteration: int) -> List[FeatureVector]:
        blocks = [featurizer.iteration_block(g, index, iteration) for index, g in enumerate(graphs)]
        logger.debug(f"Iteration {iteration} hashed and featurized")
        return blocks

    iterations = range(1, cfg.iterations + 1)
    if threads > 1:
        per_iteration = Parallel(n_jobs=threads, prefer="threads")(delayed(run_iteration)(i) for i in iterations)
    else:
        per_iteration = [run_iteration(i) for i in iterations]

    with_labels = cfg.label_mode is LabelMode.LABEL_CONT and cfg.base_kernel is BaseKernel.WL
    features = []
    for index, g in enumerate(graphs):
        label_block = featurizer.label_block(g, index) if with_labels else None
        features.append(featurizer.assemble(label_block, [blocks[index] for blocks in per_iteration]))

    logger.info(
        f"Featurized {len(graphs)} graphs ({cfg.base_kernel.value}, I={cfg.iterations}, "
        f"{cfg.hash_mode.value}, {cfg.label_mode.value}) in {time.perf_counter() - started:.2f}s"
    )
    return features


def restrict_depth(vector: FeatureVector, depth: int) -> FeatureVector:
    """去掉 WL 深度大于 depth 的特征；非 WL 特征原样保留。"""
    kept = FeatureVector()
    for key, weight in vector.items():
        base = key.split("/", 1)[-1]
        parts = base.split(KEY_SEPARATOR)
        if parts[0] == WL_PREFIX and int(parts[1]) > depth:
            continue
        kept[key] = weight
    return kept


# ========== Gram 矩阵 ==========

def vectorize(features: Sequence[FeatureVector]) -> Tuple[csr_matrix, List[str]]:
    """特征键 -> 列索引（按键排序，只看特征本身，不读类别标签）。"""
    vectorizer = DictVectorizer(dtype=np.float64, sparse=True, sort=True)
    matrix = vectorizer.fit_transform(features)
    return csr_matrix(matrix), list(vectorizer.get_feature_names_out())


def gram_from_features(features: Sequence[FeatureVector]) -> np.ndarray:
    """K[i][j] = <Φ(G_i), Φ(G_j)>，上三角镜像保证严格对称。"""
    if len(features) == 0:
        raise ValueError("Cannot compute a gram matrix of an empty collection")
    matrix, _ = vectorize(features)
    gram = (matrix @ matrix.T).toarray().astype(float)
    upper = np.triu(gram)
    return upper + np.triu(gram, 1).T


def gram_matrix(c: GraphCollection, cfg: HgkConfig, threads: int = 1) -> np.ndarray:
    """哈希图核的 gram 矩阵，由显式特征向量计算。"""
    if len(c) == 0:
        raise ValueError("Cannot compute a gram matrix of an empty collection")
    return gram_from_features(featurize_collection(c, cfg, threads=threads))


def cosine_normalize(k: np.ndarray) -> np.ndarray:
    """K'[i][j] = K[i][j] / sqrt(K[i][i] K[j][j])；零范数行的非对角元为 0，对角元为 1。"""
    k = np.asarray(k, dtype=float)
    diagonal = np.diag(k).copy()
    degenerate = diagonal <= 0
    safe = np.where(degenerate, 1.0, diagonal)
    normalized = k / np.sqrt(np.outer(safe, safe))
    normalized[degenerate, :] = 0.0
    normalized[:, degenerate] = 0.0
    np.fill_diagonal(normalized, 1.0)
    return normalized


def normalize_rows(matrix: csr_matrix) -> csr_matrix:
    """特征行的 L2 归一化：与 gram 矩阵余弦归一化等价的显式形式。"""
    norms = np.sqrt(np.asarray(matrix.multiply(matrix).sum(axis=1)).ravel())
    norms[norms == 0] = 1.0
    scaling = csr_matrix((1.0 / norms, (np.arange(len(norms)), np.arange(len(norms)))), shape=(len(norms), len(norms)))
    return csr_matrix(scaling @ matrix)


# ========== 运行时间 ==========

def time_featurization(
    c: GraphCollection,
    cfg: HgkConfig,
    iterations_list: Sequence[int],
    runs: int = 3,
    threads: int = 1,
) -> List[Tuple[int, float]]:
    """不同迭代次数 I 下特征化整个集合的平均耗时（秒）。"""
    rows = []
    for iterations in iterations_list:
        point_cfg = replace(cfg, iterations=iterations)
        elapsed = []
        for _ in range(runs):
            started = time.perf_counter()
            featurize_collection(c, point_cfg, threads=threads)
            elapsed.append(time.perf_counter() - started)
        rows.append((iterations, float(np.mean(elapsed))))
        logger.info(f"I={iterations}: {rows[-1][1]:.3f}s per featurization")
    return rows
