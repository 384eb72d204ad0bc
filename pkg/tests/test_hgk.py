import math

import numpy as np
import pytest

from core.base_kernels import WlContext, dot, wl_feature_map
from core.config import BaseKernel, HashMode, HgkConfig, LabelMode
from core.datagen import random_attributed_graph
from core.errors import PreconditionError
from core.graph import AttributedGraph, GraphCollection
from core.hgk import (
    LABEL_BLOCK_PREFIX,
    HgkFeaturizer,
    cosine_normalize,
    featurize_collection,
    gram_from_features,
    gram_matrix,
    hgk_feature_map,
    iteration_prefix,
    restrict_depth,
    standardize_attributes,
    time_featurization,
    vectorize,
)


def _collection(count=8, seed=0, labels=False, d=3):
    rng = np.random.default_rng(seed)
    graphs = []
    for index in range(count):
        g = random_attributed_graph(int(rng.integers(3, 8)), 0.4, d, rng).with_class_label(index % 2)
        if labels:
            g = g.with_labels(rng.integers(2, size=g.node_count).tolist())
        graphs.append(g)
    return GraphCollection(graphs=graphs, name="toy")


# ========== 属性预处理 ==========

def test_standardize_two_values():
    c = GraphCollection(graphs=[AttributedGraph(node_count=2, attributes=[[1.0], [3.0]])])
    np.testing.assert_allclose(standardize_attributes(c)[0].attributes, [[-1.0], [1.0]])


def test_standardize_constant_dimension():
    c = GraphCollection(graphs=[
        AttributedGraph(node_count=2, attributes=[[5.0], [5.0]]),
        AttributedGraph(node_count=1, attributes=[[5.0]]),
    ])
    standardized = standardize_attributes(c)
    assert all((g.attributes == 0).all() for g in standardized.graphs)


def test_standardize_idempotent():
    once = standardize_attributes(_collection())
    twice = standardize_attributes(once)
    for a, b in zip(once.graphs, twice.graphs):
        np.testing.assert_allclose(a.attributes, b.attributes, atol=1e-12)


def test_standardize_requires_attributes(path3):
    with pytest.raises(PreconditionError):
        standardize_attributes(GraphCollection(graphs=[path3]))


# ========== 特征映射 ==========

def test_feature_map_scaling_and_prefixes(attributed_pair):
    g, _ = attributed_pair
    cfg = HgkConfig(iterations=4, base_kernel=BaseKernel.WL, wl_depth=0, seed=3)
    ctx = HgkFeaturizer(cfg)
    features = hgk_feature_map(g, cfg, ctx)
    assert all(key.split("/", 1)[0] in {"h1", "h2", "h3", "h4"} for key in features)
    for iteration in range(1, 5):
        block = {k: v for k, v in features.items() if k.startswith(iteration_prefix(iteration))}
        # 深度 0 的 WL：每轮计数之和等于节点数
        assert sum(block.values()) == pytest.approx(g.node_count * math.sqrt(1 / 4))


def test_feature_map_requires_same_configuration(attributed_pair):
    g, _ = attributed_pair
    ctx = HgkFeaturizer(HgkConfig(iterations=2))
    with pytest.raises(ValueError):
        hgk_feature_map(g, HgkConfig(iterations=3), ctx)


def test_feature_map_requires_attributes(path3):
    cfg = HgkConfig(iterations=2)
    with pytest.raises(PreconditionError):
        hgk_feature_map(path3, cfg, HgkFeaturizer(cfg))


def test_constant_attributes_reduce_to_discrete_kernel():
    g = AttributedGraph(node_count=4, edges={(0, 1), (1, 2), (2, 3)}, attributes=np.ones((4, 2)))
    h = AttributedGraph(node_count=3, edges={(0, 1), (1, 2), (0, 2)}, attributes=np.ones((3, 2)))
    cfg = HgkConfig(iterations=5, wl_depth=2, hash_mode=HashMode.SHARED, seed=1)
    ctx = HgkFeaturizer(cfg)
    estimate = dot(hgk_feature_map(g, cfg, ctx, 0), hgk_feature_map(h, cfg, ctx, 1))
    wl = WlContext()
    uniform_g, uniform_h = g.with_labels((0,) * 4), h.with_labels((0,) * 3)
    expected = dot(wl_feature_map(uniform_g, 2, wl), wl_feature_map(uniform_h, 2, wl))
    assert estimate == pytest.approx(expected)


@pytest.mark.parametrize("base", [BaseKernel.WL, BaseKernel.SP])
@pytest.mark.parametrize("mode", [HashMode.SHARED, HashMode.INDEPENDENT])
def test_dot_is_mean_of_iteration_dots(attributed_pair, base, mode):
    g, h = attributed_pair
    cfg = HgkConfig(iterations=7, base_kernel=base, wl_depth=2, hash_mode=mode, seed=4, standardize=False)
    ctx = HgkFeaturizer(cfg)
    combined = dot(ctx.feature_map(g, 0), ctx.feature_map(h, 1))
    per_iteration = sum(dot(ctx.iteration_block(g, 0, i), ctx.iteration_block(h, 1, i)) for i in range(1, 8)) / 7
    assert combined == pytest.approx(per_iteration, rel=1e-9)


def test_shared_context_recomputes_distances_per_graph():
    path = AttributedGraph(node_count=3, edges={(0, 1), (1, 2)}, attributes=np.zeros((3, 1)))
    triangle = AttributedGraph(node_count=3, edges={(0, 1), (1, 2), (0, 2)}, attributes=np.zeros((3, 1)))
    cfg = HgkConfig(iterations=1, base_kernel=BaseKernel.SP, standardize=False)
    expected = {iteration_prefix(1) + "sp|0|0|1": 6.0}

    ctx = HgkFeaturizer(cfg)
    hgk_feature_map(path, cfg, ctx)
    assert hgk_feature_map(triangle, cfg, ctx) == expected

    # 同一编号换成另一个图时同样重新计算
    ctx = HgkFeaturizer(cfg)
    hgk_feature_map(path, cfg, ctx, 0)
    assert hgk_feature_map(triangle, cfg, ctx, 0) == expected


def test_context_assigns_distinct_streams_per_graph(attributed_pair):
    g, h = attributed_pair
    cfg = HgkConfig(iterations=5, hash_mode=HashMode.INDEPENDENT, standardize=False)
    implicit = HgkFeaturizer(cfg)
    first, second = hgk_feature_map(g, cfg, implicit), hgk_feature_map(h, cfg, implicit)
    assert (implicit.graph_index(g), implicit.graph_index(h)) == (0, 1)
    assert hgk_feature_map(g, cfg, implicit) == first

    explicit = HgkFeaturizer(cfg)
    assert hgk_feature_map(g, cfg, explicit, 0) == first
    assert hgk_feature_map(h, cfg, explicit, 1) == second


def test_context_skips_claimed_indices(attributed_pair):
    g, h = attributed_pair
    copy = AttributedGraph(node_count=g.node_count, edges=g.edges, attributes=g.attributes)
    ctx = HgkFeaturizer(HgkConfig(hash_mode=HashMode.INDEPENDENT))
    assert ctx.graph_index(h, 0) == 0
    assert ctx.graph_index(g) == 1
    assert ctx.graph_index(copy) == 2
    with pytest.raises(ValueError):
        ctx.graph_index(g, -1)


def test_label_cont_wl_appends_unscaled_label_block():
    g = AttributedGraph(node_count=3, edges={(0, 1), (1, 2)}, labels=(0, 1, 0), attributes=np.eye(3))
    cfg = HgkConfig(iterations=4, wl_depth=1, label_mode=LabelMode.LABEL_CONT)
    features = hgk_feature_map(g, cfg, HgkFeaturizer(cfg))
    label_block = {k[len(LABEL_BLOCK_PREFIX):]: v for k, v in features.items() if k.startswith(LABEL_BLOCK_PREFIX)}
    assert label_block == wl_feature_map(g, 1, WlContext())


def test_label_cont_sp_uses_composite_labels():
    g = AttributedGraph(node_count=3, edges={(0, 1), (1, 2)}, labels=(0, 1, 0), attributes=np.ones((3, 1)))
    cfg = HgkConfig(iterations=1, base_kernel=BaseKernel.SP, label_mode=LabelMode.LABEL_CONT)
    features = hgk_feature_map(g, cfg, HgkFeaturizer(cfg))
    # 属性全相同时组合标签等价于离散标签，且没有单独的标签块
    assert not any(key.startswith(LABEL_BLOCK_PREFIX) for key in features)
    assert sum(features.values()) == pytest.approx(6.0)
    assert len(features) == 3


def test_label_mode_ignores_attributes(path3):
    cfg = HgkConfig(iterations=7, label_mode=LabelMode.LABEL, wl_depth=2)
    features = hgk_feature_map(path3, cfg, HgkFeaturizer(cfg))
    expected = wl_feature_map(path3, 2, WlContext()).prefixed(LABEL_BLOCK_PREFIX)
    assert features == expected


def test_featurize_collection_deterministic_and_thread_independent():
    collection = _collection(count=10)
    for mode in HashMode:
        cfg = HgkConfig(iterations=6, hash_mode=mode, seed=11)
        single = featurize_collection(collection, cfg, threads=1)
        again = featurize_collection(collection, cfg, threads=1)
        parallel = featurize_collection(collection, cfg, threads=3)
        assert single == again == parallel


def test_featurize_collection_seed_changes_features():
    collection = _collection(count=4)
    first = featurize_collection(collection, HgkConfig(iterations=3, seed=1))
    second = featurize_collection(collection, HgkConfig(iterations=3, seed=2))
    assert first != second


def test_featurize_collection_assigns_degree_labels():
    collection = _collection(count=3)
    cfg = HgkConfig(iterations=2, label_mode=LabelMode.LABEL_CONT)
    features = featurize_collection(collection, cfg)
    assert all(any(key.startswith(LABEL_BLOCK_PREFIX) for key in vector) for vector in features)


def test_featurize_empty_collection():
    with pytest.raises(ValueError):
        featurize_collection(GraphCollection(graphs=[]), HgkConfig())


def test_featurize_collection_missing_attributes(path3):
    with pytest.raises(PreconditionError):
        featurize_collection(GraphCollection(graphs=[path3]), HgkConfig(iterations=2))


def test_restrict_depth_drops_deeper_keys():
    collection = _collection(count=2, labels=True)
    cfg = HgkConfig(iterations=2, wl_depth=3, label_mode=LabelMode.LABEL_CONT)
    deep = featurize_collection(collection, cfg)[0]
    shallow = restrict_depth(deep, 1)
    assert all(int(key.split("/", 1)[1].split("|")[1]) <= 1 for key in shallow)
    assert set(shallow) <= set(deep)


# ========== gram 矩阵 ==========

def test_gram_symmetric_psd_unit_diagonal():
    collection = _collection(count=12, labels=True)
    for base in BaseKernel:
        for mode in (LabelMode.CONT, LabelMode.LABEL_CONT):
            cfg = HgkConfig(iterations=5, base_kernel=base, wl_depth=2, label_mode=mode, seed=4)
            gram = cosine_normalize(gram_matrix(collection, cfg))
            assert (gram == gram.T).all()
            assert np.linalg.eigvalsh(gram).min() >= -1e-8
            np.testing.assert_allclose(np.diag(gram), 1.0, atol=1e-12)


def test_gram_matches_pairwise_dot():
    collection = _collection(count=5)
    features = featurize_collection(collection, HgkConfig(iterations=3))
    gram = gram_from_features(features)
    for i in range(5):
        for j in range(5):
            assert gram[i, j] == pytest.approx(dot(features[i], features[j]))


def test_gram_empty_collection():
    with pytest.raises(ValueError):
        gram_matrix(GraphCollection(graphs=[]), HgkConfig())


def test_cosine_normalize_degenerate_row():
    k = np.array([[4.0, 0.0, 2.0], [0.0, 0.0, 0.0], [2.0, 0.0, 1.0]])
    normalized = cosine_normalize(k)
    np.testing.assert_allclose(normalized, [[1.0, 0.0, 1.0], [0.0, 1.0, 0.0], [1.0, 0.0, 1.0]])


def test_vectorize_registry_sorted():
    matrix, registry = vectorize([{"b": 1.0}, {"a": 2.0, "b": 3.0}])
    assert registry == ["a", "b"]
    np.testing.assert_array_equal(matrix.toarray(), [[0.0, 1.0], [2.0, 3.0]])


def test_time_featurization_rows():
    rows = time_featurization(_collection(count=3), HgkConfig(), [1, 2], runs=1)
    assert [iterations for iterations, _ in rows] == [1, 2]
    assert all(seconds >= 0 for _, seconds in rows)
