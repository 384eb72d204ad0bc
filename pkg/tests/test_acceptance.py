"""端到端验收：显式/隐式一致性、Hoeffding 区间、收敛、运行时间、Synthie 分类、PSD 与确定性。"""

import time

import numpy as np
import pytest

from core.base_kernels import sp_feature_map
from core.config import BaseKernel, CvConfig, HashMode, HgkConfig, LabelMode, Settings, SynthieParams
from core.datagen import gen_synthie, random_labeled_graph
from core.evaluation import cross_validate
from core.graph import GraphCollection
from core.hgk import cosine_normalize, gram_from_features, gram_matrix, time_featurization
from core.oracles import (
    check_convergence,
    check_hoeffding,
    check_sp_equivalence,
    check_wl_equivalence,
    connected_attributed_graph,
)
from core.system import HashGraphKernelSystem


def _assert_valid_gram(gram: np.ndarray) -> None:
    normalized = cosine_normalize(gram)
    assert (normalized == normalized.T).all()
    assert np.linalg.eigvalsh(normalized).min() >= -1e-8
    np.testing.assert_allclose(np.diag(normalized), 1.0, atol=1e-12)


def _independent_pairs(seed: int = 0, count: int = 5):
    rng = np.random.default_rng(seed)
    return [
        (
            connected_attributed_graph(int(rng.integers(3, 7)), 2, rng),
            connected_attributed_graph(int(rng.integers(3, 7)), 2, rng),
        )
        for _ in range(count)
    ]


def _independent_cfg() -> HgkConfig:
    return HgkConfig(
        iterations=50,
        base_kernel=BaseKernel.SP,
        hash_mode=HashMode.INDEPENDENT,
        label_mode=LabelMode.CONT,
        standardize=False,
        seed=0,
    )


def test_sp_explicit_equals_implicit_exactly():
    started = time.perf_counter()
    result = check_sp_equivalence(100, np.random.default_rng(0))
    assert result.passed, result.detail
    assert time.perf_counter() - started < 10


def test_sp_gram_of_random_graphs_is_valid():
    rng = np.random.default_rng(0)
    graphs = [random_labeled_graph(int(rng.integers(2, 9)), 0.3, 3, rng) for _ in range(100)]
    _assert_valid_gram(gram_from_features([sp_feature_map(g) for g in graphs]))


def test_wl_explicit_equals_implicit_exactly():
    started = time.perf_counter()
    result = check_wl_equivalence(50, np.random.default_rng(1))
    assert result.passed, result.detail
    assert time.perf_counter() - started < 60


@pytest.mark.slow
def test_hoeffding_band_and_convergence():
    pairs = _independent_pairs()
    cfg = _independent_cfg()
    started = time.perf_counter()
    hoeffding, oracles = check_hoeffding(pairs, cfg, repetitions=200, oracle_trials=100_000)
    assert hoeffding.passed, hoeffding.detail
    assert time.perf_counter() - started < 300

    convergence = check_convergence(pairs, oracles, cfg, repetitions=200, iterations=(10, 40), max_ratio=0.6)
    assert convergence.passed, convergence.detail


@pytest.mark.slow
def test_runtime_linear_in_iterations():
    collection = gen_synthie(SynthieParams(graphs_per_superclass=100, seed=3))
    assert len(collection) == 200
    cfg = HgkConfig(wl_depth=3, seed=3)
    rows = dict(time_featurization(collection, cfg, [10, 40], runs=3))
    ratio = rows[40] / rows[10]
    assert 2.5 <= ratio <= 6.0, f"time ratio {ratio:.2f}"


@pytest.mark.slow
def test_synthie_hashed_attributes_beat_degree_labels():
    collection = gen_synthie(SynthieParams(graphs_per_superclass=100, seed=0))
    cv = CvConfig(folds=10, repetitions=1, inner_folds=3, select_depth=True, seed=0)
    started = time.perf_counter()
    hashed = cross_validate(collection, HgkConfig(iterations=20, label_mode=LabelMode.LABEL_CONT, seed=0), cv)
    discrete = cross_validate(collection, HgkConfig(label_mode=LabelMode.LABEL, seed=0), cv)
    assert hashed.mean_accuracy >= discrete.mean_accuracy + 20.0, (hashed.mean_accuracy, discrete.mean_accuracy)
    assert time.perf_counter() - started < 900

    for cfg in (
        HgkConfig(iterations=20, label_mode=LabelMode.LABEL_CONT, wl_depth=4),
        HgkConfig(label_mode=LabelMode.LABEL, wl_depth=4),
    ):
        _assert_valid_gram(gram_matrix(collection.subset(range(0, 200, 4)), cfg))


def test_hgk_grams_are_valid():
    collection = gen_synthie(SynthieParams(graphs_per_superclass=10, variants_per_seed_set=20, seed=5))
    for base in BaseKernel:
        for mode in HashMode:
            cfg = HgkConfig(iterations=10, base_kernel=base, hash_mode=mode, seed=5)
            _assert_valid_gram(gram_matrix(collection, cfg))


@pytest.mark.parametrize("hash_mode", ["shared", "independent"])
@pytest.mark.parametrize("base_kernel", ["wl", "sp"])
def test_outputs_reproducible_byte_for_byte(tmp_path, hash_mode, base_kernel):
    params = SynthieParams(graphs_per_superclass=6, variants_per_seed_set=10, seed=2)
    outputs = []
    for run in range(2):
        settings = Settings(
            data_dir=str(tmp_path / f"run{run}"),
            seed=9,
            iterations=4,
            base_kernel=base_kernel,
            hash_mode=hash_mode,
            threads=1 + run,
        )
        system = HashGraphKernelSystem(settings)
        directory = system.generate_synthie(params, "synthie")
        collection = system.load_collection(directory, "Synthie")
        outputs.append((
            system.featurize(collection, "features.txt").read_bytes(),
            system.gram(collection, "gram.csv").read_bytes(),
            (directory / "Synthie_node_attributes.txt").read_bytes(),
        ))
    assert outputs[0] == outputs[1]
