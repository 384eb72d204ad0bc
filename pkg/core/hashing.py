"""随机哈希模块：2-stable LSH 将连续属性映射为离散标签，支持共享与独立两种抽样方式。"""

from __future__ import annotations

import logging
import math
import threading
from dataclasses import dataclass
from typing import Dict, Hashable, Optional

import numpy as np
from scipy import integrate, stats

from .config import HashMode
from .graph import AttributedGraph

logger = logging.getLogger(__name__)

# SeedSequence 的键空间标记，区分两种模式的随机流
_SHARED_STREAM = 1
_INDEPENDENT_STREAM = 2


@dataclass(frozen=True, eq=False)
class StableHashFunction:
    """一个 2-stable LSH 函数：h(x) = floor((<a, x> + b) / r)。"""
    projection: np.ndarray
    offset: float
    width_r: float

    def __post_init__(self):
        if not self.width_r > 0:
            raise ValueError(f"width_r must be positive, got {self.width_r}")
        if not 0.0 <= self.offset < self.width_r:
            raise ValueError(f"offset must lie in [0, {self.width_r}), got {self.offset}")
        projection = np.array(self.projection, dtype=float)
        if projection.ndim != 1 or projection.size < 1:
            raise ValueError("projection must be a non-empty vector")
        projection.setflags(write=False)
        object.__setattr__(self, "projection", projection)

    @property
    def dim(self) -> int:
        return int(self.projection.size)

    def __call__(self, x: np.ndarray) -> int:
        return apply_hash(self, x)


@dataclass(frozen=True)
class SeedSpec:
    """确定性种子派生规则。

    每轮种子由 (master_seed, 轮次) 派生；独立模式下每个 (轮次, 图) 拥有一条不相交的随机流，
    图内各节点的哈希函数按节点顺序从该流中依次抽取。
    """
    master_seed: int = 0

    def __post_init__(self):
        if not 0 <= self.master_seed < 2 ** 64:
            raise ValueError(f"master_seed must be a 64-bit non-negative integer, got {self.master_seed}")

    def iteration_sequence(self, iteration: int) -> np.random.SeedSequence:
        return np.random.SeedSequence([self.master_seed, _SHARED_STREAM, iteration])

    def stream(self, iteration: int, graph_index: Optional[int] = None) -> np.random.Generator:
        """共享模式（graph_index 为 None）返回轮次流，否则返回 (轮次, 图) 子流。"""
        if graph_index is None:
            return np.random.default_rng(self.iteration_sequence(iteration))
        return np.random.default_rng(
            np.random.SeedSequence([self.master_seed, _INDEPENDENT_STREAM, iteration, graph_index])
        )


class LabelAlphabet:
    """将哈希输出（或组合标签）压缩为稠密整数字母表，线程安全。"""

    def __init__(self):
        self._codes: Dict[Hashable, int] = {}
        self._lock = threading.Lock()

    def intern(self, value: Hashable) -> int:
        code = self._codes.get(value)
        if code is not None:
            return code
        with self._lock:
            code = self._codes.get(value)
            if code is None:
                code = len(self._codes)
                self._codes[value] = code
            return code

    def __len__(self) -> int:
        return len(self._codes)


# ========== 哈希函数 ==========

def sample_lsh(d: int, r: float, rng: np.random.Generator) -> StableHashFunction:
    """抽取一个 2-stable LSH 函数：投影向量 ~ N(0,1)^d，偏移 ~ U[0, r)。"""
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    if not r > 0:
        raise ValueError(f"interval width r must be positive, got {r}")
    projection = rng.standard_normal(d)
    offset = float(rng.uniform(0.0, r))
    # uniform 在浮点舍入下可能恰好取到 r
    if offset >= r:
        offset = 0.0
    return StableHashFunction(projection=projection, offset=offset, width_r=float(r))


def apply_hash(f: StableHashFunction, x: np.ndarray) -> int:
    """floor((<projection, x> + offset) / r)，向负无穷取整。"""
    vector = np.asarray(x, dtype=float)
    if vector.shape != f.projection.shape:
        raise ValueError(f"attribute dimension {vector.shape} does not match projection dimension {f.projection.shape}")
    return math.floor((float(np.dot(f.projection, vector)) + f.offset) / f.width_r)


def hash_attributes(f: StableHashFunction, attributes: np.ndarray) -> np.ndarray:
    """对属性矩阵的每一行应用同一个哈希函数。"""
    values = (np.asarray(attributes, dtype=float) @ f.projection + f.offset) / f.width_r
    return np.floor(values).astype(np.int64)


def hash_graph(
    g: AttributedGraph,
    mode: HashMode,
    r: float,
    rng: np.random.Generator,
    shared: Optional[StableHashFunction] = None,
) -> AttributedGraph:
    """将图的属性哈希为离散标签，属性保留以便检查。

    共享模式使用一个函数（可由调用方传入本轮已抽取的函数）；
    独立模式按节点顺序为每个属性抽取新函数。
    """
    attributes = g.require_attributes()
    mode = HashMode(mode)
    if g.node_count == 0:
        return g.with_labels(())
    d = attributes.shape[1]

    if mode is HashMode.SHARED:
        f = shared if shared is not None else sample_lsh(d, r, rng)
        if f.dim != d:
            raise ValueError(f"shared hash function has dimension {f.dim}, attributes have {d}")
        labels = hash_attributes(f, attributes)
        return g.with_labels(int(label) for label in labels)

    labels = [apply_hash(sample_lsh(d, r, rng), attributes[v]) for v in range(g.node_count)]
    return g.with_labels(labels)


# ========== 碰撞概率 ==========

def estimate_collision_kernel(
    x: np.ndarray,
    y: np.ndarray,
    r: float,
    mode: HashMode,
    trials: int,
    rng: np.random.Generator,
) -> float:
    """Monte-Carlo 估计 Pr[h1(x) = h2(y)]。

    共享模式下 h1 = h2，独立模式下 h1、h2 独立抽取。
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"x and y must be vectors of equal dimension, got {x.shape} and {y.shape}")
    d = x.size
    mode = HashMode(mode)

    projections = rng.standard_normal((trials, d))
    offsets = rng.uniform(0.0, r, trials)
    hx = np.floor((projections @ x + offsets) / r)
    if mode is HashMode.SHARED:
        hy = np.floor((projections @ y + offsets) / r)
    else:
        other_projections = rng.standard_normal((trials, d))
        other_offsets = rng.uniform(0.0, r, trials)
        hy = np.floor((other_projections @ y + other_offsets) / r)
    return float(np.mean(hx == hy))


def stable_collision_probability(distance: float, r: float) -> float:
    """共享函数下 2-stable LSH 的理论碰撞概率。

    p(c) = ∫_0^r (1/c) f(t/c) (1 - t/r) dt，f 为 |N(0,1)| 的密度，c = ||x - y||。
    """
    if not r > 0:
        raise ValueError(f"interval width r must be positive, got {r}")
    if distance < 0:
        raise ValueError(f"distance must be non-negative, got {distance}")
    if distance == 0:
        return 1.0
    c = float(distance)

    def integrand(t: float) -> float:
        return (2.0 / c) * stats.norm.pdf(t / c) * (1.0 - t / r)

    value, _ = integrate.quad(integrand, 0.0, r)
    return float(value)
