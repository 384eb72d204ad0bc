"""暴力 oracle：隐式最短路径核与基于双射的隐式 WL 递推，用作小规模下的真值。"""

from __future__ import annotations

import hashlib
import logging
import math
import time
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from .base_kernels import UNREACHABLE, WlContext, apsp, dot, sp_feature_map, wl_feature_map
from .config import BaseKernel, HashMode, HgkConfig, LabelMode
from .datagen import random_attributed_graph, random_bounded_degree_graph, random_labeled_graph
from .errors import OracleRefusal, PreconditionError
from .graph import AttributedGraph
from .hashing import estimate_collision_kernel
from .hgk import HgkFeaturizer

logger = logging.getLogger(__name__)

DEFAULT_DEG_CAP = 5
DEFAULT_SIZE_CAP = 8
DEFAULT_LAMBDAS = (0.05, 0.1, 0.2)


# ========== 属性核与距离核 ==========

class AttributeKernel:
    """节点注释（属性向量或离散标签）上的对称核，取值于 [0, 1]。"""

    name = "attribute"

    def __call__(self, x, y) -> float:
        raise NotImplementedError

    def matrix(self, xs: Sequence, ys: Sequence) -> np.ndarray:
        return np.array([[self(x, y) for y in ys] for x in xs], dtype=float).reshape(len(xs), len(ys))


class DiracKernel(AttributeKernel):
    """k(x, y) = 1 当且仅当 x = y。"""

    name = "dirac"

    def __call__(self, x, y) -> float:
        return 1.0 if np.array_equal(np.asarray(x), np.asarray(y)) else 0.0

    def matrix(self, xs: Sequence, ys: Sequence) -> np.ndarray:
        if len(xs) == 0 or len(ys) == 0:
            return np.zeros((len(xs), len(ys)))
        a, b = np.asarray(xs), np.asarray(ys)
        if a.ndim == 1 and b.ndim == 1:
            return np.equal.outer(a, b).astype(float)
        return (a[:, None, :] == b[None, :, :]).all(axis=-1).astype(float)


class ConstantKernel(AttributeKernel):
    name = "constant"

    def __init__(self, value: float = 1.0):
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"constant kernel value must lie in [0, 1], got {value}")
        self.value = value

    def __call__(self, x, y) -> float:
        return self.value

    def matrix(self, xs: Sequence, ys: Sequence) -> np.ndarray:
        return np.full((len(xs), len(ys)), self.value)


class GaussianRbfKernel(AttributeKernel):
    """k(x, y) = exp(-γ ||x - y||²)，仅用于与 RBF 比较实验保持一致。"""

    name = "rbf"

    def __init__(self, gamma: float = 1.0):
        if not gamma > 0:
            raise ValueError(f"gamma must be positive, got {gamma}")
        self.gamma = gamma

    def __call__(self, x, y) -> float:
        diff = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        return float(np.exp(-self.gamma * np.dot(diff, diff)))


class CollisionKernel(AttributeKernel):
    """由 Monte-Carlo 碰撞概率定义的 k_A(x, y) = Pr[h1(x) = h2(y)]，结果按无序对缓存。

    每个属性对的随机流由 (seed, 属性对内容) 派生，与调用顺序无关。
    """

    name = "collision"

    def __init__(self, r: float = 1.0, mode: HashMode = HashMode.INDEPENDENT, trials: int = 100_000, seed: int = 0):
        self.r = r
        self.mode = HashMode(mode)
        self.trials = trials
        self.seed = seed
        self._table: Dict[Tuple[bytes, bytes], float] = {}

    def _key(self, x: np.ndarray, y: np.ndarray) -> Tuple[bytes, bytes]:
        a = np.ascontiguousarray(x, dtype=float).tobytes()
        b = np.ascontiguousarray(y, dtype=float).tobytes()
        return (a, b) if a <= b else (b, a)

    def __call__(self, x, y) -> float:
        key = self._key(x, y)
        value = self._table.get(key)
        if value is None:
            digest = hashlib.blake2b(key[0] + b"|" + key[1], digest_size=16).digest()
            entropy = [self.seed, *np.frombuffer(digest, dtype=np.uint32).tolist()]
            rng = np.random.default_rng(np.random.SeedSequence(entropy))
            first = np.frombuffer(key[0], dtype=float)
            second = np.frombuffer(key[1], dtype=float)
            value = estimate_collision_kernel(first, second, self.r, self.mode, self.trials, rng)
            self._table[key] = value
        return value

    def __len__(self) -> int:
        return len(self._table)


class DistanceKernel:
    """最短路径长度上的对称核，任一输入为 ∞ 时取 0。"""

    def __call__(self, a: int, b: int) -> float:
        raise NotImplementedError


class DiracDistanceKernel(DistanceKernel):
    def __call__(self, a: int, b: int) -> float:
        if a == UNREACHABLE or b == UNREACHABLE:
            return 0.0
        return 1.0 if a == b else 0.0


def node_annotations(g: AttributedGraph, use_labels: bool = False) -> Sequence:
    """节点注释：有属性时使用属性向量，否则（或 use_labels 时）使用离散标签。"""
    if g.attributes is not None and not use_labels:
        return list(g.attributes)
    if g.labels is None:
        raise PreconditionError("Graph has neither attributes nor labels to compare")
    return list(g.labels)


# ========== 隐式最短路径核 ==========

def implicit_sp(
    g: AttributedGraph,
    h: AttributedGraph,
    ka: AttributeKernel,
    kd: DistanceKernel,
    use_labels: bool = False,
) -> float:
    """Σ_{(u,v),(w,z)} k_A(u, w) · k_A(v, z) · k_d(d_uv, d_wz)，u≠v、w≠z 为有序对。

    按距离取值分组求和：对距离 a、b，贡献为 k_d(a, b) · Σ (K_Aᵀ M_G^a K_A) ∘ M_H^b。
    """
    if g.node_count < 2 or h.node_count < 2:
        return 0.0
    cross = ka.matrix(node_annotations(g, use_labels), node_annotations(h, use_labels))
    distances_g, distances_h = apsp(g), apsp(h)
    values_g = sorted(set(distances_g[distances_g > 0].tolist()))
    values_h = sorted(set(distances_h[distances_h > 0].tolist()))

    total = 0.0
    for a in values_g:
        propagated = cross.T @ (distances_g == a).astype(float) @ cross
        for b in values_h:
            weight = kd(a, b)
            if weight:
                total += weight * float(np.sum(propagated * (distances_h == b)))
    return total


# ========== 隐式 WL 子树核 ==========

def _check_caps(g: AttributedGraph, deg_cap: int, size_cap: int) -> None:
    if g.node_count > size_cap:
        raise OracleRefusal(f"graph has {g.node_count} nodes, exceeding size_cap={size_cap}")
    if g.max_degree() > deg_cap:
        raise OracleRefusal(f"graph has maximum degree {g.max_degree()}, exceeding deg_cap={deg_cap}")


def _bijection_average(
    left: Sequence[int],
    right: Sequence[int],
    previous: np.ndarray,
) -> Tuple[int, float]:
    """枚举 N(v)→N(v') 的双射（剪枝 k_{i-1}=0 的配对），返回 (双射数, 乘积之和)。"""
    count = 0
    total = 0.0
    used = [False] * len(right)

    def extend(position: int, product: float) -> None:
        nonlocal count, total
        if position == len(left):
            count += 1
            total += product
            return
        w = left[position]
        for index, w_prime in enumerate(right):
            if used[index]:
                continue
            value = previous[w, w_prime]
            if value <= 0:
                continue
            used[index] = True
            extend(position + 1, product * value)
            used[index] = False

    extend(0, 1.0)
    return count, total


def implicit_wl_tables(
    g: AttributedGraph,
    h: AttributedGraph,
    depth: int,
    ka: AttributeKernel,
    deg_cap: int = DEFAULT_DEG_CAP,
    size_cap: int = DEFAULT_SIZE_CAP,
    use_labels: bool = False,
) -> List[np.ndarray]:
    """返回 k_0..k_depth 的节点对矩阵。"""
    if depth < 0:
        raise ValueError(f"depth must be >= 0, got {depth}")
    _check_caps(g, deg_cap, size_cap)
    _check_caps(h, deg_cap, size_cap)

    tables = [ka.matrix(node_annotations(g, use_labels), node_annotations(h, use_labels))]
    neighbors_g = [sorted(g.neighbors(v)) for v in range(g.node_count)]
    neighbors_h = [sorted(h.neighbors(v)) for v in range(h.node_count)]
    for _ in range(depth):
        previous = tables[-1]
        current = np.zeros_like(previous)
        for v in range(g.node_count):
            for v_prime in range(h.node_count):
                if previous[v, v_prime] <= 0:
                    continue
                left, right = neighbors_g[v], neighbors_h[v_prime]
                if len(left) != len(right):
                    continue
                count, total = _bijection_average(left, right, previous)
                if count:
                    current[v, v_prime] = previous[v, v_prime] * total / count
        tables.append(current)
    return tables


def implicit_wl(
    g: AttributedGraph,
    h: AttributedGraph,
    depth: int,
    ka: AttributeKernel,
    deg_cap: int = DEFAULT_DEG_CAP,
    size_cap: int = DEFAULT_SIZE_CAP,
    use_labels: bool = False,
) -> float:
    """Σ_{i=0..depth} Σ_{v,v'} k_i(v, v')。

    k_0 为节点注释上的 k_A；k_i(v,v') = k_{i-1}(v,v') · 平均_{R∈M_i} Π_{(w,w')∈R} k_{i-1}(w,w')，
    M_i 为空时取 0。双射枚举为阶乘复杂度，超出度数或规模上限时拒绝执行。
    """
    tables = implicit_wl_tables(g, h, depth, ka, deg_cap, size_cap, use_labels)
    return float(sum(table.sum() for table in tables))


# ========== 近似误差实验 ==========

def kernel_scale(g: AttributedGraph, h: AttributedGraph, cfg: HgkConfig) -> float:
    """单轮基核取值的上界，用于把核值归一化到 [0, 1]。"""
    if cfg.base_kernel is BaseKernel.SP:
        scale = g.node_count * (g.node_count - 1) * h.node_count * (h.node_count - 1)
    else:
        scale = (cfg.wl_depth + 1) * g.node_count * h.node_count
    return float(max(scale, 1))


@dataclass
class LambdaRow:
    lam: float
    bound: float
    exceedance: float
    standard_error: float
    passed: bool


@dataclass
class ApproxReport:
    """近似误差实验的结果。"""
    repetitions: int
    iterations: int
    mean: float
    std: Optional[float]
    oracle: float
    mean_abs_error: float
    rows: List[LambdaRow] = field(default_factory=list)
    samples: List[float] = field(default_factory=list)

    @property
    def std_defined(self) -> bool:
        return self.std is not None

    @property
    def passed(self) -> bool:
        return all(row.passed for row in self.rows)

    def to_rows(self) -> List[Tuple]:
        return [
            (row.lam, row.bound, row.exceedance, row.standard_error, row.passed)
            for row in self.rows
        ]

    def to_dict(self) -> dict:
        return {
            "repetitions": self.repetitions,
            "iterations": self.iterations,
            "mean": self.mean,
            "std": self.std,
            "std_defined": self.std_defined,
            "oracle": self.oracle,
            "mean_abs_error": self.mean_abs_error,
            "passed": self.passed,
            "lambdas": [row.__dict__ for row in self.rows],
        }


def hoeffding_bound(lam: float, iterations: int) -> float:
    return 2.0 * math.exp(-2.0 * lam * lam * iterations)


def oracle_value(
    g: AttributedGraph,
    h: AttributedGraph,
    cfg: HgkConfig,
    ka: Optional[AttributeKernel] = None,
    trials: int = 100_000,
) -> float:
    """归一化到 [0, 1] 的隐式核值，k_A 默认取独立模式下的 Monte-Carlo 碰撞核。"""
    ka = ka or CollisionKernel(cfg.width_r, HashMode.INDEPENDENT, trials, seed=cfg.seed)
    if cfg.base_kernel is BaseKernel.SP:
        value = implicit_sp(g, h, ka, DiracDistanceKernel())
    else:
        value = implicit_wl(g, h, cfg.wl_depth, ka)
    return value / kernel_scale(g, h, cfg)


def sample_estimates(
    g: AttributedGraph,
    h: AttributedGraph,
    cfg: HgkConfig,
    repetitions: int,
) -> List[float]:
    """R 次独立运行的归一化估计值 Φ(G)ᵀΦ(H)；第 k 次运行使用种子 cfg.seed + k。"""
    scale = kernel_scale(g, h, cfg)
    samples = []
    for repetition in range(repetitions):
        featurizer = HgkFeaturizer(replace(cfg, seed=cfg.seed + repetition, standardize=False))
        value = dot(featurizer.feature_map(g, 0), featurizer.feature_map(h, 1))
        samples.append(value / scale)
    return samples


def approx_error_experiment(
    g: AttributedGraph,
    h: AttributedGraph,
    cfg: HgkConfig,
    repetitions: int,
    lambdas: Sequence[float] = DEFAULT_LAMBDAS,
    oracle_trials: int = 100_000,
    oracle: Optional[float] = None,
) -> ApproxReport:
    """比较 R 次运行中 |Φ(G)ᵀΦ(H) - k_Imp| ≥ λ 的频率与 Hoeffding 上界 2exp(-2λ²I)。

    要求独立哈希模式（定理的前提），核值先归一化到 [0, 1]。
    """
    cfg.validate()
    if cfg.hash_mode is not HashMode.INDEPENDENT:
        raise OracleRefusal("approximation guarantee requires independent hash mode; shared mode violates it")
    if cfg.label_mode is not LabelMode.CONT:
        raise OracleRefusal("approximation guarantee covers hashed attributes only (label mode 'cont')")
    if repetitions < 1:
        raise ValueError(f"repetitions must be >= 1, got {repetitions}")

    if oracle is None:
        oracle = oracle_value(g, h, cfg, trials=oracle_trials)
    samples = sample_estimates(g, h, cfg, repetitions)
    values = np.array(samples)
    errors = np.abs(values - oracle)

    std: Optional[float] = None
    if repetitions > 1:
        std = float(values.std(ddof=1))
    else:
        logger.warning("Single repetition: standard deviation is undefined")

    rows = []
    for lam in lambdas:
        bound = hoeffding_bound(lam, cfg.iterations)
        p = min(bound, 1.0)
        standard_error = math.sqrt(p * (1.0 - p) / repetitions)
        exceedance = float(np.mean(errors >= lam))
        rows.append(LambdaRow(lam, bound, exceedance, standard_error, exceedance <= bound + 3.0 * standard_error))

    report = ApproxReport(
        repetitions=repetitions,
        iterations=cfg.iterations,
        mean=float(values.mean()),
        std=std,
        oracle=float(oracle),
        mean_abs_error=float(errors.mean()),
        rows=rows,
        samples=samples,
    )
    logger.info(
        f"Approximation experiment: mean={report.mean:.5f} oracle={report.oracle:.5f} "
        f"mean|err|={report.mean_abs_error:.5f} passed={report.passed}"
    )
    return report


def variance_ratio_experiment(
    g: AttributedGraph,
    h: AttributedGraph,
    cfg: HgkConfig,
    iterations: Tuple[int, int] = (10, 40),
    repetitions: int = 200,
) -> Dict[str, float]:
    """两个迭代次数下估计值的经验方差及其比值（期望约为 I 的比值）。"""
    low, high = iterations
    var_low = float(np.var(sample_estimates(g, h, replace(cfg, iterations=low), repetitions), ddof=1))
    var_high = float(np.var(sample_estimates(g, h, replace(cfg, iterations=high), repetitions), ddof=1))
    ratio = var_low / var_high if var_high > 0 else math.inf
    return {"var_low": var_low, "var_high": var_high, "ratio": ratio}


# ========== 一致性检查套件 ==========

@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def connected_attributed_graph(n: int, d: int, rng: np.random.Generator, p: float = 0.5) -> AttributedGraph:
    """带属性的小型连通随机图（重复抽样直到连通）。"""
    while True:
        g = random_attributed_graph(n, p, d, rng)
        if n == 1 or nx.is_connected(g.to_networkx()):
            return g


def check_sp_equivalence(graph_count: int, rng: np.random.Generator) -> CheckResult:
    """显式 SP 特征的点积与 Dirac/Dirac 隐式 SP 核逐对严格相等。"""
    started = time.perf_counter()
    graphs = [random_labeled_graph(int(rng.integers(1, 9)), 0.3, 3, rng) for _ in range(graph_count)]
    features = [sp_feature_map(g) for g in graphs]
    ka, kd = DiracKernel(), DiracDistanceKernel()
    mismatches = 0
    for i in range(graph_count):
        for j in range(i, graph_count):
            if dot(features[i], features[j]) != implicit_sp(graphs[i], graphs[j], ka, kd):
                mismatches += 1
    pairs = graph_count * (graph_count + 1) // 2
    return CheckResult("sp_explicit_equals_implicit", mismatches == 0, f"{mismatches}/{pairs} mismatches",
                       time.perf_counter() - started)


def check_wl_equivalence(pair_count: int, rng: np.random.Generator) -> CheckResult:
    """显式 WL 特征的点积与 Dirac 隐式 WL 核严格相等。"""
    started = time.perf_counter()
    mismatches = []
    for index in range(pair_count):
        depth = int(rng.integers(0, 3))
        g = random_bounded_degree_graph(int(rng.integers(1, 7)), 0.5, 3, 2, rng)
        h = random_bounded_degree_graph(int(rng.integers(1, 7)), 0.5, 3, 2, rng)
        ctx = WlContext()
        explicit = dot(wl_feature_map(g, depth, ctx), wl_feature_map(h, depth, ctx))
        implicit = implicit_wl(g, h, depth, DiracKernel())
        if explicit != implicit:
            mismatches.append((index, explicit, implicit))
    detail = f"{len(mismatches)}/{pair_count} mismatches"
    if mismatches:
        detail += f" (first: pair {mismatches[0][0]}, explicit={mismatches[0][1]}, implicit={mismatches[0][2]})"
    return CheckResult("wl_explicit_equals_implicit", not mismatches, detail, time.perf_counter() - started)


def check_hoeffding(
    pairs: Sequence[Tuple[AttributedGraph, AttributedGraph]],
    cfg: HgkConfig,
    repetitions: int,
    oracle_trials: int,
) -> Tuple[CheckResult, List[float]]:
    """各图对在每个 λ 下的超限频率不超过 Hoeffding 上界加 3 个二项标准误。"""
    started = time.perf_counter()
    failures = []
    oracles = []
    for index, (g, h) in enumerate(pairs):
        report = approx_error_experiment(g, h, cfg, repetitions, oracle_trials=oracle_trials)
        oracles.append(report.oracle)
        failures.extend((index, row.lam) for row in report.rows if not row.passed)
    detail = f"{len(failures)} failing (pair, lambda) cells over {len(pairs)} pairs"
    return CheckResult("hoeffding_band", not failures, detail, time.perf_counter() - started), oracles


def check_convergence(
    pairs: Sequence[Tuple[AttributedGraph, AttributedGraph]],
    oracles: Sequence[float],
    cfg: HgkConfig,
    repetitions: int,
    iterations: Tuple[int, int] = (10, 40),
    max_ratio: float = 0.6,
) -> CheckResult:
    """I 从 10 增加到 40 时平均绝对误差至少降到 0.6 倍。"""
    started = time.perf_counter()
    errors = {}
    for point in iterations:
        point_cfg = replace(cfg, iterations=point)
        per_pair = [
            float(np.mean(np.abs(np.array(sample_estimates(g, h, point_cfg, repetitions)) - oracle)))
            for (g, h), oracle in zip(pairs, oracles)
        ]
        errors[point] = float(np.mean(per_pair))
    low, high = iterations
    ratio = errors[high] / errors[low] if errors[low] > 0 else 0.0
    detail = f"mean|err| I={low}: {errors[low]:.5f}, I={high}: {errors[high]:.5f}, ratio={ratio:.3f}"
    return CheckResult("convergence_in_iterations", ratio <= max_ratio, detail, time.perf_counter() - started)


def oracle_check_suite(
    seed: int = 0,
    width_r: float = 1.0,
    quick: bool = False,
) -> List[CheckResult]:
    """运行显式/隐式一致性与 Hoeffding 检查；quick 模式缩小规模。"""
    rng = np.random.default_rng(seed)
    graph_count = 30 if quick else 100
    wl_pairs = 20 if quick else 50
    pair_count = 2 if quick else 5
    repetitions = 60 if quick else 200
    oracle_trials = 20_000 if quick else 100_000

    results = [check_sp_equivalence(graph_count, rng), check_wl_equivalence(wl_pairs, rng)]

    cfg = HgkConfig(
        iterations=50,
        base_kernel=BaseKernel.SP,
        width_r=width_r,
        hash_mode=HashMode.INDEPENDENT,
        label_mode=LabelMode.CONT,
        seed=seed,
        standardize=False,
    )
    pairs = [
        (
            connected_attributed_graph(int(rng.integers(3, 7)), 2, rng),
            connected_attributed_graph(int(rng.integers(3, 7)), 2, rng),
        )
        for _ in range(pair_count)
    ]
    hoeffding, oracles = check_hoeffding(pairs, cfg, repetitions, oracle_trials)
    results.append(hoeffding)
    results.append(check_convergence(pairs, oracles, cfg, repetitions))

    for result in results:
        status = "PASS" if result.passed else "FAIL"
        logger.info(f"{result.name:<30} {status}  {result.detail} ({result.seconds:.1f}s)")
    return results
