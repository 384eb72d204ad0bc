"""分类评估：显式特征上的线性 SVM（随机次梯度）与分层交叉验证。"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from joblib import Parallel, delayed
from scipy.sparse import csr_matrix, hstack, issparse
from sklearn.feature_extraction import DictVectorizer
from sklearn.metrics import accuracy_score
from sklearn.model_selection import StratifiedKFold

from .base_kernels import FeatureVector
from .config import BaseKernel, CvConfig, HgkConfig
from .errors import TrainingError
from .graph import GraphCollection
from .hgk import featurize_collection, normalize_rows, restrict_depth, time_featurization, vectorize

logger = logging.getLogger(__name__)

DEFAULT_EPOCHS = 30
DEFAULT_BATCH_SIZE = 8


# ========== 线性 SVM ==========

@dataclass
class LinearSvmModel:
    """一对多线性模型：每个类别一列权重，最后一行为偏置特征的权重。"""
    classes: np.ndarray
    weights: np.ndarray
    vectorizer: Optional[DictVectorizer] = None

    def _design(self, features: Union[csr_matrix, Sequence[FeatureVector]]) -> csr_matrix:
        if issparse(features):
            matrix = csr_matrix(features)
        else:
            if self.vectorizer is None:
                raise ValueError("model was trained on a matrix; pass a matrix to predict")
            matrix = normalize_rows(csr_matrix(self.vectorizer.transform(features)))
        return _with_bias(matrix)

    def decision_function(self, features: Union[csr_matrix, Sequence[FeatureVector]]) -> np.ndarray:
        return np.asarray(self._design(features) @ self.weights)

    def predict(self, features: Union[csr_matrix, Sequence[FeatureVector]]) -> np.ndarray:
        return self.classes[np.argmax(self.decision_function(features), axis=1)]

    def score(self, features: Union[csr_matrix, Sequence[FeatureVector]], labels: Sequence[int]) -> float:
        return float(accuracy_score(np.asarray(labels), self.predict(features)))


def _with_bias(matrix: csr_matrix) -> csr_matrix:
    ones = csr_matrix(np.ones((matrix.shape[0], 1)))
    return csr_matrix(hstack([matrix, ones], format="csr"))


def train_linear_svm_matrix(
    matrix: csr_matrix,
    labels: Sequence[int],
    C: float,
    rng: np.random.Generator,
    epochs: int = DEFAULT_EPOCHS,
    batch_size: int = DEFAULT_BATCH_SIZE,
) -> LinearSvmModel:
    """小批量 Pegasos：hinge 损失 + λ/2 ||w||²，λ = 1/(C·n)，步长 1/(λt)，固定训练轮数。

    所有类别（一对多）在同一批次中同时更新；w 以 scale·V 的形式保存，缩放为 O(1)。
    返回后一半训练轮数结束时权重的平均值。
    """
    y = np.asarray(labels)
    classes = np.unique(y)
    if classes.size < 2:
        raise TrainingError(f"training requires at least 2 classes, got {classes.tolist()}")
    if not C > 0:
        raise ValueError(f"C must be positive, got {C}")

    design = _with_bias(csr_matrix(matrix, dtype=float))
    n, p = design.shape
    targets = np.where(y[:, None] == classes[None, :], 1.0, -1.0)
    lam = 1.0 / (C * n)

    values = np.zeros((p, classes.size))
    averaged = np.zeros((p, classes.size))
    snapshots = 0
    scale = 1.0
    step = 0
    for epoch in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            batch = order[start:start + batch_size]
            step += 1
            eta = 1.0 / (lam * step)
            rows = design[batch]
            margins = targets[batch] * (np.asarray(rows @ values) * scale)
            violated = (margins < 1.0) * targets[batch]

            shrink = 1.0 - 1.0 / step
            if shrink <= 0.0:
                values[:] = 0.0
                scale = 1.0
            else:
                scale *= shrink
            if not violated.any():
                continue
            coo = rows.tocoo()
            contribution = coo.data[:, None] * violated[coo.row]
            np.add.at(values, coo.col, contribution * (eta / (len(batch) * scale)))
        if epoch >= epochs // 2:
            averaged += values * scale
            snapshots += 1

    return LinearSvmModel(classes=classes, weights=averaged / max(snapshots, 1))


def train_linear_svm(
    features: Union[csr_matrix, Sequence[FeatureVector]],
    labels: Sequence[int],
    C: float,
    rng: np.random.Generator,
    epochs: int = DEFAULT_EPOCHS,
) -> LinearSvmModel:
    """在显式特征上训练一对多线性 SVM；特征行先做 L2 归一化。"""
    if issparse(features):
        return train_linear_svm_matrix(features, labels, C, rng, epochs)
    vectorizer = DictVectorizer(dtype=np.float64, sparse=True, sort=True)
    matrix = normalize_rows(csr_matrix(vectorizer.fit_transform(features)))
    model = train_linear_svm_matrix(matrix, labels, C, rng, epochs)
    model.vectorizer = vectorizer
    return model


# ========== 交叉验证 ==========

@dataclass
class EvalReport:
    """交叉验证结果：准确率（百分比）与各阶段耗时。"""
    mean_accuracy: float
    std_accuracy: float
    fold_accuracies: List[float] = field(default_factory=list)
    repetition_accuracies: List[float] = field(default_factory=list)
    selected: List[Dict[str, float]] = field(default_factory=list)
    seconds: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "mean_accuracy": self.mean_accuracy,
            "std_accuracy": self.std_accuracy,
            "fold_accuracies": list(self.fold_accuracies),
            "repetition_accuracies": list(self.repetition_accuracies),
            "selected": list(self.selected),
            "seconds": dict(self.seconds),
        }

    def to_lines(self) -> List[str]:
        """`key=value` 形式的文本行。"""
        lines = [
            f"mean_accuracy={self.mean_accuracy:.4f}",
            f"std_accuracy={self.std_accuracy:.4f}",
            f"folds={len(self.fold_accuracies)}",
        ]
        lines.extend(f"seconds_{stage}={value:.3f}" for stage, value in sorted(self.seconds.items()))
        return lines


def _fold_rng(seed: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, *keys]))


def _select_parameters(
    designs: Dict[int, csr_matrix],
    labels: np.ndarray,
    train: np.ndarray,
    cv: CvConfig,
    seed_keys: Tuple[int, ...],
) -> Tuple[int, float]:
    """在训练折上做内层交叉验证，返回 (深度, C)；平局取网格中靠前的组合。"""
    candidates = [(depth, C) for depth in sorted(designs) for C in cv.c_grid]
    counts = np.unique(labels[train], return_counts=True)[1]
    inner_folds = min(cv.effective_inner_folds, int(counts.min()))
    if len(candidates) == 1 or inner_folds < 2:
        return candidates[0]

    shuffle_seed = int(_fold_rng(cv.seed, *seed_keys, 7).integers(2 ** 31))
    splitter = StratifiedKFold(n_splits=inner_folds, shuffle=True, random_state=shuffle_seed)
    splits = list(splitter.split(np.zeros(train.size), labels[train]))
    best, best_score = candidates[0], -1.0
    for depth, C in candidates:
        design = designs[depth]
        scores = []
        for inner_index, (inner_train, inner_test) in enumerate(splits):
            fit_rows, eval_rows = train[inner_train], train[inner_test]
            if np.unique(labels[fit_rows]).size < 2:
                continue
            model = train_linear_svm_matrix(
                design[fit_rows], labels[fit_rows], C, _fold_rng(cv.seed, *seed_keys, inner_index), cv.epochs
            )
            scores.append(model.score(design[eval_rows], labels[eval_rows]))
        score = float(np.mean(scores)) if scores else 0.0
        if score > best_score:
            best, best_score = (depth, C), score
    return best


def cross_validate(
    c: GraphCollection,
    kernel_cfg: HgkConfig,
    cv: Optional[CvConfig] = None,
    threads: int = 1,
) -> EvalReport:
    """重复的分层 k 折交叉验证。

    每次重复只特征化一次（不读类别标签），C（以及可选的 WL 深度）在训练折上由内层交叉验证选择。
    """
    cv = (cv or CvConfig()).validate()
    labels = np.asarray(c.class_labels())
    if len(c) < cv.folds:
        raise ValueError(f"collection has {len(c)} graphs, fewer than {cv.folds} folds")
    if np.unique(labels).size < 2:
        raise TrainingError("cross validation requires at least 2 classes")

    depth_grid: Sequence[int] = (kernel_cfg.wl_depth,)
    if cv.select_depth and kernel_cfg.base_kernel is BaseKernel.WL:
        depth_grid = sorted(set(cv.depth_grid))

    seconds = {"featurize": 0.0, "gram": 0.0, "train": 0.0}
    fold_accuracies: List[float] = []
    repetition_accuracies: List[float] = []
    selected: List[Dict[str, float]] = []

    for repetition in range(cv.repetitions):
        started = time.perf_counter()
        featurize_cfg = replace(kernel_cfg, seed=kernel_cfg.seed + repetition, wl_depth=max(depth_grid))
        features = featurize_collection(c, featurize_cfg, threads=threads)
        seconds["featurize"] += time.perf_counter() - started

        started = time.perf_counter()
        designs = {}
        for depth in depth_grid:
            restricted = features if depth == featurize_cfg.wl_depth else [restrict_depth(f, depth) for f in features]
            matrix, _ = vectorize(restricted)
            designs[depth] = normalize_rows(matrix)
        seconds["gram"] += time.perf_counter() - started

        started = time.perf_counter()
        splitter = StratifiedKFold(n_splits=cv.folds, shuffle=True, random_state=cv.seed + repetition)
        splits = list(splitter.split(np.zeros(len(labels)), labels))

        def run_fold(fold: int, train: np.ndarray, test: np.ndarray) -> Tuple[float, int, float]:
            depth, C = _select_parameters(designs, labels, train, cv, (repetition, fold))
            design = designs[depth]
            model = train_linear_svm_matrix(
                design[train], labels[train], C, _fold_rng(cv.seed, repetition, fold, 1_000_003), cv.epochs
            )
            return 100.0 * model.score(design[test], labels[test]), depth, C

        if threads > 1:
            outcomes = Parallel(n_jobs=threads, prefer="threads")(
                delayed(run_fold)(fold, train, test) for fold, (train, test) in enumerate(splits)
            )
        else:
            outcomes = [run_fold(fold, train, test) for fold, (train, test) in enumerate(splits)]
        seconds["train"] += time.perf_counter() - started

        accuracies = [accuracy for accuracy, _, _ in outcomes]
        fold_accuracies.extend(accuracies)
        repetition_accuracies.append(float(np.mean(accuracies)))
        selected.extend({"repetition": repetition, "depth": depth, "C": C} for _, depth, C in outcomes)
        folds_text = ", ".join(f"{accuracy:.1f}" for accuracy in accuracies)
        logger.info(
            f"Repetition {repetition + 1}/{cv.repetitions}: "
            f"accuracy {repetition_accuracies[-1]:.2f}% (folds: {folds_text})"
        )

    report = EvalReport(
        mean_accuracy=float(np.mean(fold_accuracies)),
        std_accuracy=float(np.std(repetition_accuracies)) if len(repetition_accuracies) > 1 else 0.0,
        fold_accuracies=fold_accuracies,
        repetition_accuracies=repetition_accuracies,
        selected=selected,
        seconds=seconds,
    )
    logger.info(f"Cross validation: {report.mean_accuracy:.2f}% ± {report.std_accuracy:.2f}")
    return report


# ========== 迭代次数扫描 ==========

def iteration_sweep(
    c: GraphCollection,
    cfg: HgkConfig,
    iterations_list: Sequence[int],
    cv: Optional[CvConfig] = None,
    runs: int = 3,
    threads: int = 1,
) -> List[Tuple[int, float, Optional[float]]]:
    """不同迭代次数 I 下的平均特征化耗时，给出 cv 时同时报告交叉验证准确率。"""
    timings = time_featurization(c, cfg, iterations_list, runs=runs, threads=threads)
    rows = []
    for iterations, seconds in timings:
        accuracy = None
        if cv is not None:
            accuracy = cross_validate(c, replace(cfg, iterations=iterations), cv, threads=threads).mean_accuracy
        rows.append((iterations, seconds, accuracy))
    return rows
