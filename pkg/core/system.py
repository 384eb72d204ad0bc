"""核心系统：哈希图核工具包的引擎，串联配置、数据读写、特征化、评估与检查。"""

import logging
from dataclasses import asdict, replace
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from .config import CvConfig, HgkConfig, Settings, SynthieParams, load_settings, save_kernel_settings
from .datagen import gen_synthie
from .evaluation import EvalReport, cross_validate, iteration_sweep
from .graph import GraphCollection
from .hgk import cosine_normalize, featurize_collection, gram_from_features, vectorize
from .oracles import CheckResult, oracle_check_suite
from .storage import DataStorage, parse_tu_dataset, write_tu_dataset


logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s - %(levelname)s - %(message)s",
)
logger = logging.getLogger(__name__)

BENCH_GRAPHS_PER_SUPERCLASS = 100


class HashGraphKernelSystem:
    """哈希图核工具包的核心引擎。"""

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or load_settings()
        logging.getLogger().setLevel(self.settings.log_level.upper())

        # 结果文件统一写入数据目录
        self.storage = DataStorage(data_dir=self.settings.data_dir)

        logger.info(f"System initialized (seed={self.settings.seed}, threads={self.settings.threads})")

    # ========== 配置 ==========

    def kernel_config(self) -> HgkConfig:
        return HgkConfig.from_settings(self.settings)

    def describe_settings(self) -> List[Tuple[str, object]]:
        return sorted(asdict(self.settings).items())

    def save_settings(self) -> bool:
        return save_kernel_settings(self.settings)

    # ========== 数据 ==========

    def load_collection(self, dataset_dir: str, dataset_name: str) -> GraphCollection:
        return parse_tu_dataset(dataset_dir, dataset_name)

    def generate_synthie(self, params: SynthieParams, output_dir: str, dataset_name: str = "Synthie") -> Path:
        """生成 Synthie 风格数据集并以 TU 格式写出。"""
        collection = gen_synthie(params)
        return write_tu_dataset(collection, self.storage.resolve_dir(output_dir), dataset_name)

    # ========== 特征与 gram 矩阵 ==========

    def featurize(self, collection: GraphCollection, output: str) -> Path:
        """写出稀疏特征文件与特征键索引。"""
        features = featurize_collection(collection, self.kernel_config(), threads=self.settings.threads)
        matrix, registry = vectorize(features)
        matrix.sort_indices()
        rows = [
            list(zip(matrix.indices[start:end].tolist(), matrix.data[start:end].tolist()))
            for start, end in zip(matrix.indptr[:-1], matrix.indptr[1:])
        ]
        labels = [g.class_label for g in collection.graphs]
        return self.storage.save_features(rows, labels, registry, output)

    def gram(self, collection: GraphCollection, output: str, normalize: bool = True) -> Path:
        features = featurize_collection(collection, self.kernel_config(), threads=self.settings.threads)
        gram = gram_from_features(features)
        if normalize:
            gram = cosine_normalize(gram)
        labels = [g.class_label for g in collection.graphs]
        return self.storage.save_gram(gram, labels, output)

    # ========== 评估 ==========

    def cross_validate(
        self,
        collection: GraphCollection,
        cv: CvConfig,
        output: Optional[str] = None,
    ) -> EvalReport:
        cv = replace(cv, seed=self.settings.seed)
        report = cross_validate(collection, self.kernel_config(), cv, threads=self.settings.threads)
        if output:
            payload = report.to_dict()
            payload["dataset"] = collection.name
            payload["kernel"] = {
                key: value.value if hasattr(value, "value") else value
                for key, value in asdict(self.kernel_config()).items()
            }
            self.storage.save_report(payload, output)
        return report

    def oracle_check(self, quick: bool = False, output: Optional[str] = None) -> List[CheckResult]:
        results = oracle_check_suite(seed=self.settings.seed, width_r=self.settings.width_r, quick=quick)
        if output:
            rows = [(r.name, "PASS" if r.passed else "FAIL", r.detail, f"{r.seconds:.2f}") for r in results]
            self.storage.save_table(("check", "result", "detail", "seconds"), rows, output)
        return results

    def bench(
        self,
        iterations_list: Sequence[int],
        collection: Optional[GraphCollection] = None,
        runs: int = 3,
        cv: Optional[CvConfig] = None,
        output: Optional[str] = None,
    ) -> List[Tuple[int, float, Optional[float]]]:
        """运行时间（以及可选的准确率）随迭代次数 I 的变化；未给数据集时使用 200 个图的合成集合。"""
        if collection is None:
            collection = gen_synthie(
                SynthieParams(graphs_per_superclass=BENCH_GRAPHS_PER_SUPERCLASS, seed=self.settings.seed)
            )
        if cv is not None:
            cv = replace(cv, seed=self.settings.seed)
        rows = iteration_sweep(
            collection, self.kernel_config(), iterations_list, cv=cv, runs=runs, threads=self.settings.threads
        )
        if output:
            table = [
                (iterations, f"{seconds:.6f}", "" if accuracy is None else f"{accuracy:.4f}")
                for iterations, seconds, accuracy in rows
            ]
            self.storage.save_table(("iterations", "seconds", "accuracy"), table, output)
        return rows
