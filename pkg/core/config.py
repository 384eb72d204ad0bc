"""配置加载模块：读取环境变量与用户设置，提供核函数、交叉验证与数据生成的参数。"""

import os
import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, Any, Optional, Tuple

# 若存在 python-dotenv，则自动加载当前目录下的 .env 文件，便于本地实验。
try:  # pragma: no cover - optional helper
    from dotenv import load_dotenv

    load_dotenv()
except Exception:
    pass

logger = logging.getLogger(__name__)


def get_app_data_dir() -> Path:
    """获取数据目录（用户可写）。

    - 配置了 DATA_DIR 环境变量时使用该目录
    - 否则使用项目目录下的 data/
    """
    env_dir = os.getenv("DATA_DIR")
    if env_dir:
        return Path(env_dir)
    return Path(__file__).parent.parent / "data"


def get_user_settings_file() -> Path:
    """用户设置文件路径。"""
    return get_app_data_dir() / "user_settings.json"


# ============ 枚举 ============

class HashMode(str, Enum):
    """哈希函数的抽样方式。"""
    SHARED = "shared"            # 每轮一个函数，作用于所有图的所有属性
    INDEPENDENT = "independent"  # 每个属性出现位置独立抽取一个函数


class BaseKernel(str, Enum):
    """离散基核。"""
    WL = "wl"   # Weisfeiler-Lehman 子树核
    SP = "sp"   # 最短路径核


class LabelMode(str, Enum):
    """离散标签与哈希属性的组合方式。"""
    CONT = "cont"              # 仅使用哈希后的属性
    LABEL_CONT = "label-cont"  # 离散标签 + 哈希属性
    LABEL = "label"            # 仅使用离散标签（不哈希，作为基线）


# ============ 配置数据类 ============

@dataclass
class Settings:
    """工具包的运行配置（可由用户设置文件、环境变量与命令行覆盖）。"""
    data_dir: str = ""

    # 随机种子（64 位非负整数）
    seed: int = 0

    # 哈希图核参数
    iterations: int = 20
    base_kernel: str = BaseKernel.WL.value
    wl_depth: int = 3
    width_r: float = 1.0
    hash_mode: str = HashMode.SHARED.value
    label_mode: str = LabelMode.CONT.value

    # 并行线程数
    threads: int = 1

    log_level: str = "INFO"


@dataclass
class HgkConfig:
    """哈希图核框架参数。"""
    iterations: int = 20
    base_kernel: BaseKernel = BaseKernel.WL
    wl_depth: int = 3
    width_r: float = 1.0
    hash_mode: HashMode = HashMode.SHARED
    label_mode: LabelMode = LabelMode.CONT
    seed: int = 0
    # 特征化前是否对属性做逐维标准化
    standardize: bool = True

    def __post_init__(self):
        self.base_kernel = BaseKernel(self.base_kernel)
        self.hash_mode = HashMode(self.hash_mode)
        self.label_mode = LabelMode(self.label_mode)

    def validate(self) -> "HgkConfig":
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        if self.wl_depth < 0:
            raise ValueError(f"wl_depth must be >= 0, got {self.wl_depth}")
        if not self.width_r > 0:
            raise ValueError(f"width_r must be positive, got {self.width_r}")
        if self.seed < 0:
            raise ValueError(f"seed must be non-negative, got {self.seed}")
        return self

    @classmethod
    def from_settings(cls, settings: Settings) -> "HgkConfig":
        return cls(
            iterations=settings.iterations,
            base_kernel=BaseKernel(settings.base_kernel),
            wl_depth=settings.wl_depth,
            width_r=settings.width_r,
            hash_mode=HashMode(settings.hash_mode),
            label_mode=LabelMode(settings.label_mode),
            seed=settings.seed,
        ).validate()


@dataclass
class CvConfig:
    """交叉验证参数。"""
    folds: int = 10
    repetitions: int = 10
    c_grid: Tuple[float, ...] = field(default_factory=lambda: tuple(10.0 ** k for k in range(-3, 4)))
    # 内层交叉验证折数，None 表示与外层相同
    inner_folds: Optional[int] = None
    # 是否在训练折上选择 WL 深度
    select_depth: bool = False
    depth_grid: Tuple[int, ...] = (0, 1, 2, 3, 4)
    seed: int = 0
    # 线性 SVM 的训练轮数
    epochs: int = 30

    def validate(self) -> "CvConfig":
        if self.folds < 2:
            raise ValueError(f"folds must be >= 2, got {self.folds}")
        if self.repetitions < 1:
            raise ValueError(f"repetitions must be >= 1, got {self.repetitions}")
        if not self.c_grid:
            raise ValueError("c_grid must not be empty")
        if any(c <= 0 for c in self.c_grid):
            raise ValueError(f"c_grid values must be positive, got {self.c_grid}")
        if self.inner_folds is not None and self.inner_folds < 2:
            raise ValueError(f"inner_folds must be >= 2, got {self.inner_folds}")
        if not self.depth_grid:
            raise ValueError("depth_grid must not be empty")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        return self

    @property
    def effective_inner_folds(self) -> int:
        return self.inner_folds if self.inner_folds is not None else self.folds


@dataclass
class SynthieParams:
    """Synthie 风格合成数据集的构造参数。"""
    seed_graph_size_n: int = 10
    er_edge_prob: float = 0.2
    perturbation_fraction: float = 0.25
    variants_per_seed_set: int = 200
    seeds_per_graph: int = 10
    graphs_per_superclass: int = 200
    attr_dim: int = 15
    mix_prob: float = 0.8
    seed: int = 0

    def validate(self) -> "SynthieParams":
        for name in ("er_edge_prob", "perturbation_fraction", "mix_prob"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        for name in ("seed_graph_size_n", "variants_per_seed_set", "seeds_per_graph", "graphs_per_superclass", "attr_dim"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.graphs_per_superclass % 2:
            raise ValueError("graphs_per_superclass must be even (balanced A/B subclasses)")
        return self


# ============ 用户设置文件 ============

def load_user_settings() -> Dict[str, Any]:
    """从文件加载用户保存的设置。"""
    settings_file = get_user_settings_file()
    if settings_file.exists():
        try:
            with open(settings_file, "r", encoding="utf-8") as f:
                return json.load(f)
        except Exception as e:
            logger.warning(f"Failed to load user settings: {e}")
    return {}


def save_user_settings(settings: Dict[str, Any]) -> bool:
    """保存用户设置到文件。"""
    settings_file = get_user_settings_file()
    try:
        settings_file.parent.mkdir(parents=True, exist_ok=True)
        with open(settings_file, "w", encoding="utf-8") as f:
            json.dump(settings, f, ensure_ascii=False, indent=2)
        logger.info(f"User settings saved to {settings_file}")
        return True
    except Exception as e:
        logger.error(f"Failed to save user settings: {e}")
        return False


def _pick(section: Dict[str, Any], key: str, env_name: str, default: Any, cast) -> Any:
    """用户设置 > 环境变量 > 默认值。"""
    if key in section:
        return cast(section[key])
    env_value = os.getenv(env_name)
    if env_value is not None and env_value != "":
        return cast(env_value)
    return default


def load_settings() -> Settings:
    """优先读取用户保存的设置，然后是环境变量，最后是默认值。"""
    kernel_settings = load_user_settings().get("kernel", {})

    settings = Settings(
        data_dir=str(get_app_data_dir()),
        seed=_pick(kernel_settings, "seed", "HGK_SEED", Settings.seed, int),
        iterations=_pick(kernel_settings, "iterations", "HGK_ITERATIONS", Settings.iterations, int),
        base_kernel=_pick(kernel_settings, "base_kernel", "HGK_BASE", Settings.base_kernel, str),
        wl_depth=_pick(kernel_settings, "wl_depth", "HGK_WL_DEPTH", Settings.wl_depth, int),
        width_r=_pick(kernel_settings, "width_r", "HGK_R", Settings.width_r, float),
        hash_mode=_pick(kernel_settings, "hash_mode", "HGK_HASH_MODE", Settings.hash_mode, str),
        label_mode=_pick(kernel_settings, "label_mode", "HGK_LABEL_MODE", Settings.label_mode, str),
        threads=_pick(kernel_settings, "threads", "HGK_THREADS", Settings.threads, int),
        log_level=_pick(kernel_settings, "log_level", "HGK_LOG_LEVEL", Settings.log_level, str),
    )
    # 枚举值校验放在这里，错误的配置尽早暴露
    BaseKernel(settings.base_kernel)
    HashMode(settings.hash_mode)
    LabelMode(settings.label_mode)
    return settings


def save_kernel_settings(settings: Settings) -> bool:
    """保存核函数相关设置。"""
    user_settings = load_user_settings()
    user_settings["kernel"] = {
        "seed": settings.seed,
        "iterations": settings.iterations,
        "base_kernel": settings.base_kernel,
        "wl_depth": settings.wl_depth,
        "width_r": settings.width_r,
        "hash_mode": settings.hash_mode,
        "label_mode": settings.label_mode,
        "threads": settings.threads,
        "log_level": settings.log_level,
    }
    return save_user_settings(user_settings)
