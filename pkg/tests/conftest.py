"""测试共用的小图与临时数据目录。"""

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from core.graph import AttributedGraph  # noqa: E402

ENV_NAMES = (
    "DATA_DIR",
    "HGK_SEED",
    "HGK_ITERATIONS",
    "HGK_BASE",
    "HGK_WL_DEPTH",
    "HGK_R",
    "HGK_HASH_MODE",
    "HGK_LABEL_MODE",
    "HGK_THREADS",
    "HGK_LOG_LEVEL",
)


@pytest.fixture(autouse=True)
def isolated_environment(tmp_path, monkeypatch):
    """每个测试使用独立的数据目录，并清除外部的 HGK_* 环境变量。"""
    for name in ENV_NAMES:
        monkeypatch.delenv(name, raising=False)
    data_dir = tmp_path / "data"
    monkeypatch.setenv("DATA_DIR", str(data_dir))
    return data_dir


@pytest.fixture
def triangle():
    return AttributedGraph(node_count=3, edges={(0, 1), (1, 2), (0, 2)}, labels=(1, 1, 1))


@pytest.fixture
def path3():
    return AttributedGraph(node_count=3, edges={(0, 1), (1, 2)}, labels=(0, 1, 2))


@pytest.fixture
def single_node():
    return AttributedGraph(node_count=1, labels=(0,))


@pytest.fixture
def attributed_pair():
    rng = np.random.default_rng(7)
    g = AttributedGraph(
        node_count=4,
        edges={(0, 1), (1, 2), (2, 3)},
        attributes=rng.standard_normal((4, 2)),
    )
    h = AttributedGraph(
        node_count=3,
        edges={(0, 1), (0, 2)},
        attributes=rng.standard_normal((3, 2)),
    )
    return g, h


@pytest.fixture
def write_tu(tmp_path):
    """按给定内容写出 TU 格式文件，返回数据集目录。"""

    def _write(name="DS", **files):
        directory = tmp_path / "tu"
        directory.mkdir(exist_ok=True)
        for suffix, lines in files.items():
            (directory / f"{name}_{suffix}.txt").write_text("".join(f"{line}\n" for line in lines), encoding="utf-8")
        return directory

    return _write
