"""数据存储模块：TU 格式数据集的读写，以及 gram 矩阵、特征文件与报告的持久化。"""

import csv
import json
import logging
from collections import defaultdict
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import FormatError, IngestionError, PreconditionError
from .graph import AttributedGraph, GraphCollection

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


# ========== TU 格式读取 ==========

def _tu_file(directory: Path, dataset_name: str, suffix: str) -> Path:
    return directory / f"{dataset_name}_{suffix}.txt"


def _read_rows(path: Path) -> List[Tuple[int, List[str]]]:
    """读取逗号分隔的文本行，返回 (行号, 字段列表)，忽略空行，兼容 LF/CRLF。"""
    rows = []
    text = path.read_text(encoding="utf-8")
    for line_number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        rows.append((line_number, [part.strip() for part in stripped.split(",")]))
    return rows


def _parse_int(value: str, path: Path, line_number: int) -> int:
    try:
        return int(value)
    except ValueError:
        try:
            as_float = float(value)
        except ValueError:
            raise FormatError(f"expected an integer, got {value!r}", path, line_number) from None
        if not as_float.is_integer():
            raise FormatError(f"expected an integer, got {value!r}", path, line_number)
        return int(as_float)


def parse_tu_dataset(directory_path: PathLike, dataset_name: str) -> GraphCollection:
    """读取 TU 格式数据集。

    必需文件：DS_A.txt、DS_graph_indicator.txt、DS_graph_labels.txt；
    可选文件：DS_node_labels.txt、DS_node_attributes.txt。
    节点编号按图重新从 0 开始，边去重为无向形式。
    """
    directory = Path(directory_path)
    edge_file = _tu_file(directory, dataset_name, "A")
    indicator_file = _tu_file(directory, dataset_name, "graph_indicator")
    graph_label_file = _tu_file(directory, dataset_name, "graph_labels")
    node_label_file = _tu_file(directory, dataset_name, "node_labels")
    attribute_file = _tu_file(directory, dataset_name, "node_attributes")

    for required in (edge_file, indicator_file, graph_label_file):
        if not required.exists():
            raise IngestionError(f"Missing mandatory dataset file: {required.name} (in {directory})")

    # 第 i 行是图 i 的类别标签，图的个数以此为准
    graph_label_rows = _read_rows(graph_label_file)
    class_labels = [_parse_int(fields[0], graph_label_file, line_number) for line_number, fields in graph_label_rows]
    graph_count = len(class_labels)

    # 节点 -> 图（图编号从 1 开始）
    node_graph: List[int] = []
    for line_number, fields in _read_rows(indicator_file):
        graph_id = _parse_int(fields[0], indicator_file, line_number)
        if not 1 <= graph_id <= graph_count:
            raise FormatError(f"graph id {graph_id} out of range 1..{graph_count}", indicator_file, line_number)
        node_graph.append(graph_id)
    node_total = len(node_graph)

    # 全局节点 -> 图内局部编号
    local_index: List[int] = []
    node_counts: Dict[int, int] = defaultdict(int)
    for graph_id in node_graph:
        local_index.append(node_counts[graph_id])
        node_counts[graph_id] += 1

    # 边
    edges: Dict[int, set] = defaultdict(set)
    seen_directed = set()
    self_loops = 0
    duplicates = 0
    for line_number, fields in _read_rows(edge_file):
        if len(fields) < 2:
            raise FormatError("expected a comma-separated node pair", edge_file, line_number)
        u = _parse_int(fields[0], edge_file, line_number)
        v = _parse_int(fields[1], edge_file, line_number)
        for node in (u, v):
            if not 1 <= node <= node_total:
                raise FormatError(f"node id {node} out of range 1..{node_total}", edge_file, line_number)
        if (u, v) in seen_directed:
            duplicates += 1
            continue
        seen_directed.add((u, v))
        if u == v:
            self_loops += 1
            continue
        graph_u, graph_v = node_graph[u - 1], node_graph[v - 1]
        if graph_u != graph_v:
            raise FormatError(f"edge ({u}, {v}) connects graphs {graph_u} and {graph_v}", edge_file, line_number)
        a, b = local_index[u - 1], local_index[v - 1]
        edges[graph_u].add((min(a, b), max(a, b)))

    if self_loops or duplicates:
        logger.warning(f"Dropped {self_loops} self-loops and {duplicates} duplicate edges while reading {edge_file.name}")

    # 离散节点标签（按取值排序压缩为稠密整数）
    node_labels: Optional[List[int]] = None
    if node_label_file.exists():
        label_rows = _read_rows(node_label_file)
        if len(label_rows) != node_total:
            raise FormatError(
                f"{len(label_rows)} node labels for {node_total} nodes",
                node_label_file,
                label_rows[-1][0] if label_rows else None,
            )
        raw_labels = [_parse_int(fields[0], node_label_file, line_number) for line_number, fields in label_rows]
        alphabet = {value: index for index, value in enumerate(sorted(set(raw_labels)))}
        node_labels = [alphabet[value] for value in raw_labels]

    # 连续节点属性
    attributes: Optional[np.ndarray] = None
    if attribute_file.exists():
        attribute_rows = _read_rows(attribute_file)
        if len(attribute_rows) != node_total:
            raise FormatError(
                f"{len(attribute_rows)} attribute rows for {node_total} nodes",
                attribute_file,
                attribute_rows[-1][0] if attribute_rows else None,
            )
        width = len(attribute_rows[0][1]) if attribute_rows else 0
        values = np.empty((node_total, width), dtype=float)
        for row_index, (line_number, fields) in enumerate(attribute_rows):
            if len(fields) != width:
                raise FormatError(f"expected {width} attribute values, got {len(fields)}", attribute_file, line_number)
            try:
                values[row_index] = [float(field) for field in fields]
            except ValueError:
                raise FormatError("attribute values must be real numbers", attribute_file, line_number) from None
        attributes = values

    # 组装图
    members: Dict[int, List[int]] = defaultdict(list)
    for node, graph_id in enumerate(node_graph):
        members[graph_id].append(node)

    empty = [graph_id for graph_id in range(1, graph_count + 1) if graph_id not in members]
    if empty:
        logger.warning(f"{len(empty)} graphs of {dataset_name} have no nodes (first: #{empty[0]})")

    graphs = []
    for graph_id in range(1, graph_count + 1):
        nodes = members[graph_id]
        graphs.append(
            AttributedGraph(
                node_count=len(nodes),
                edges=frozenset(edges[graph_id]),
                labels=None if node_labels is None else tuple(node_labels[n] for n in nodes),
                attributes=None if attributes is None else attributes[nodes],
                class_label=class_labels[graph_id - 1],
            )
        )

    collection = GraphCollection(
        graphs=graphs,
        name=dataset_name,
        parse_stats={"self_loops": self_loops, "duplicate_edges": duplicates},
    )
    logger.info(
        f"Loaded {dataset_name}: {len(graphs)} graphs, {node_total} nodes, attribute_dim={collection.attribute_dim}"
    )
    return collection


# ========== TU 格式写出 ==========

def write_tu_dataset(collection: GraphCollection, directory_path: PathLike, dataset_name: Optional[str] = None) -> Path:
    """将图集合写为 TU 格式（parse_tu_dataset 可读回）。"""
    unlabeled = [index for index, g in enumerate(collection.graphs) if g.class_label is None]
    if unlabeled:
        raise PreconditionError(
            f"TU format needs a class label for every graph; {len(unlabeled)} missing (first: #{unlabeled[0]})"
        )
    name = dataset_name or collection.name or "DS"
    directory = Path(directory_path)
    directory.mkdir(parents=True, exist_ok=True)

    edge_lines: List[str] = []
    indicator_lines: List[str] = []
    graph_label_lines: List[str] = []
    node_label_lines: List[str] = []
    attribute_lines: List[str] = []
    write_labels = collection.has_labels
    write_attributes = collection.has_attributes

    offset = 0
    for graph_number, g in enumerate(collection.graphs, start=1):
        indicator_lines.extend([str(graph_number)] * g.node_count)
        graph_label_lines.append(str(g.class_label))
        for u, v in sorted(g.edges):
            edge_lines.append(f"{u + offset + 1}, {v + offset + 1}")
            edge_lines.append(f"{v + offset + 1}, {u + offset + 1}")
        if write_labels:
            node_label_lines.extend(str(label) for label in g.labels)
        if write_attributes:
            for row in g.attributes:
                attribute_lines.append(",".join(repr(float(x)) for x in row))
        offset += g.node_count

    def _write(suffix: str, lines: Sequence[str]) -> None:
        _tu_file(directory, name, suffix).write_text("".join(line + "\n" for line in lines), encoding="utf-8")

    _write("A", edge_lines)
    _write("graph_indicator", indicator_lines)
    _write("graph_labels", graph_label_lines)
    if write_labels:
        _write("node_labels", node_label_lines)
    if write_attributes:
        _write("node_attributes", attribute_lines)

    logger.info(f"Wrote {len(collection)} graphs as TU dataset {name} to {directory}")
    return directory


# ========== 结果文件 ==========

class DataStorage:
    """结果存储管理器：gram 矩阵、特征文件、特征索引与报告统一写入数据目录。"""

    def __init__(self, data_dir: PathLike = "data"):
        self._data_dir = Path(data_dir)
        self._data_dir.mkdir(parents=True, exist_ok=True)
        logger.info(f"Data directory: {self._data_dir}")

    @property
    def data_dir(self) -> Path:
        return self._data_dir

    def resolve(self, output: PathLike) -> Path:
        """相对路径解析到数据目录下。"""
        path = Path(output)
        if not path.is_absolute():
            path = self._data_dir / path
        path.parent.mkdir(parents=True, exist_ok=True)
        return path

    def resolve_dir(self, output: PathLike) -> Path:
        """目录路径，相对路径同样解析到数据目录下。"""
        path = Path(output)
        if not path.is_absolute():
            path = self._data_dir / path
        path.mkdir(parents=True, exist_ok=True)
        return path

    def save_gram(self, gram: np.ndarray, class_labels: Sequence[Optional[int]], output: PathLike) -> Path:
        """写出完整方阵 CSV（每行一个图），旁边附带类别标签文件。"""
        path = self.resolve(output)
        lines = [",".join(repr(float(value)) for value in row) for row in np.asarray(gram)]
        path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
        sidecar = path.with_suffix(".labels.txt")
        sidecar.write_text("".join(f"{label}\n" for label in class_labels), encoding="utf-8")
        logger.info(f"Saved {len(lines)}x{len(lines)} gram matrix to {path}")
        return path

    def save_features(
        self,
        rows: Sequence[Sequence[Tuple[int, float]]],
        class_labels: Sequence[Optional[int]],
        registry: Sequence[str],
        output: PathLike,
    ) -> Path:
        """写出稀疏特征（`label index:value ...`，索引从 1 开始），特征键索引另存为 .registry.tsv。"""
        path = self.resolve(output)
        lines = []
        for label, row in zip(class_labels, rows):
            entries = " ".join(f"{index + 1}:{value!r}" for index, value in row)
            lines.append(f"{label if label is not None else 0} {entries}".rstrip())
        path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
        registry_path = path.with_suffix(".registry.tsv")
        registry_path.write_text(
            "".join(f"{index + 1}\t{key}\n" for index, key in enumerate(registry)),
            encoding="utf-8",
        )
        logger.info(f"Saved features of {len(lines)} graphs ({len(registry)} keys) to {path}")
        return path

    def save_report(self, report: Dict, output: PathLike) -> Path:
        path = self.resolve(output)
        path.write_text(json.dumps(report, ensure_ascii=False, indent=2, sort_keys=True), encoding="utf-8")
        logger.info(f"Report saved to {path}")
        return path

    def save_table(self, header: Sequence[str], rows: Sequence[Sequence], output: PathLike) -> Path:
        """写出 CSV 表格（基准测试、oracle 检查等）。"""
        path = self.resolve(output)
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
        logger.info(f"Table saved to {path}")
        return path
