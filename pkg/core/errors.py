"""异常定义：数据读取、前置条件、训练与 oracle 拒绝。"""

from pathlib import Path
from typing import Optional, Union


class HgkError(Exception):
    """工具包内所有可预期错误的基类。"""


class IngestionError(HgkError):
    """数据集读取失败（如缺少必需文件）。"""


class FormatError(IngestionError):
    """数据文件内容格式错误，携带文件路径与行号。"""

    def __init__(self, message: str, path: Optional[Union[str, Path]] = None, line_number: Optional[int] = None):
        self.path = str(path) if path is not None else None
        self.line_number = line_number
        location = ""
        if self.path is not None:
            location = f"{self.path}"
            if line_number is not None:
                location += f":{line_number}"
            location += ": "
        super().__init__(f"{location}{message}")


class PreconditionError(HgkError, ValueError):
    """输入不满足操作的前置条件（缺少标签或属性等）。"""


class TrainingError(HgkError):
    """分类器无法训练（如训练集中只有一个类别）。"""


class OracleRefusal(HgkError):
    """暴力 oracle 拒绝执行：超出规模上限或违反定理前提。"""
