"""程序入口：哈希图核工具包的命令行界面。"""

import argparse
import logging
import sys
from dataclasses import replace
from typing import List, Optional

from core.config import BaseKernel, CvConfig, HashMode, LabelMode, SynthieParams, load_settings
from core.errors import HgkError
from core.system import HashGraphKernelSystem

logger = logging.getLogger("hashgk")


def _common_options() -> argparse.ArgumentParser:
    """各子命令共享的全局参数；未指定时沿用配置文件与环境变量。"""
    common = argparse.ArgumentParser(add_help=False)
    group = common.add_argument_group("kernel")
    group.add_argument("--seed", type=int, default=None)
    group.add_argument("--iterations", type=int, default=None, help="哈希迭代次数 I")
    group.add_argument("--base", choices=[b.value for b in BaseKernel], default=None)
    group.add_argument("--wl-depth", type=int, default=None)
    group.add_argument("--r", type=float, default=None, help="LSH 区间宽度")
    group.add_argument("--hash-mode", choices=[m.value for m in HashMode], default=None)
    group.add_argument("--label-mode", choices=[m.value for m in LabelMode], default=None)
    group.add_argument("--threads", type=int, default=None)
    group.add_argument("--log-level", default=None)
    return common


def _dataset_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("dataset_dir", help="TU 格式数据集所在目录")
    parser.add_argument("dataset_name", help="数据集名称（文件名前缀 DS）")


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = argparse.ArgumentParser(prog="hashgk", description="哈希图核：带连续属性图的核方法工具包")
    commands = parser.add_subparsers(dest="command", required=True)

    featurize = commands.add_parser("featurize", parents=[common], help="写出稀疏特征文件")
    _dataset_arguments(featurize)
    featurize.add_argument("--output", default="features.txt")

    gram = commands.add_parser("gram", parents=[common], help="写出 gram 矩阵 CSV")
    _dataset_arguments(gram)
    gram.add_argument("--output", default="gram.csv")
    gram.add_argument("--raw", action="store_true", help="不做余弦归一化")

    cv = commands.add_parser("cv", parents=[common], help="重复的分层交叉验证")
    _dataset_arguments(cv)
    cv.add_argument("--folds", type=int, default=10)
    cv.add_argument("--repetitions", type=int, default=10)
    cv.add_argument("--inner-folds", type=int, default=None)
    cv.add_argument("--select-depth", action="store_true", help="在训练折上从 {0..4} 选择 WL 深度")
    cv.add_argument("--output", default=None, help="JSON 报告路径")

    synthie = commands.add_parser("synthie", parents=[common], help="生成 Synthie 风格数据集（TU 格式）")
    synthie.add_argument("output_dir")
    synthie.add_argument("--name", default="Synthie")
    synthie.add_argument("--graphs-per-superclass", type=int, default=SynthieParams.graphs_per_superclass)
    synthie.add_argument("--seed-graph-size", type=int, default=SynthieParams.seed_graph_size_n)
    synthie.add_argument("--edge-prob", type=float, default=SynthieParams.er_edge_prob)
    synthie.add_argument("--attr-dim", type=int, default=SynthieParams.attr_dim)

    oracle = commands.add_parser("oracle-check", parents=[common], help="显式/隐式一致性与 Hoeffding 检查")
    oracle.add_argument("--quick", action="store_true")
    oracle.add_argument("--output", default=None, help="CSV 结果表路径")

    bench = commands.add_parser("bench", parents=[common], help="运行时间随 I 的变化")
    bench.add_argument("--dataset-dir", default=None)
    bench.add_argument("--dataset-name", default=None)
    bench.add_argument("--iterations-list", default="10,20,40", help="逗号分隔的 I 取值")
    bench.add_argument("--runs", type=int, default=3)
    bench.add_argument("--with-accuracy", action="store_true", help="同时报告 10 折交叉验证准确率")
    bench.add_argument("--output", default=None, help="CSV 结果表路径")

    config = commands.add_parser("config", parents=[common], help="显示（或保存）生效的配置")
    config.add_argument("--save", action="store_true", help="写入 user_settings.json 的 kernel 部分")

    return parser


def _settings_from_args(args: argparse.Namespace):
    """命令行参数覆盖配置文件与环境变量。"""
    overrides = {
        "seed": args.seed,
        "iterations": args.iterations,
        "base_kernel": args.base,
        "wl_depth": args.wl_depth,
        "width_r": args.r,
        "hash_mode": args.hash_mode,
        "label_mode": args.label_mode,
        "threads": args.threads,
        "log_level": args.log_level,
    }
    return replace(load_settings(), **{key: value for key, value in overrides.items() if value is not None})


def _parse_int_list(text: str) -> List[int]:
    try:
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ValueError(f"expected comma-separated integers, got {text!r}") from None
    if not values:
        raise ValueError("iterations list must not be empty")
    return values


def run(args: argparse.Namespace) -> int:
    system = HashGraphKernelSystem(_settings_from_args(args))

    if args.command == "featurize":
        collection = system.load_collection(args.dataset_dir, args.dataset_name)
        print(system.featurize(collection, args.output))

    elif args.command == "gram":
        collection = system.load_collection(args.dataset_dir, args.dataset_name)
        print(system.gram(collection, args.output, normalize=not args.raw))

    elif args.command == "cv":
        collection = system.load_collection(args.dataset_dir, args.dataset_name)
        cv = CvConfig(
            folds=args.folds,
            repetitions=args.repetitions,
            inner_folds=args.inner_folds,
            select_depth=args.select_depth,
        )
        report = system.cross_validate(collection, cv, output=args.output)
        for line in report.to_lines():
            print(line)

    elif args.command == "synthie":
        params = SynthieParams(
            seed_graph_size_n=args.seed_graph_size,
            er_edge_prob=args.edge_prob,
            graphs_per_superclass=args.graphs_per_superclass,
            attr_dim=args.attr_dim,
            seed=system.settings.seed,
        )
        print(system.generate_synthie(params, args.output_dir, args.name))

    elif args.command == "oracle-check":
        results = system.oracle_check(quick=args.quick, output=args.output)
        for result in results:
            print(f"{result.name:<30} {'PASS' if result.passed else 'FAIL':<5} {result.detail}")
        if not all(result.passed for result in results):
            return 1

    elif args.command == "bench":
        collection = None
        if args.dataset_dir and args.dataset_name:
            collection = system.load_collection(args.dataset_dir, args.dataset_name)
        cv = CvConfig(repetitions=1) if args.with_accuracy else None
        rows = system.bench(
            _parse_int_list(args.iterations_list), collection, runs=args.runs, cv=cv, output=args.output
        )
        print("iterations,seconds,accuracy")
        for iterations, seconds, accuracy in rows:
            print(f"{iterations},{seconds:.6f},{'' if accuracy is None else f'{accuracy:.4f}'}")

    elif args.command == "config":
        for key, value in system.describe_settings():
            print(f"{key}={value}")
        if args.save and not system.save_settings():
            return 1

    return 0


def main(argv: Optional[List[str]] = None) -> int:
    """主程序入口。"""
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except (HgkError, ValueError) as err:
        logger.error(f"{err}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
