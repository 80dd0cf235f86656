"""命令行入口

子命令：simulate / wind / detect / tile / evaluate / report / calibrate / update-config
退出码：0 成功，2 配置或用法错误，3 数据错误，4 内部错误。
每个子命令都会在输出目录写 run_record.json 和 run.log。
"""

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
import scipy
from loguru import logger
from packaging.version import InvalidVersion
from tqdm import tqdm

from ... import __version__
from ...common.errors import ConfigError, DataError, GmfDomainError
from ...common.logger import attach_run_log, detach_run_log, load_logger
from ...common.raster import BinaryMask, read_labels, read_mask, write_labels, write_mask, write_raster
from ..config.auto_update import update_config
from ..config.config import BenchConfig, load_bins, load_detector_params, load_document
from ..detect.calibration import CalibrationSetup, calibrate_detector
from ..detect.dark_spot import DetectorParams, dark_spot_mask
from ..detect.importer import import_prediction_mask
from ..detect.instances import group_fragments, instances_from_labels, instances_from_mask, labels_from_instances
from ..evaluate.binning import BinningSpec, EvaluationReport, bin_outcomes, merge_reports
from ..evaluate.matching import match_instances
from ..evaluate.metrics import pixel_metrics
from ..evaluate.report import dump_json, load_evaluation, write_comparison, write_report
from ..simulate.dataset import MANIFEST_NAME, SCENE_DIR, gen_dataset, load_scene, read_manifest, scene_dirs
from ..wind.neighborhood import neighborhood_contexts
from ..wind.retrieval import read_wind_field, retrieve_wind, write_wind_field
from .split import split_dataset
from .stats import dataset_stats, write_stats
from .tiling import crop_grid, crop_mask, tile_scene

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_INTERNAL = 4

RUN_RECORD_NAME = "run_record.json"
PRED_LABELS = "pred_labels"
PRED_MASK = "pred_mask"
PRED_INFO = "pred.json"
WIND_PREFIX = "wind"


# ---------------------------------------------------------------- 公共工具


def _parse_floats(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"无法解析数值列表: {text}") from e


def _threads(args) -> Optional[int]:
    return args.threads if args.threads and args.threads > 0 else None


def _ordered_map(func: Callable, items: Sequence, threads: Optional[int], desc: str) -> List[Any]:
    """并行执行但按输入顺序返回结果"""
    if threads == 1 or len(items) < 2:
        return [func(item) for item in tqdm(items, desc=desc, disable=len(items) < 2)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(func, item) for item in items]
        return [f.result() for f in tqdm(futures, desc=desc, disable=len(items) < 2)]


def resolve_scenes(path: str) -> List[str]:
    """path 可以是数据集目录，也可以是单个场景目录"""
    path = os.fspath(path)
    if os.path.exists(os.path.join(path, MANIFEST_NAME)) or os.path.isdir(os.path.join(path, SCENE_DIR)):
        return scene_dirs(path)
    if os.path.exists(os.path.join(path, "sigma0.json")):
        return [path]
    raise DataError(f"{path} 既不是数据集目录也不是场景目录")


def write_run_record(out_dir: str, command: str, args: argparse.Namespace, seeds: Dict[str, Any]) -> None:
    arguments = {k: v for k, v in sorted(vars(args).items()) if k not in ("func",)}
    record = {
        "command": command,
        "arguments": arguments,
        "seeds": seeds,
        "versions": {
            "slickwatch": __version__,
            "python": sys.version.split()[0],
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "pandas": pd.__version__,
        },
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    dump_json(os.path.join(out_dir, RUN_RECORD_NAME), record)


def _load_config(path: Optional[str]) -> BenchConfig:
    if path is None:
        return BenchConfig()
    try:
        return BenchConfig.load_config(path)
    except (KeyError, InvalidVersion) as e:
        raise ConfigError(f"配置文件 {path} 无效: {e}") from e


# ---------------------------------------------------------------- simulate


def cmd_simulate(args) -> Dict[str, Any]:
    config = _load_config(args.config)
    seed = args.seed if args.seed is not None else config.dataset.seed
    gen_dataset(config.dataset, args.out, seed=seed, threads=_threads(args) or config.threads)
    return {"dataset_seed": int(seed)}


# ---------------------------------------------------------------- wind


def cmd_wind(args) -> Dict[str, Any]:
    config = _load_config(args.config)
    exact = args.exact or config.wind_method == "exact"

    def one(scene_dir: str) -> None:
        scene = load_scene(scene_dir)
        wind = retrieve_wind(scene.sigma0, scene.wind_truth.direction, scene.meta, exact=exact)
        write_wind_field(wind, scene.meta, os.path.join(args.out, scene.meta.scene_id, WIND_PREFIX))

    scenes = resolve_scenes(args.scene)
    _ordered_map(one, scenes, _threads(args) or config.threads, "风速反演")
    logger.success(f"风速反演完成: {len(scenes)} 景")
    return {}


# ---------------------------------------------------------------- detect


def _write_prediction(out_dir: str, scene, instances, source: str, extra: Dict[str, Any]) -> None:
    scene_out = os.path.join(out_dir, scene.meta.scene_id)
    shape = scene.sigma0.shape
    labels = labels_from_instances(instances, shape)
    write_mask(BinaryMask.from_array(labels > 0), scene.meta, os.path.join(scene_out, PRED_MASK), band=PRED_MASK)
    write_labels(labels, scene.meta, os.path.join(scene_out, PRED_LABELS), band=PRED_LABELS)
    dump_json(
        os.path.join(scene_out, PRED_INFO),
        {"scene_id": scene.meta.scene_id, "source": source, "instances": [i.to_dict() for i in instances], **extra},
    )


def cmd_detect(args) -> Dict[str, Any]:
    params, merge_gap = DetectorParams(), None
    if args.params:
        params, merge_gap = load_detector_params(args.params)

    if args.import_mask:
        scenes = resolve_scenes(args.scene)
        if len(scenes) != 1:
            raise ConfigError("--import 只能对应单个场景目录")
        scene = load_scene(scenes[0])
        mask = import_prediction_mask(args.import_mask, scene.sigma0.shape)
        instances = instances_from_mask(mask, scene.meta.pixel_spacing, params.connectivity, source="imported")
        if merge_gap:
            instances = group_fragments(instances, mask.shape, merge_gap, scene.meta.pixel_spacing)
        _write_prediction(args.out, scene, instances, instances[0].source if instances else "imported",
                          {"imported_from": os.fspath(args.import_mask)})
        return {}

    def one(scene_dir: str) -> int:
        scene = load_scene(scene_dir)
        mask = dark_spot_mask(scene.sigma0, params)
        instances = instances_from_mask(mask, scene.meta.pixel_spacing, params.connectivity, source="baseline")
        if merge_gap:
            instances = group_fragments(instances, mask.shape, merge_gap, scene.meta.pixel_spacing)
        _write_prediction(args.out, scene, instances, instances[0].source if instances else "baseline",
                          {"params": params.to_dict(), "merge_gap_px": merge_gap})
        return len(instances)

    scenes = resolve_scenes(args.scene)
    counts = _ordered_map(one, scenes, _threads(args), "暗斑检测")
    logger.success(f"暗斑检测完成: {len(scenes)} 景，共 {sum(counts)} 个实例")
    return {}


# ---------------------------------------------------------------- tile


def _scene_roles(dataset_dir: str) -> Dict[str, str]:
    try:
        manifest = read_manifest(dataset_dir)
    except DataError:
        return {}
    return {s["scene_id"]: s.get("role", "trainval") for s in manifest.get("scenes", [])}


def cmd_tile(args) -> Dict[str, Any]:
    config = _load_config(args.config)
    size = args.size or config.tile_size
    stride = args.stride or config.tile_stride
    ratios = args.split or list(config.split_ratios)
    seed = args.seed if args.seed is not None else config.split_seed
    granularity = args.granularity or config.granularity

    scenes = resolve_scenes(args.input)
    roles = _scene_roles(args.input)

    def one(scene_dir: str):
        gt_mask, meta = read_mask(os.path.join(scene_dir, "gt_mask"))
        return tile_scene(gt_mask.height, gt_mask.width, size, stride, meta.scene_id, gt_mask)

    per_scene = _ordered_map(one, scenes, _threads(args) or config.threads, "切块")
    tiles = [t for scene_tiles in per_scene for t in scene_tiles]
    test_scenes = sorted(scene_id for scene_id, role in roles.items() if role == "test")
    manifest = split_dataset(tiles, ratios, seed, test_scenes, granularity)
    manifest.write(args.out)
    write_stats(dataset_stats(manifest), args.out)

    if args.write_crops:
        by_scene = {os.path.basename(os.path.normpath(d)): d for d in scenes}
        for scene_id in sorted({e.scene_id for e in manifest.entries}):
            scene = load_scene(by_scene[scene_id])
            for tile in (t for t in tiles if t.scene_id == scene_id):
                crop_dir = os.path.join(args.out, "crops", tile.tile_id)
                write_raster(crop_grid(scene.sigma0, tile), scene.meta, os.path.join(crop_dir, "sigma0"),
                             band="sigma0", attrs={"row0": tile.row0, "col0": tile.col0})
                write_mask(crop_mask(scene.gt_mask, tile), scene.meta, os.path.join(crop_dir, "gt_mask"),
                           band="gt_mask")
        logger.success(f"已写出 {len(tiles)} 个切块")
    return {"split_seed": int(seed)}


# ---------------------------------------------------------------- evaluate


def _read_predictions(pred_dir: str, scene_id: str, pixel_spacing: float):
    scene_pred = os.path.join(pred_dir, scene_id)
    if not os.path.isdir(scene_pred):
        raise DataError(f"找不到场景 {scene_id} 的预测结果: {scene_pred}")
    labels, _ = read_labels(os.path.join(scene_pred, PRED_LABELS))
    source = "baseline"
    info_path = os.path.join(scene_pred, PRED_INFO)
    if os.path.exists(info_path):
        with open(info_path, "r", encoding="utf-8") as f:
            source = json.load(f).get("source", source)
    return labels, instances_from_labels(labels, pixel_spacing, source=source)


def evaluate_scene(scene_dir: str, pred_dir: str, wind_dir: Optional[str], bins: BinningSpec,
                   min_intersection_px: int = 1, radius_m: float = 50.0,
                   exclude_slicks: bool = True) -> EvaluationReport:
    """评估一景：匹配、像素指标、风速上下文、分箱"""
    scene = load_scene(scene_dir)
    scene_id = scene.meta.scene_id
    labels, pred = _read_predictions(pred_dir, scene_id, scene.meta.pixel_spacing)
    pred_mask = BinaryMask.from_array(labels > 0)
    pred_mask.check_matches(scene.gt_mask.shape)

    if wind_dir:
        wind = read_wind_field(os.path.join(wind_dir, scene_id, WIND_PREFIX))
    else:
        wind = scene.wind_truth

    match = match_instances(scene.gt_instances, pred, min_intersection_px)
    gt_contexts = neighborhood_contexts(scene.gt_instances, wind, scene.gt_mask, radius_m, exclude_slicks, threads=1,
                                        on_empty="undefined")
    false_alarms = set(match.false_alarms)
    fa_instances = [p for p in pred if p.instance_id in false_alarms]
    all_slicks = BinaryMask.from_array(scene.gt_mask.bits | pred_mask.bits)
    pred_contexts = neighborhood_contexts(fa_instances, wind, all_slicks, radius_m, exclude_slicks, threads=1,
                                          on_empty="undefined")

    return bin_outcomes(
        match,
        gt_contexts,
        {g.instance_id: g.area_hm2 for g in scene.gt_instances},
        pred_contexts,
        {p.instance_id: p.area_hm2 for p in fa_instances},
        bins,
        scene_id=scene_id,
        pixels=pixel_metrics(scene.gt_mask, pred_mask),
    )


def cmd_evaluate(args) -> Dict[str, Any]:
    config = _load_config(args.config)
    bins, min_px = config.bins, config.min_intersection_px
    if args.bins:
        bins, bins_min_px = load_bins(args.bins)
        min_px = bins_min_px if bins_min_px is not None else min_px
    if args.min_intersection is not None:
        min_px = args.min_intersection
    if args.wind is None:
        logger.warning("未指定 --wind，使用仿真真值风场作为上下文")

    scenes = resolve_scenes(args.gt)
    if args.test_only:
        roles = _scene_roles(args.gt)
        scenes = [d for d in scenes if roles.get(os.path.basename(os.path.normpath(d))) == "test"]
        if not scenes:
            raise DataError("数据集中没有标记为 test 的场景")

    reports = _ordered_map(
        lambda d: evaluate_scene(d, args.pred, args.wind, bins, min_px, config.wind_radius_m,
                                 config.wind_exclude_slicks),
        scenes,
        _threads(args) or config.threads,
        "评估",
    )
    write_report(merge_reports(*reports) if reports else EvaluationReport(bins=bins), args.out)
    return {}


# ---------------------------------------------------------------- report / calibrate / update-config


def cmd_report(args) -> Dict[str, Any]:
    reports = [load_evaluation(path) for path in args.eval]
    if len(reports) == 1:
        write_report(reports[0], args.out)
        return {}
    names = args.name or [os.path.basename(os.path.normpath(p)) or f"eval{i}" for i, p in enumerate(args.eval)]
    if len(set(names)) != len(names):
        names = [f"{n}_{i}" for i, n in enumerate(names)]
    write_comparison(reports, names, args.out)
    return {}


def cmd_calibrate(args) -> Dict[str, Any]:
    params = DetectorParams()
    if args.params:
        params, _ = load_detector_params(args.params)
    setup = CalibrationSetup(n_scenes=args.scenes, wind_speed=args.wind_speed, seed=args.seed or 0)
    table = calibrate_detector(args.thresholds, params, setup, _threads(args))
    path = os.path.join(args.out, "calibration.csv")
    table.to_csv(path, index=False, lineterminator="\n")
    dump_json(os.path.join(args.out, "calibration_setup.json"), {"setup": setup.to_dict(), "params": params.to_dict()})
    logger.info(f"校准结果:\n{table.to_string(index=False)}")
    return {"calibration_seed": setup.seed}


def cmd_update_config(args) -> Dict[str, Any]:
    path = update_config(args.config, args.template)
    load_document(str(path))
    return {}


# ---------------------------------------------------------------- 参数解析


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="slickwatch", description="SAR 海面油膜检测基准工具")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, func: Callable, help_text: str, out_required: bool = True) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        if out_required:
            p.add_argument("--out", required=True, help="输出目录")
        p.add_argument("--threads", type=int, default=None, help="并行线程数上限，默认使用全部核心")
        return p

    p = add("simulate", cmd_simulate, "生成仿真数据集")
    p.add_argument("--config", required=True, help="配置文件 (TOML/JSON)")
    p.add_argument("--seed", type=int, default=None)

    p = add("wind", cmd_wind, "由 σ0 反演风速")
    p.add_argument("--scene", required=True, help="数据集目录或单个场景目录")
    p.add_argument("--config", default=None)
    p.add_argument("--exact", action="store_true", help="逐像素二分反演，不使用查找表")

    p = add("detect", cmd_detect, "基线暗斑检测或导入外部预测")
    p.add_argument("--scene", required=True, help="数据集目录或单个场景目录")
    p.add_argument("--params", default=None, help="检测参数文件，可以是完整配置或裸 [detector] 表")
    p.add_argument("--import", dest="import_mask", default=None, help="导入外部预测掩膜（不带后缀的栅格路径）")

    p = add("tile", cmd_tile, "切块、划分、统计")
    p.add_argument("--in", dest="input", required=True, help="数据集目录")
    p.add_argument("--split", type=_parse_floats, default=None, help="train,val 比例，如 0.85,0.15")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--size", type=int, default=None)
    p.add_argument("--stride", type=int, default=None)
    p.add_argument("--granularity", choices=("scene", "crop"), default=None)
    p.add_argument("--config", default=None)
    p.add_argument("--write-crops", action="store_true", help="同时写出每块的 sigma0 和 gt_mask")

    p = add("evaluate", cmd_evaluate, "评估预测结果")
    p.add_argument("--gt", required=True, help="真值数据集目录")
    p.add_argument("--pred", required=True, help="detect 的输出目录")
    p.add_argument("--wind", default=None, help="wind 的输出目录，缺省时使用真值风场")
    p.add_argument("--bins", default=None, help="分箱文件，可以是完整配置或裸 [evaluate] 表")
    p.add_argument("--min-intersection", type=int, default=None)
    p.add_argument("--test-only", action="store_true", help="只评估标记为 test 的场景")
    p.add_argument("--config", default=None)

    p = add("report", cmd_report, "由 evaluation.json 重新生成报告，多个 --eval 时输出比较表")
    p.add_argument("--eval", action="append", required=True, help="evaluate 的输出目录，可重复")
    p.add_argument("--name", action="append", default=None, help="每个评估的名称，顺序与 --eval 一致")

    p = add("calibrate", cmd_calibrate, "在受控场景上校准检测阈值")
    p.add_argument("--thresholds", type=_parse_floats, default=[1.5, 2.0, 2.5, 3.0, 3.5])
    p.add_argument("--params", default=None)
    p.add_argument("--scenes", type=int, default=10)
    p.add_argument("--wind-speed", type=float, default=4.5)
    p.add_argument("--seed", type=int, default=0)

    p = add("update-config", cmd_update_config, "把旧配置合并进最新模板", out_required=False)
    p.add_argument("--config", default=None, help="要更新的配置文件，默认 config/bench_config.toml")
    p.add_argument("--template", default=None)
    return parser


def _exit_code(error: BaseException) -> int:
    if isinstance(error, ConfigError):
        return EXIT_CONFIG
    if isinstance(error, (DataError, GmfDomainError)):
        return EXIT_DATA
    return EXIT_INTERNAL


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse 的用法错误退出码就是 2
        return int(e.code) if isinstance(e.code, int) else EXIT_CONFIG

    out_dir: Optional[str] = getattr(args, "out", None)
    if out_dir:
        attach_run_log(out_dir)
    try:
        seeds: Dict[str, Any] = args.func(args)
        if out_dir:
            write_run_record(out_dir, args.command, args, seeds or {})
        return EXIT_OK
    except (ConfigError, DataError, GmfDomainError) as e:
        logger.error(f"{args.command} 失败: {e}")
        return _exit_code(e)
    except Exception:
        logger.exception(f"{args.command} 出现未预期的错误")
        return EXIT_INTERNAL
    finally:
        detach_run_log()


def run() -> int:
    """控制台脚本 slickwatch 的入口，先按 ENVIRONMENT / LOG_LEVEL 配置终端日志"""
    load_logger()
    return main(sys.argv[1:])
