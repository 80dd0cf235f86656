import json
import os
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import tomli
from loguru import logger
from packaging import version
from packaging.specifiers import InvalidSpecifier, SpecifierSet
from packaging.version import InvalidVersion, Version

from ...common.errors import ConfigError
from ..detect.dark_spot import DetectorParams
from ..evaluate.binning import BinningSpec
from ..simulate.dataset import DatasetConfig
from ..simulate.scene import LookalikeConfig
from ..simulate.wind_field import WindParams

CONFIG_NAME = "bench_config.toml"
TEMPLATE_NAME = "bench_config_template.toml"
CURRENT_VERSION = "0.0.3"


@dataclass
class BenchConfig:
    """基准工具配置类"""

    INNER_VERSION: Version = None

    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    detector: DetectorParams = field(default_factory=DetectorParams)
    merge_gap_px: Optional[float] = None  # 碎片合并间隔，None 表示不合并

    # 风速上下文
    wind_radius_m: float = 50.0
    wind_exclude_slicks: bool = True
    wind_method: str = "lut"  # lut / exact

    # 评估
    bins: BinningSpec = field(default_factory=BinningSpec)
    min_intersection_px: int = 1

    # 切块与划分
    tile_size: int = 512
    tile_stride: Optional[int] = None
    split_ratios: Tuple[float, float] = (0.85, 0.15)
    split_seed: int = 0
    granularity: str = "scene"

    threads: Optional[int] = None

    @staticmethod
    def get_config_dir() -> str:
        """获取配置文件目录"""
        current_dir = os.path.dirname(os.path.abspath(__file__))
        root_dir = os.path.abspath(os.path.join(current_dir, "..", "..", ".."))
        config_dir = os.path.join(root_dir, "config")
        if not os.path.exists(config_dir):
            os.makedirs(config_dir)
        return config_dir

    @classmethod
    def convert_to_specifierset(cls, value: str) -> SpecifierSet:
        """将 字符串 版本表达式转换成 SpecifierSet"""
        try:
            return SpecifierSet(value)
        except InvalidSpecifier as e:
            logger.error(f"{value} 分类使用了错误的版本约束表达式")
            raise ConfigError(f"错误的版本约束表达式: {value}") from e

    @classmethod
    def get_config_version(cls, document: dict) -> Version:
        """提取配置文件的版本，缺少 inner 段时视为 0.0.0"""
        if "inner" in document:
            try:
                config_version: str = document["inner"]["version"]
            except KeyError as e:
                logger.error("配置文件中 inner 段缺少 version，这是错误的配置文件")
                raise KeyError(f"配置文件中 inner 段缺少 {e}，这是错误的配置文件") from e
        else:
            document["inner"] = {"version": "0.0.0"}
            config_version = document["inner"]["version"]

        try:
            ver = version.parse(str(config_version))
        except InvalidVersion as e:
            logger.error("配置文件中 inner 段的 version 不是合法的版本号，请参考 template 下的模板修改")
            raise InvalidVersion(f"配置文件中 inner 段的 version 不是合法的版本号: {config_version}") from e
        return ver

    @classmethod
    def from_document(cls, document: Dict[str, Any], source: str = "<dict>") -> "BenchConfig":
        """从已解析的配置字典构建"""
        config = cls()
        dataset: Dict[str, Any] = config.dataset.to_dict()
        wind_template: Dict[str, Any] = config.dataset.wind.to_dict()

        def simulate(parent: dict):
            simulate_config = parent["simulate"]
            for key in ("n_scenes", "width", "height", "pixel_spacing", "incidence_angle", "test_scenes",
                        "test_incidence_angle", "target_pixel_ratio", "ratio_tolerance", "seed"):
                if key in simulate_config:
                    dataset[key] = simulate_config[key]

        def wind_field(parent: dict):
            wind_config = parent["wind_field"]
            dataset["wind_speed_range"] = wind_config.get("speed_range", dataset["wind_speed_range"])
            dataset["speed_cv"] = wind_config.get("speed_cv", dataset["speed_cv"])
            dataset["pockets_range"] = wind_config.get("pockets_range", dataset["pockets_range"])
            dataset["pocket_area_range"] = wind_config.get("pocket_area_range", dataset["pocket_area_range"])
            for key in ("correlation_length_px", "pocket_min_speed", "direction_spread"):
                wind_template[key] = wind_config.get(key, wind_template[key])

        def slicks(parent: dict):
            slicks_config = parent["slicks"]
            dataset["slicks_range"] = slicks_config.get("count_range", dataset["slicks_range"])
            dataset["spill_fraction"] = slicks_config.get("spill_fraction", dataset["spill_fraction"])
            dataset["damping_max"] = slicks_config.get("damping_max", dataset["damping_max"])

        def render(parent: dict):
            render_config = parent["render"]
            dataset["speckle_looks"] = render_config.get("speckle_looks", dataset["speckle_looks"])
            dataset["lookalike"] = {
                "wind_threshold": render_config.get("lookalike_wind_threshold", dataset["lookalike"]["wind_threshold"])
            }

        def detector(parent: dict):
            detector_config = dict(parent["detector"])
            if config.INNER_VERSION in SpecifierSet(">=0.0.3"):
                config.merge_gap_px = detector_config.pop("merge_gap_px", config.merge_gap_px)
            config.detector = DetectorParams.from_dict({**config.detector.to_dict(), **detector_config})

        def wind(parent: dict):
            wind_config = parent["wind"]
            config.wind_radius_m = float(wind_config.get("radius_m", config.wind_radius_m))
            config.wind_exclude_slicks = bool(wind_config.get("exclude_slicks", config.wind_exclude_slicks))
            config.wind_method = wind_config.get("method", config.wind_method)
            if config.wind_method not in ("lut", "exact"):
                raise ConfigError(f"未知的风速反演方式: {config.wind_method}")

        def evaluate(parent: dict):
            evaluate_config = parent["evaluate"]
            config.bins = BinningSpec.from_dict({**config.bins.to_dict(), **evaluate_config})
            config.min_intersection_px = int(evaluate_config.get("min_intersection_px", config.min_intersection_px))

        def tiling(parent: dict):
            tiling_config = parent["tiling"]
            config.tile_size = int(tiling_config.get("size", config.tile_size))
            config.tile_stride = tiling_config.get("stride", config.tile_stride)
            config.split_ratios = tuple(tiling_config.get("ratios", config.split_ratios))
            config.split_seed = int(tiling_config.get("seed", config.split_seed))
            if config.INNER_VERSION in SpecifierSet(">=0.0.2"):
                config.granularity = tiling_config.get("granularity", config.granularity)

        def runtime(parent: dict):
            runtime_config = parent["runtime"]
            threads = runtime_config.get("threads", 0)
            config.threads = int(threads) if threads else None

        # 允许字段：func: method, support: str, notice: str, necessary: bool
        include_configs = {
            "simulate": {"func": simulate, "support": ">=0.0.0"},
            "wind_field": {"func": wind_field, "support": ">=0.0.0", "necessary": False},
            "slicks": {"func": slicks, "support": ">=0.0.0", "necessary": False},
            "render": {"func": render, "support": ">=0.0.0", "necessary": False},
            "detector": {"func": detector, "support": ">=0.0.0", "necessary": False},
            "wind": {"func": wind, "support": ">=0.0.1", "necessary": False},
            "evaluate": {"func": evaluate, "support": ">=0.0.0", "necessary": False},
            "tiling": {"func": tiling, "support": ">=0.0.1", "necessary": False},
            "runtime": {"func": runtime, "support": ">=0.0.0", "necessary": False},
        }

        for key in include_configs:
            include_configs[key]["support"] = cls.convert_to_specifierset(include_configs[key]["support"])

        config.INNER_VERSION = cls.get_config_version(document)

        for key in include_configs:
            if key in document:
                group_specifierset: SpecifierSet = include_configs[key]["support"]
                if config.INNER_VERSION in group_specifierset:
                    if "notice" in include_configs[key]:
                        logger.warning(include_configs[key]["notice"])
                    include_configs[key]["func"](document)
                else:
                    logger.error(
                        f"配置文件中的 '{key}' 字段的版本 ({config.INNER_VERSION}) 不在支持范围内。\n"
                        f"当前程序仅支持以下版本范围: {group_specifierset}"
                    )
                    raise InvalidVersion(f"'{key}' 仅支持以下版本范围: {group_specifierset}")
            elif include_configs[key].get("necessary") is False:
                continue
            else:
                logger.error(f"配置文件中缺少必需的字段: '{key}'")
                raise KeyError(f"配置文件中缺少必需的字段: '{key}'")

        dataset["wind"] = WindParams.from_dict(wind_template)
        dataset["lookalike"] = LookalikeConfig.from_dict(dataset["lookalike"])
        config.dataset = DatasetConfig.from_dict(dataset)
        config.dataset.validate()

        logger.success(f"成功加载配置文件: {source}")
        return config

    @classmethod
    def load_config(cls, config_path: str) -> "BenchConfig":
        """从 TOML 或 JSON 配置文件加载配置"""
        return cls.from_document(load_document(config_path), source=config_path)


def load_document(path: str) -> Dict[str, Any]:
    """按扩展名读取 TOML / JSON 文档

    Raises:
        ConfigError: 文件不存在或无法解析
    """
    path = os.fspath(path)
    if not os.path.exists(path):
        raise ConfigError(f"配置文件不存在: {path}")
    if path.lower().endswith(".json"):
        with open(path, "r", encoding="utf-8") as f:
            try:
                document = json.load(f)
            except json.JSONDecodeError as e:
                logger.critical(f"配置文件 {path} 填写有误，请检查第{e.lineno}行第{e.colno}处：{e.msg}")
                raise ConfigError(f"JSON 解析失败: {path}: {e.msg}") from e
    else:
        with open(path, "rb") as f:
            try:
                document = tomli.load(f)
            except tomli.TOMLDecodeError as e:
                logger.critical(f"配置文件 {path} 填写有误：{e}")
                raise ConfigError(f"TOML 解析失败: {path}: {e}") from e
    if not isinstance(document, dict):
        raise ConfigError(f"配置文件顶层必须是表: {path}")
    return document


def load_section(path: str, section: str) -> Dict[str, Any]:
    """读取 --params / --bins 这类文件，既可以是完整配置也可以是只含该段的裸表"""
    document = load_document(path)
    if section in document:
        table = document[section]
        if not isinstance(table, dict):
            raise ConfigError(f"{path} 中的 [{section}] 必须是表")
        return dict(table)
    document.pop("inner", None)
    return document


def load_detector_params(path: str) -> Tuple[DetectorParams, Optional[float]]:
    """返回检测参数与碎片合并间隔"""
    table = load_section(path, "detector")
    merge_gap = table.pop("merge_gap_px", None)
    unknown = sorted(set(table) - set(DetectorParams.__dataclass_fields__))
    if unknown:
        raise ConfigError(f"未知的检测参数: {unknown}")
    return DetectorParams.from_dict(table), (float(merge_gap) if merge_gap is not None else None)


def load_bins(path: str) -> Tuple[BinningSpec, Optional[int]]:
    """返回分箱设置与 min_intersection_px（未给出时为 None）"""
    table = load_section(path, "evaluate")
    min_px = table.get("min_intersection_px")
    return BinningSpec.from_dict(table), (int(min_px) if min_px is not None else None)
