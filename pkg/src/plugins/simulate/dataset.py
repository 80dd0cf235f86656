"""批量生成仿真数据集

输出目录结构：
    D/manifest.json
    D/scenes/<scene_id>/sigma0.{bin,json}
    D/scenes/<scene_id>/gt_mask, gt_labels, lookalike_mask
    D/scenes/<scene_id>/wind_truth_speed, wind_truth_direction
    D/scenes/<scene_id>/truth.json

每景的随机流由 (dataset_seed, scene_index) 派生，线程数和执行顺序都不影响结果。
"""

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from loguru import logger
from tqdm import tqdm

from ...common.errors import ConfigError, DataError, RasterIOError, SceneGenerationError
from ...common.raster import (
    SceneMetadata,
    pixels_for_area,
    read_labels,
    read_mask,
    read_raster,
    write_labels,
    write_mask,
    write_raster,
)
from ..detect.instances import SlickInstance, instances_from_labels
from .scene import LookalikeConfig, SceneGroundTruth, render_scene
from .slick_shape import SlickSpec
from .wind_field import WindField, WindParams, gen_wind_field

SCENE_DIR = "scenes"
MANIFEST_NAME = "manifest.json"
TRUTH_NAME = "truth.json"
BANDS = ("sigma0", "gt_mask", "gt_labels", "lookalike_mask", "wind_truth_speed", "wind_truth_direction")
MIN_SLICK_HM2 = 0.3


@dataclass
class DatasetConfig:
    """数据集生成配置

    Attributes:
        n_scenes: 场景数
        width / height: 场景尺寸，像素
        incidence_angle: 训练/验证场景的入射角 [near, far]
        test_scenes: 末尾多少景作为独立测试集，使用 test_incidence_angle
        wind: 风场参数模板，mean_speed 和 variance 会按景重新抽取
        wind_speed_range: 每景平均风速的抽样区间
        speed_cv: 风速变异系数，variance = (cv * mean)²
        pockets_range: 每景低风区个数区间（闭区间）
        pocket_area_range: 低风区面积区间，hm²
        slicks_range: 每景油膜个数区间（闭区间）
        spill_fraction: spill 所占比例，其余为 seep
        damping_max: 油膜最大衰减，dB
        target_pixel_ratio: 期望的油膜像素占比
        ratio_tolerance: 实际占比偏离超过该值时记录警告
        speckle_looks: 等效视数，None 表示不加相干斑
    """

    n_scenes: int = 20
    width: int = 512
    height: int = 512
    pixel_spacing: float = 10.0
    incidence_angle: Tuple[float, float] = (30.0, 45.0)
    test_scenes: int = 0
    test_incidence_angle: Tuple[float, float] = (20.0, 30.0)
    wind: WindParams = field(default_factory=WindParams)
    wind_speed_range: Tuple[float, float] = (0.5, 8.0)
    speed_cv: float = 0.1
    pockets_range: Tuple[int, int] = (0, 2)
    pocket_area_range: Tuple[float, float] = (10.0, 40.0)
    slicks_range: Tuple[int, int] = (1, 4)
    spill_fraction: float = 0.7
    damping_max: float = 6.0
    target_pixel_ratio: float = 0.034
    ratio_tolerance: float = 0.01
    speckle_looks: Optional[float] = 4.4
    lookalike: LookalikeConfig = field(default_factory=LookalikeConfig)
    seed: int = 0

    def validate(self):
        if self.n_scenes < 0:
            raise ConfigError("n_scenes 不能为负")
        if self.seed < 0:
            raise ConfigError("seed 必须为非负整数")
        if self.width < 1 or self.height < 1:
            raise ConfigError("场景尺寸必须为正")
        if not 0 <= self.test_scenes <= self.n_scenes:
            raise ConfigError(f"test_scenes={self.test_scenes} 超出 [0, {self.n_scenes}]")
        if not 0.0 <= self.target_pixel_ratio < 1.0:
            raise ConfigError("target_pixel_ratio 必须在 [0, 1) 内")
        lo, hi = self.wind_speed_range
        if not 0.0 <= lo <= hi <= 15.0:
            raise ConfigError(f"wind_speed_range={self.wind_speed_range} 非法")
        if self.slicks_range[0] < 0 or self.slicks_range[0] > self.slicks_range[1]:
            raise ConfigError(f"slicks_range={self.slicks_range} 非法")
        if self.pockets_range[0] < 0 or self.pockets_range[0] > self.pockets_range[1]:
            raise ConfigError(f"pockets_range={self.pockets_range} 非法")
        worst = self.pockets_range[1] * pixels_for_area(self.pocket_area_range[1], self.pixel_spacing)
        if worst > 0.5 * self.width * self.height:
            raise ConfigError("低风区最大总面积超过场景面积的一半")
        if not 0.0 <= self.spill_fraction <= 1.0:
            raise ConfigError("spill_fraction 必须在 [0, 1] 内")
        for angles in (self.incidence_angle, self.test_incidence_angle):
            SceneMetadata(incidence_angle=tuple(angles))
        self.wind.validate()

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        for key in ("incidence_angle", "test_incidence_angle", "wind_speed_range", "pockets_range",
                    "pocket_area_range", "slicks_range"):
            data[key] = list(data[key])
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "DatasetConfig":
        values = dict(data)
        if "wind" in values and isinstance(values["wind"], dict):
            values["wind"] = WindParams.from_dict(values["wind"])
        if "lookalike" in values and isinstance(values["lookalike"], dict):
            values["lookalike"] = LookalikeConfig.from_dict(values["lookalike"])
        for key in ("incidence_angle", "test_incidence_angle", "wind_speed_range", "pocket_area_range"):
            if key in values:
                values[key] = tuple(float(v) for v in values[key])
        for key in ("pockets_range", "slicks_range"):
            if key in values:
                values[key] = tuple(int(v) for v in values[key])
        known = {k: v for k, v in values.items() if k in cls.__dataclass_fields__}
        return cls(**known)


@dataclass
class SceneRecord:
    """单景生成结果，写进 manifest"""

    scene_id: str
    role: str
    mean_wind: float
    slick_pixels: int
    instances: List[Dict[str, Any]]
    warnings: List[str]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "scene_id": self.scene_id,
            "role": self.role,
            "mean_wind_mps": round(self.mean_wind, 6),
            "slick_pixels": self.slick_pixels,
            "paths": {band: f"{SCENE_DIR}/{self.scene_id}/{band}" for band in BANDS},
            "truth": f"{SCENE_DIR}/{self.scene_id}/{TRUTH_NAME}",
            "instances": self.instances,
            "warnings": self.warnings,
        }


def scene_id_for(index: int) -> str:
    return f"scene_{index:04d}"


def _draw_slicks(rng: np.random.Generator, config: DatasetConfig) -> List[SlickSpec]:
    count = int(rng.integers(config.slicks_range[0], config.slicks_range[1] + 1))
    if count == 0 or config.target_pixel_ratio == 0:
        return []
    budget_px = config.target_pixel_ratio * config.width * config.height
    weights = rng.lognormal(0.0, 0.5, count)
    areas = budget_px * weights / weights.sum()
    min_px = pixels_for_area(MIN_SLICK_HM2, config.pixel_spacing)

    specs = []
    for area_px in areas:
        kind = "spill" if rng.random() < config.spill_fraction else "seep"
        centroid = (rng.uniform(0, config.height), rng.uniform(0, config.width))
        specs.append(
            SlickSpec(
                shape_seed=int(rng.integers(0, 2**63)),
                centroid=centroid,
                target_area=float(max(area_px, min_px) * config.pixel_spacing**2 / 1.0e4),
                kind=kind,
                damping_max=config.damping_max,
            )
        )
    return specs


def build_scene(config: DatasetConfig, index: int) -> Tuple[SceneMetadata, Any, SceneGroundTruth, str]:
    """生成第 index 景，纯函数"""
    seq = np.random.SeedSequence([int(config.seed), int(index)])
    rng = np.random.default_rng(seq)
    scene_seed = int(seq.generate_state(1, dtype=np.uint64)[0])

    role = "test" if index >= config.n_scenes - config.test_scenes else "trainval"
    angles = config.test_incidence_angle if role == "test" else config.incidence_angle
    meta = SceneMetadata(
        scene_id=scene_id_for(index),
        incidence_angle=tuple(angles),
        pixel_spacing=config.pixel_spacing,
        acquisition_seed=scene_seed,
    )

    mean_speed = float(rng.uniform(*config.wind_speed_range))
    params = WindParams.from_dict(
        {
            **config.wind.to_dict(),
            "mean_speed": mean_speed,
            "variance": (config.speed_cv * mean_speed) ** 2,
            "low_wind_pockets": int(rng.integers(config.pockets_range[0], config.pockets_range[1] + 1)),
            "pocket_area_hm2": float(rng.uniform(*config.pocket_area_range)),
            "mean_direction": float(rng.uniform(0.0, 360.0)),
        }
    )
    wind = gen_wind_field(config.width, config.height, int(rng.integers(0, 2**63)), params, config.pixel_spacing)
    slicks = _draw_slicks(rng, config)
    sigma0, truth = render_scene(
        meta, wind, slicks, config.lookalike, config.speckle_looks, seed=scene_seed, strict=False
    )
    try:
        truth.check()
    except SceneGenerationError as e:
        raise SceneGenerationError(str(e), scene_id=meta.scene_id) from e
    return meta, sigma0, truth, role


def write_scene(out_dir: str, meta: SceneMetadata, sigma0, truth: SceneGroundTruth, role: str) -> None:
    scene_dir = os.path.join(out_dir, SCENE_DIR, meta.scene_id)
    write_raster(sigma0, meta, os.path.join(scene_dir, "sigma0"), band="sigma0")
    write_mask(truth.semantic_mask, meta, os.path.join(scene_dir, "gt_mask"), band="gt_mask")
    write_labels(truth.labels(), meta, os.path.join(scene_dir, "gt_labels"), band="gt_labels")
    write_mask(truth.lookalike_mask, meta, os.path.join(scene_dir, "lookalike_mask"), band="lookalike_mask")
    write_raster(truth.wind_truth.speed, meta, os.path.join(scene_dir, "wind_truth_speed"), band="wind_speed")
    write_raster(truth.wind_truth.direction, meta, os.path.join(scene_dir, "wind_truth_direction"),
                 band="wind_direction")

    document = {
        "scene_id": meta.scene_id,
        "role": role,
        "metadata": meta.to_dict(),
        "instances": [inst.to_dict() for inst in truth.instances],
        "config_echo": truth.config_echo,
        "wind_summary": truth.wind_truth.summary,
        "warnings": truth.warnings,
    }
    _write_json(os.path.join(scene_dir, TRUTH_NAME), document)


def _write_json(path: str, document: Dict[str, Any]) -> None:
    try:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(document, f, ensure_ascii=False, indent=2, sort_keys=True)
            f.write("\n")
    except OSError as e:
        raise RasterIOError(f"写入 {path} 失败: {e}", path=path) from e


def _generate_one(config: DatasetConfig, out_dir: str, index: int) -> SceneRecord:
    meta, sigma0, truth, role = build_scene(config, index)
    write_scene(out_dir, meta, sigma0, truth, role)
    return SceneRecord(
        scene_id=meta.scene_id,
        role=role,
        mean_wind=float(truth.wind_truth.summary["params"]["mean_speed"]),
        slick_pixels=truth.semantic_mask.count(),
        instances=[
            {"instance_id": inst.instance_id, "area_hm2": inst.area_hm2, "kind": inst.kind}
            for inst in truth.instances
        ],
        warnings=list(truth.warnings),
    )


def gen_dataset(config: DatasetConfig, out_dir: str, seed: Optional[int] = None,
                threads: Optional[int] = None) -> Dict[str, Any]:
    """生成数据集并写出 manifest.json

    Args:
        config: 数据集配置
        out_dir: 输出目录
        seed: 覆盖 config.seed
        threads: 并行线程数，None 表示由线程池决定

    Returns:
        dict: manifest 内容
    """
    if seed is not None:
        config = DatasetConfig.from_dict({**config.to_dict(), "seed": int(seed)})
    config.validate()
    os.makedirs(out_dir, exist_ok=True)

    records: List[SceneRecord] = []
    if config.n_scenes:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(_generate_one, config, out_dir, i) for i in range(config.n_scenes)]
            # 按提交顺序取结果，保证 manifest 与线程数无关
            for future in tqdm(futures, desc="生成场景", unit="景", disable=config.n_scenes < 2):
                records.append(future.result())

    total = config.n_scenes * config.width * config.height
    slick_pixels = sum(r.slick_pixels for r in records)
    ratio = slick_pixels / total if total else 0.0

    warnings = [w for r in records for w in r.warnings]
    low, high = expected_ratio_band(config)
    if total and not low <= ratio <= high:
        message = f"油膜像素占比 {ratio:.4f} 偏离目标 {config.target_pixel_ratio:.4f} 超过 {config.ratio_tolerance}"
        logger.warning(message)
        warnings.append(message)

    manifest = {
        "dataset_seed": int(config.seed),
        "n_scenes": config.n_scenes,
        "width": config.width,
        "height": config.height,
        "pixel_spacing": config.pixel_spacing,
        "target_pixel_ratio": config.target_pixel_ratio,
        "slick_pixel_ratio": round(ratio, 8),
        "slick_pixels": slick_pixels,
        "total_pixels": total,
        "scenes": [r.to_dict() for r in records],
        "warnings": warnings,
        "config": config.to_dict(),
    }
    _write_json(os.path.join(out_dir, MANIFEST_NAME), manifest)
    logger.success(f"数据集生成完成: {config.n_scenes} 景，油膜像素占比 {ratio:.2%}")
    return manifest


def read_manifest(dataset_dir: str) -> Dict[str, Any]:
    path = os.path.join(dataset_dir, MANIFEST_NAME)
    if not os.path.exists(path):
        raise DataError(f"找不到数据集清单: {path}")
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


@dataclass
class LoadedScene:
    """从磁盘读回的一景"""

    meta: SceneMetadata
    sigma0: Any
    gt_instances: List[SlickInstance]
    gt_mask: Any
    lookalike_mask: Any
    wind_truth: WindField
    role: str = "trainval"


def load_scene(scene_dir: str) -> LoadedScene:
    """读回 write_scene 写出的一景"""
    sigma0, meta = read_raster(os.path.join(scene_dir, "sigma0"))
    gt_mask, _ = read_mask(os.path.join(scene_dir, "gt_mask"))
    labels, _ = read_labels(os.path.join(scene_dir, "gt_labels"))
    lookalike, _ = read_mask(os.path.join(scene_dir, "lookalike_mask"))
    speed, _ = read_raster(os.path.join(scene_dir, "wind_truth_speed"))
    direction, _ = read_raster(os.path.join(scene_dir, "wind_truth_direction"))

    kinds: Dict[int, str] = {}
    role = "trainval"
    truth_path = os.path.join(scene_dir, TRUTH_NAME)
    if os.path.exists(truth_path):
        with open(truth_path, "r", encoding="utf-8") as f:
            document = json.load(f)
        kinds = {int(i["instance_id"]): i.get("kind") for i in document.get("instances", [])}
        role = document.get("role", role)

    return LoadedScene(
        meta=meta,
        sigma0=sigma0,
        gt_instances=instances_from_labels(labels, meta.pixel_spacing, source="ground-truth", kinds=kinds),
        gt_mask=gt_mask,
        lookalike_mask=lookalike,
        wind_truth=WindField(speed=speed, direction=direction, provenance="simulated-truth"),
        role=role,
    )


def scene_dirs(dataset_dir: str) -> List[str]:
    """数据集下所有场景目录，按 scene_id 排序"""
    root = os.path.join(dataset_dir, SCENE_DIR)
    if not os.path.isdir(root):
        raise DataError(f"找不到场景目录: {root}")
    return [os.path.join(root, name) for name in sorted(os.listdir(root)) if os.path.isdir(os.path.join(root, name))]


def expected_ratio_band(config: DatasetConfig) -> Tuple[float, float]:
    """油膜像素占比的可接受区间，超出时 gen_dataset 记录警告"""
    return (
        max(0.0, config.target_pixel_ratio - config.ratio_tolerance),
        config.target_pixel_ratio + config.ratio_tolerance,
    )
