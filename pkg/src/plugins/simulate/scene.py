"""场景渲染：风场 -> GMF 海杂波 -> 油膜衰减 -> 相干斑"""

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from ...common.errors import ConfigError, PlacementError, SceneGenerationError, SlickWatchError
from ...common.raster import BinaryMask, RasterGrid, SceneMetadata
from ..detect.instances import SlickInstance, instances_from_labels
from ..gmf.model import SPEED_CEILING, SPEED_FLOOR, get_gmf
from .contrast import damping_contrast
from .slick_shape import SlickSpec, gen_slick_shape
from .wind_field import LOW_WIND_THRESHOLD, WindField

DEFAULT_LOOKS = 4.4
ANTENNA_AZIMUTH = 0.0


@dataclass
class LookalikeConfig:
    """疑似油膜（低风区）的真值标注规则

    低风区本身已经在风场里，这里只决定哪些像素记为 lookalike。
    """

    wind_threshold: float = LOW_WIND_THRESHOLD

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "LookalikeConfig":
        return cls(wind_threshold=float(data.get("wind_threshold", LOW_WIND_THRESHOLD)))


@dataclass
class SceneGroundTruth:
    """单景真值"""

    semantic_mask: BinaryMask
    instances: List[SlickInstance]
    lookalike_mask: BinaryMask
    wind_truth: WindField
    config_echo: Dict[str, Any] = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)

    def labels(self) -> np.ndarray:
        labels = np.zeros(self.semantic_mask.shape, dtype=np.int64)
        for inst in self.instances:
            labels[inst.pixels[:, 0], inst.pixels[:, 1]] = inst.instance_id
        return labels

    def check(self):
        """检查实例两两不相交、并集等于语义掩膜、与 lookalike 不相交"""
        counts = np.zeros(self.semantic_mask.shape, dtype=np.int64)
        for inst in self.instances:
            np.add.at(counts, (inst.pixels[:, 0], inst.pixels[:, 1]), 1)
        if np.any(counts > 1):
            raise SceneGenerationError("真值实例存在重叠像素")
        if not np.array_equal(counts > 0, self.semantic_mask.bits):
            raise SceneGenerationError("实例并集与语义掩膜不一致")
        if np.any(self.lookalike_mask.bits & self.semantic_mask.bits):
            raise SceneGenerationError("lookalike 掩膜与油膜掩膜相交")


def _speckle_disabled(looks: Optional[float]) -> bool:
    return looks is None or math.isinf(looks)


def render_scene(meta: SceneMetadata, wind: WindField, slicks: Sequence[SlickSpec],
                 lookalike_cfg: Optional[LookalikeConfig] = None, speckle_looks: Optional[float] = DEFAULT_LOOKS,
                 seed: int = 0, strict: bool = True, gmf: str = "cmod5n") -> Tuple[RasterGrid, SceneGroundTruth]:
    """渲染一景 σ0 影像及其真值

    Args:
        meta: 场景元数据（入射角、像元大小）
        wind: 真值风场
        slicks: 油膜列表
        lookalike_cfg: lookalike 标注规则
        speckle_looks: 等效视数 L，None 或 inf 表示不加相干斑
        seed: 相干斑随机种子
        strict: False 时放不下的油膜会被跳过并记录警告

    Returns:
        (σ0 栅格, 真值)

    Raises:
        SceneGenerationError: 任何子步骤出错，消息带 scene_id
    """
    try:
        return _render(meta, wind, slicks, lookalike_cfg or LookalikeConfig(), speckle_looks, seed, strict, gmf)
    except SceneGenerationError:
        raise
    except (SlickWatchError, ValueError) as e:
        raise SceneGenerationError(str(e), scene_id=meta.scene_id) from e


def _render(meta: SceneMetadata, wind: WindField, slicks: Sequence[SlickSpec], lookalike_cfg: LookalikeConfig,
            speckle_looks: Optional[float], seed: int, strict: bool, gmf: str):
    if not _speckle_disabled(speckle_looks) and speckle_looks < 1:
        raise ConfigError(f"speckle_looks 必须 >= 1，当前为 {speckle_looks}")
    height, width = wind.shape
    spacing = meta.pixel_spacing
    speed = wind.speed.values.astype(np.float64)
    phi = wind.direction.values.astype(np.float64) - ANTENNA_AZIMUTH
    theta = meta.incidence_grid(width)[None, :]

    clean = get_gmf(gmf)(np.clip(speed, SPEED_FLOOR, SPEED_CEILING), phi, theta)

    labels = np.zeros((height, width), dtype=np.int64)
    damping_max = np.zeros((height, width))
    kinds: Dict[int, str] = {}
    placed: List[Dict[str, Any]] = []
    warnings: List[str] = []
    next_id = 1
    for spec in slicks:
        try:
            pixels = gen_slick_shape(spec, (height, width), spacing, occupied=labels > 0)
        except PlacementError as e:
            if strict:
                raise
            message = f"[{meta.scene_id}] 跳过油膜: {e}"
            logger.warning(message)
            warnings.append(message)
            continue
        labels[pixels[:, 0], pixels[:, 1]] = next_id
        damping_max[pixels[:, 0], pixels[:, 1]] = spec.damping_max
        kinds[next_id] = spec.kind
        placed.append({"instance_id": next_id, **spec.to_dict()})
        next_id += 1

    slick_bits = labels > 0
    damp_db = np.where(slick_bits, damping_contrast(speed, np.where(slick_bits, damping_max, 1.0)), 0.0)
    sigma0 = clean * 10.0 ** (-damp_db / 10.0)

    if not _speckle_disabled(speckle_looks):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x5EC]))
        sigma0 = sigma0 * rng.gamma(shape=speckle_looks, scale=1.0 / speckle_looks, size=sigma0.shape)

    lookalike = (speed < lookalike_cfg.wind_threshold) & ~slick_bits
    truth = SceneGroundTruth(
        semantic_mask=BinaryMask.from_array(slick_bits),
        instances=instances_from_labels(labels, spacing, source="ground-truth", kinds=kinds),
        lookalike_mask=BinaryMask.from_array(lookalike),
        wind_truth=wind,
        config_echo={
            "metadata": meta.to_dict(),
            "slicks": placed,
            "lookalike": lookalike_cfg.to_dict(),
            "speckle_looks": None if _speckle_disabled(speckle_looks) else float(speckle_looks),
            "seed": int(seed),
            "gmf": gmf,
            "antenna_azimuth": ANTENNA_AZIMUTH,
        },
        warnings=warnings,
    )
    return RasterGrid.from_array(sigma0, spacing), truth
