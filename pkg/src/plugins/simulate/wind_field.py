"""风场生成

背景风速是对白噪声做高斯平滑得到的随机场，再叠加若干个圆形低风区（背风区）。
低风区内部风速从 pocket_min_speed 平滑升到边缘处的 1.5 m/s，
边缘外在 taper 宽度内再升回背景风速，所以低于 1.5 m/s 的区域正好是开圆盘。
"""

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
from loguru import logger
from scipy import ndimage

from ...common.errors import ConfigError, RasterFormatError
from ...common.raster import RasterGrid, pixels_for_area

LOW_WIND_THRESHOLD = 1.5  # m/s，可探测下限
PROVENANCES = ("simulated-truth", "retrieved")
MAX_POCKET_COVERAGE = 0.5


@dataclass
class WindParams:
    """风场参数

    Attributes:
        mean_speed: 背景平均风速 m/s，[0, 15]
        variance: 背景风速方差 (m/s)²
        correlation_length_px: 高斯平滑尺度（像素）
        low_wind_pockets: 低风区个数
        pocket_area_hm2: 每个低风区（< 1.5 m/s 部分）的面积
        pocket_min_speed: 低风区中心风速
        mean_direction: 平均风向，度
        direction_spread: 风向扰动标准差，度
    """

    mean_speed: float = 5.0
    variance: float = 0.25
    correlation_length_px: float = 32.0
    low_wind_pockets: int = 0
    pocket_area_hm2: float = 20.0
    pocket_min_speed: float = 0.5
    mean_direction: float = 0.0
    direction_spread: float = 10.0

    def validate(self):
        if not 0.0 <= self.mean_speed <= 15.0:
            raise ConfigError(f"mean_speed={self.mean_speed} 超出 [0, 15] m/s")
        if self.variance < 0:
            raise ConfigError("variance 不能为负")
        if self.correlation_length_px < 1:
            raise ConfigError("correlation_length_px 必须 >= 1")
        if self.low_wind_pockets < 0:
            raise ConfigError("low_wind_pockets 不能为负")
        if self.low_wind_pockets and self.pocket_area_hm2 <= 0:
            raise ConfigError("pocket_area_hm2 必须为正")
        if not 0.0 <= self.pocket_min_speed < LOW_WIND_THRESHOLD:
            raise ConfigError(f"pocket_min_speed 必须在 [0, {LOW_WIND_THRESHOLD}) 内")
        if self.direction_spread < 0:
            raise ConfigError("direction_spread 不能为负")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "WindParams":
        known = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        return cls(**known)


@dataclass(frozen=True)
class WindField:
    """成对的风速/风向栅格

    provenance 为 simulated-truth（仿真真值）或 retrieved（GMF 反演）。
    summary 记录生成或反演的附加信息（低风区位置、钳制计数等）。
    """

    speed: RasterGrid
    direction: RasterGrid
    provenance: str = "simulated-truth"
    summary: Dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.speed.shape != self.direction.shape:
            raise RasterFormatError(f"风速 {self.speed.shape} 与风向 {self.direction.shape} 尺寸不一致")
        if self.provenance not in PROVENANCES:
            raise RasterFormatError(f"未知的 provenance: {self.provenance}")
        values = self.speed.values
        if np.any(values[np.isfinite(values)] < 0):
            raise RasterFormatError("风速不能为负")

    @property
    def shape(self):
        return self.speed.shape


def _smoothstep(t: np.ndarray) -> np.ndarray:
    t = np.clip(t, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def _unit_field(rng: np.random.Generator, shape, sigma: float) -> np.ndarray:
    """均值 0、标准差 1 的平滑随机场"""
    noise = rng.standard_normal(shape)
    smooth = ndimage.gaussian_filter(noise, sigma=sigma, mode="wrap")
    std = smooth.std()
    if std == 0:
        return np.zeros(shape)
    return (smooth - smooth.mean()) / std


def pocket_taper(radius: float) -> float:
    return max(3.0, 0.25 * radius)


def _place_pockets(rng: np.random.Generator, width: int, height: int, count: int,
                   radius: float) -> List[Dict[str, float]]:
    taper = pocket_taper(radius)
    reach = radius + taper
    if 2 * reach >= min(width, height):
        raise ConfigError(f"低风区半径 {radius:.1f} px 放不进 {width}x{height} 的场景")

    centers: List[Dict[str, float]] = []
    for _ in range(count):
        for _attempt in range(1000):
            row = rng.uniform(reach, height - reach)
            col = rng.uniform(reach, width - reach)
            # 两个低风区的过渡带也不能相交
            if all(math.hypot(row - c["row"], col - c["col"]) >= 2 * reach + 1 for c in centers):
                centers.append({"row": row, "col": col, "radius": radius})
                break
        else:
            raise ConfigError(f"无法在场景中放下 {count} 个互不重叠的低风区")
    return centers


def gen_wind_field(width: int, height: int, seed: int, params: WindParams,
                   pixel_spacing: float = 10.0) -> WindField:
    """生成仿真风场

    Args:
        width: 列数
        height: 行数
        seed: 随机种子，相同种子得到相同风场
        params: 风场参数
        pixel_spacing: 像元大小，米

    Returns:
        WindField: provenance 为 simulated-truth

    Raises:
        ConfigError: 参数非法，或低风区总面积超过场景一半
    """
    params.validate()
    rng = np.random.default_rng(seed)
    shape = (height, width)

    if params.variance > 0:
        speed = params.mean_speed + math.sqrt(params.variance) * _unit_field(rng, shape, params.correlation_length_px)
        speed = np.maximum(speed, 0.0)
    else:
        speed = np.full(shape, float(params.mean_speed))

    pockets: List[Dict[str, float]] = []
    if params.low_wind_pockets:
        area_px = pixels_for_area(params.pocket_area_hm2, pixel_spacing)
        if params.low_wind_pockets * area_px > MAX_POCKET_COVERAGE * width * height:
            raise ConfigError(
                f"{params.low_wind_pockets} 个低风区共 {params.low_wind_pockets * area_px:.0f} 像素，超过场景面积的一半"
            )
        radius = math.sqrt(area_px / math.pi)
        taper = pocket_taper(radius)
        pockets = _place_pockets(rng, width, height, params.low_wind_pockets, radius)

        rows, cols = np.mgrid[0:height, 0:width]
        for pocket in pockets:
            dist = np.hypot(rows - pocket["row"], cols - pocket["col"])
            lift = LOW_WIND_THRESHOLD - params.pocket_min_speed
            inner = params.pocket_min_speed + lift * _smoothstep(dist / radius)
            ring = LOW_WIND_THRESHOLD + (speed - LOW_WIND_THRESHOLD) * _smoothstep((dist - radius) / taper)
            speed = np.where(dist < radius, inner, np.where(dist < radius + taper, ring, speed))

    if params.direction_spread > 0:
        direction = params.mean_direction + params.direction_spread * _unit_field(
            rng, shape, 2.0 * params.correlation_length_px
        )
    else:
        direction = np.full(shape, float(params.mean_direction))
    direction = np.mod(direction, 360.0)

    logger.debug(f"生成风场 {width}x{height}，平均风速 {speed.mean():.2f} m/s，低风区 {len(pockets)} 个")
    return WindField(
        speed=RasterGrid.from_array(speed, pixel_spacing),
        direction=RasterGrid.from_array(direction, pixel_spacing),
        provenance="simulated-truth",
        summary={"pockets": pockets, "params": params.to_dict(), "seed": int(seed)},
    )


def uniform_wind_field(width: int, height: int, speed: float, direction: float = 0.0,
                       pixel_spacing: float = 10.0, provenance: str = "simulated-truth",
                       speed_grid: Optional[np.ndarray] = None) -> WindField:
    """均匀风场，主要给校准和受控实验用"""
    values = np.full((height, width), float(speed)) if speed_grid is None else speed_grid
    return WindField(
        speed=RasterGrid.from_array(values, pixel_spacing),
        direction=RasterGrid.from_array(np.full((height, width), float(direction) % 360.0), pixel_spacing),
        provenance=provenance,
    )
