"""油膜形状生成

溢油（spill）：随机闭合样条，细长（长短轴比 3.5~6），主轴接近水平或竖直；
渗漏（seep）：随机游走路径膨胀成 4~8 像素宽的丝带。
两种形状都会迭代缩放直到像素面积落在目标的 ±10% 以内。
"""

import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np
from loguru import logger
from matplotlib.path import Path
from scipy import interpolate, ndimage

from ...common.errors import ConfigError, PlacementError
from ...common.raster import pixels_for_area
from ..detect.instances import connectivity_structure, disk_structure

KINDS = ("spill", "seep")
MAX_ATTEMPTS = 100
AREA_TOLERANCE = 0.10
MAX_TILT_DEG = 12.0


@dataclass(frozen=True)
class SlickSpec:
    """单个油膜的生成参数"""

    shape_seed: int
    centroid: Tuple[float, float]
    target_area: float  # hm²
    kind: str = "spill"
    damping_max: float = 6.0  # dB

    def __post_init__(self):
        if not 0.0 < self.target_area <= 1.0e6:
            raise ConfigError(f"target_area={self.target_area} 超出 (0, 1e6] hm²")
        if not self.damping_max > 0:
            raise ConfigError("damping_max 必须为正")
        if self.kind not in KINDS:
            raise ConfigError(f"未知的油膜类型: {self.kind}")
        if not 0 <= int(self.shape_seed) < 2**64:
            raise ConfigError("shape_seed 必须是 64 位无符号整数")
        object.__setattr__(self, "centroid", (float(self.centroid[0]), float(self.centroid[1])))

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["centroid"] = list(self.centroid)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SlickSpec":
        return cls(
            shape_seed=int(data["shape_seed"]),
            centroid=tuple(data["centroid"]),
            target_area=float(data["target_area"]),
            kind=data.get("kind", "spill"),
            damping_max=float(data.get("damping_max", 6.0)),
        )


def _spill_outline(rng: np.random.Generator, target_px: float) -> np.ndarray:
    """单位面积附近的闭合样条轮廓，返回 (M, 2) 的 (x, y) 顶点"""
    elongation = rng.uniform(3.5, 6.0)
    minor = math.sqrt(target_px / (math.pi * elongation))
    major = elongation * minor

    n_ctrl = 12
    t = np.linspace(0.0, 2.0 * math.pi, n_ctrl, endpoint=False)
    wobble = np.exp(0.1 * rng.standard_normal(n_ctrl))
    x = major * wobble * np.cos(t)
    y = minor * wobble * np.sin(t)

    tilt = math.radians(rng.uniform(-MAX_TILT_DEG, MAX_TILT_DEG))
    if rng.random() < 0.5:
        tilt += math.pi / 2
    xr = x * math.cos(tilt) - y * math.sin(tilt)
    yr = x * math.sin(tilt) + y * math.cos(tilt)

    # 周期样条，末点重复首点
    tck, _ = interpolate.splprep([np.append(xr, xr[0]), np.append(yr, yr[0])], s=0, per=True)
    xs, ys = interpolate.splev(np.linspace(0.0, 1.0, 400), tck)
    return np.stack([xs, ys], axis=1)


def _rasterize_outline(outline: np.ndarray, scale: float) -> Tuple[np.ndarray, Tuple[int, int]]:
    """把轮廓缩放后栅格化，返回局部掩膜和它在局部坐标中的原点 (row0, col0)"""
    verts = outline * scale
    col0 = int(math.floor(verts[:, 0].min())) - 1
    row0 = int(math.floor(verts[:, 1].min())) - 1
    col1 = int(math.ceil(verts[:, 0].max())) + 1
    row1 = int(math.ceil(verts[:, 1].max())) + 1
    rows, cols = np.mgrid[row0:row1 + 1, col0:col1 + 1]
    # 以像素中心判断是否在多边形内
    inside = Path(verts).contains_points(np.stack([cols.ravel(), rows.ravel()], axis=1))
    return inside.reshape(rows.shape), (row0, col0)


def _largest_component(local: np.ndarray) -> np.ndarray:
    labels, count = ndimage.label(local, structure=connectivity_structure(8))
    if count <= 1:
        return local
    sizes = np.bincount(labels.ravel())
    sizes[0] = 0
    return labels == int(np.argmax(sizes))


def _spill_local(rng: np.random.Generator, target_px: float) -> Tuple[np.ndarray, Tuple[int, int]]:
    outline = _spill_outline(rng, target_px)
    scale = 1.0
    local, origin = _rasterize_outline(outline, scale)
    for _ in range(8):
        local = _largest_component(local)
        area = local.sum()
        if area and abs(area - target_px) <= 0.5 * AREA_TOLERANCE * target_px:
            break
        scale *= math.sqrt(target_px / max(area, 1))
        local, origin = _rasterize_outline(outline, scale)
    return _largest_component(local), origin


def _seep_local(rng: np.random.Generator, target_px: float) -> Tuple[np.ndarray, Tuple[int, int]]:
    width = min(rng.uniform(4.0, 8.0), max(1.0, math.sqrt(target_px) / 2.0))
    radius = width / 2.0
    n_steps = int(3 * target_px / width) + 20

    heading = rng.uniform(0.0, 2.0 * math.pi) + np.cumsum(rng.normal(0.0, 0.25, n_steps))
    path = np.cumsum(np.stack([np.sin(heading), np.cos(heading)], axis=1), axis=0)
    path = np.vstack([[0.0, 0.0], path])

    reach = int(math.ceil(radius)) + 1
    row0 = int(math.floor(path[:, 0].min())) - reach
    col0 = int(math.floor(path[:, 1].min())) - reach
    rows = int(math.ceil(path[:, 0].max())) + reach - row0 + 1
    cols = int(math.ceil(path[:, 1].max())) + reach - col0 + 1
    track = np.rint(path - [row0, col0]).astype(np.int64)
    brush = disk_structure(max(radius, 0.5))

    def ribbon(n: int) -> np.ndarray:
        centre = np.zeros((rows, cols), dtype=bool)
        centre[track[:n, 0], track[:n, 1]] = True
        return ndimage.binary_dilation(centre, structure=brush)

    # 面积随路径长度单调不减，二分找最接近目标的前缀
    lo, hi = 1, track.shape[0]
    while lo < hi:
        mid = (lo + hi) // 2
        if ribbon(mid).sum() < target_px:
            lo = mid + 1
        else:
            hi = mid
    best = ribbon(lo)
    if lo > 1:
        shorter = ribbon(lo - 1)
        if abs(shorter.sum() - target_px) < abs(best.sum() - target_px):
            best = shorter
    return best, (row0, col0)


def _fits(local: np.ndarray, top: int, left: int, bounds: Tuple[int, int],
          blocked: Optional[np.ndarray]) -> bool:
    h, w = local.shape
    if top < 0 or left < 0 or top + h > bounds[0] or left + w > bounds[1]:
        return False
    if blocked is None:
        return True
    return not np.any(blocked[top:top + h, left:left + w] & local)


def gen_slick_shape(spec: SlickSpec, bounds: Tuple[int, int], pixel_spacing: float = 10.0,
                    occupied: Optional[np.ndarray] = None) -> np.ndarray:
    """生成一个 8 连通的油膜像素集

    Args:
        spec: 油膜参数，形状完全由 shape_seed 决定
        bounds: 场景尺寸 (height, width)
        pixel_spacing: 像元大小，米
        occupied: 已被其它油膜占用的像素，新油膜与它们至少隔开 1 个像素

    Returns:
        np.ndarray: (N, 2) 的 (row, col)，按行优先排序

    Raises:
        PlacementError: 100 次尝试后仍放不下
    """
    height, width = bounds
    target_px = pixels_for_area(spec.target_area, pixel_spacing)
    if target_px > height * width:
        raise PlacementError(f"目标面积 {spec.target_area} hm² 超过场景 {width}x{height}")
    if target_px < 1:
        raise PlacementError(f"目标面积 {spec.target_area} hm² 不足一个像素")

    blocked = None
    if occupied is not None and occupied.any():
        blocked = ndimage.binary_dilation(occupied, structure=connectivity_structure(8))

    rng = np.random.default_rng(spec.shape_seed)
    builder = _spill_local if spec.kind == "spill" else _seep_local
    centre_row, centre_col = spec.centroid
    jitter = max(2.0, 0.5 * math.sqrt(target_px))

    for attempt in range(MAX_ATTEMPTS):
        local, _ = builder(rng, target_px)
        area = int(local.sum())
        if abs(area - target_px) > AREA_TOLERANCE * target_px:
            continue

        rows, cols = np.nonzero(local)
        local = local[rows.min():rows.max() + 1, cols.min():cols.max() + 1]
        h, w = local.shape
        if h > height or w > width:
            continue

        row = centre_row + (rng.normal(0.0, jitter) if attempt else 0.0)
        col = centre_col + (rng.normal(0.0, jitter) if attempt else 0.0)
        # 越界时把形状整体推回场景内
        top = int(np.clip(round(row - h / 2.0), 0, height - h))
        left = int(np.clip(round(col - w / 2.0), 0, width - w))
        if not _fits(local, top, left, bounds, blocked):
            continue

        rows, cols = np.nonzero(local)
        if attempt:
            logger.debug(f"油膜 seed={spec.shape_seed} 第 {attempt + 1} 次尝试放置成功")
        return np.stack([rows + top, cols + left], axis=1).astype(np.int64)

    raise PlacementError(
        f"油膜 ({spec.kind}, {spec.target_area} hm², seed={spec.shape_seed}) 尝试 {MAX_ATTEMPTS} 次仍无法放置"
    )
