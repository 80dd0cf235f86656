import math
from dataclasses import dataclass
from typing import Callable, Dict, Tuple

import numpy as np
from loguru import logger

from ...common.errors import GmfDomainError
from .cmod5n import cmod5n_forward

SPEED_FLOOR = 0.2
SPEED_CEILING = 50.0
THETA_RANGE = (18.0, 50.0)

# 反演标记
FLAG_OK = 0
FLAG_CLAMPED_LOW = 1
FLAG_CLAMPED_HIGH = 2
FLAG_NAMES = {FLAG_OK: "ok", FLAG_CLAMPED_LOW: "clamped-low", FLAG_CLAMPED_HIGH: "clamped-high"}

# 二分法迭代次数：49.8 / 2^40 远小于 1e-8 的相对宽度
BISECTION_ITERATIONS = 40

GmfFunction = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]

_GMF_REGISTRY: Dict[str, GmfFunction] = {}


def register_gmf(name: str):
    """注册一个 GMF 实现，签名为 f(v, phi, theta) -> sigma0"""

    def decorator(func: GmfFunction) -> GmfFunction:
        if name in _GMF_REGISTRY:
            logger.warning(f"GMF '{name}' 已存在，将被覆盖")
        _GMF_REGISTRY[name] = func
        return func

    return decorator


def get_gmf(name: str = "cmod5n") -> GmfFunction:
    try:
        return _GMF_REGISTRY[name]
    except KeyError as e:
        raise GmfDomainError(f"未注册的 GMF: '{name}'，可选: {sorted(_GMF_REGISTRY)}", field="gmf") from e


register_gmf("cmod5n")(cmod5n_forward)


@dataclass(frozen=True)
class GmfInputs:
    """GMF 输入：风速 m/s、相对风向（度，0 = 迎风）、入射角（度）"""

    wind_speed: float
    relative_direction: float
    incidence_angle: float

    def __post_init__(self):
        if not (0.0 < self.wind_speed <= SPEED_CEILING):
            raise GmfDomainError(f"wind_speed={self.wind_speed} 超出 (0, 50] m/s", field="wind_speed")
        check_theta(self.incidence_angle)
        if not math.isfinite(self.relative_direction):
            raise GmfDomainError("relative_direction 必须是有限值", field="relative_direction")
        object.__setattr__(self, "relative_direction", normalize_direction(self.relative_direction))


@dataclass(frozen=True)
class Nrcs:
    """归一化雷达截面，线性功率"""

    sigma0: float

    def __post_init__(self):
        if not (math.isfinite(self.sigma0) and self.sigma0 > 0):
            raise GmfDomainError(f"sigma0={self.sigma0} 必须为正的有限值", field="sigma0")

    @property
    def db(self) -> float:
        return 10.0 * math.log10(self.sigma0)


@dataclass(frozen=True)
class SpeedEstimate:
    """风速反演结果，flag 为 ok / clamped-low / clamped-high"""

    speed: float
    flag: str = "ok"

    @property
    def clamped(self) -> bool:
        return self.flag != "ok"


def normalize_direction(phi: float) -> float:
    phi = math.fmod(phi, 360.0)
    if phi < 0:
        phi += 360.0
    # fmod(-0.0) 之类的边界
    return 0.0 if phi >= 360.0 else phi


def check_theta(theta) -> None:
    theta = np.asarray(theta, dtype=np.float64)
    if theta.size and (not np.all(np.isfinite(theta)) or theta.min() < THETA_RANGE[0] or theta.max() > THETA_RANGE[1]):
        raise GmfDomainError("incidence_angle 超出 [18, 50] 度", field="incidence_angle")


def forward(inputs: GmfInputs, gmf: str = "cmod5n") -> Nrcs:
    """正演：由风速、风向、入射角计算 σ0"""
    value = float(get_gmf(gmf)(inputs.wind_speed, inputs.relative_direction, inputs.incidence_angle))
    return Nrcs(value)


def invert_speed_array(sigma0, phi, theta, gmf: str = "cmod5n") -> Tuple[np.ndarray, np.ndarray]:
    """逐像素二分法反演风速

    利用固定 (φ, θ) 下 σ0 随风速单调递增的性质，在 [0.2, 50] 内保持
    f(lo) < σ0 <= f(hi) 不变量做二分。超出可达范围的像素被钳制并打标记。

    Args:
        sigma0: 观测 σ0（线性），NaN 或非正值视为无效
        phi: 相对风向，度
        theta: 入射角，度

    Returns:
        (speed, flags)：无效像素 speed 为 NaN，flag 为 FLAG_OK
    """
    func = get_gmf(gmf)
    sigma0, phi, theta = np.broadcast_arrays(
        np.asarray(sigma0, dtype=np.float64),
        np.asarray(phi, dtype=np.float64),
        np.asarray(theta, dtype=np.float64),
    )
    check_theta(theta[np.isfinite(sigma0)])

    valid = np.isfinite(sigma0) & (sigma0 > 0)
    s = np.where(valid, sigma0, 1.0)

    low = np.full(s.shape, SPEED_FLOOR)
    high = np.full(s.shape, SPEED_CEILING)
    f_low = func(low, phi, theta)
    f_high = func(high, phi, theta)

    clamped_low = valid & (s < f_low)
    clamped_high = valid & (s > f_high)

    for _ in range(BISECTION_ITERATIONS):
        mid = 0.5 * (low + high)
        below = func(mid, phi, theta) < s
        low = np.where(below, mid, low)
        high = np.where(below, high, mid)

    speed = 0.5 * (low + high)
    speed = np.where(clamped_low, SPEED_FLOOR, speed)
    speed = np.where(clamped_high, SPEED_CEILING, speed)
    speed = np.where(valid, speed, np.nan)

    flags = np.full(s.shape, FLAG_OK, dtype=np.int8)
    flags[clamped_low] = FLAG_CLAMPED_LOW
    flags[clamped_high] = FLAG_CLAMPED_HIGH
    return speed, flags


def invert_speed(sigma0: Nrcs, phi: float, theta: float, gmf: str = "cmod5n") -> SpeedEstimate:
    """反演单个像素的风速（风向已知）"""
    if not isinstance(sigma0, Nrcs):
        sigma0 = Nrcs(float(sigma0))
    if not math.isfinite(phi):
        raise GmfDomainError("phi 必须是有限值", field="relative_direction")
    check_theta(theta)
    speed, flags = invert_speed_array(sigma0.sigma0, normalize_direction(phi), theta, gmf=gmf)
    return SpeedEstimate(speed=float(speed), flag=FLAG_NAMES[int(flags)])
