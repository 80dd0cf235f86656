"""逐像素反演的查找表加速

σ0 表按 (θ, φ, v) 三维网格预先计算，查询时先在 (θ, φ) 上对 log σ0
做双线性插值得到一条 σ0(v) 曲线，再在曲线上找到第一个跨越点并线性插值。
φ 利用 GMF 关于 φ 的偶对称折叠到 [0, 180]。
"""

import os
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from ...common.errors import GmfDomainError, LutResolutionError
from ...common.raster import RasterGrid, SceneMetadata, read_header, read_raster, write_raster
from .model import (
    FLAG_CLAMPED_HIGH,
    FLAG_CLAMPED_LOW,
    FLAG_OK,
    get_gmf,
    invert_speed_array,
)

LUT_TOLERANCE = 0.1  # m/s
_CHUNK = 4096


def fold_direction(phi) -> np.ndarray:
    """把任意角度折叠到 [0, 180]"""
    phi = np.mod(np.asarray(phi, dtype=np.float64), 360.0)
    return np.where(phi > 180.0, 360.0 - phi, phi)


def _check_grid(name: str, grid: np.ndarray) -> np.ndarray:
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size < 2:
        raise LutResolutionError(f"{name} 网格至少需要 2 个节点")
    if not np.all(np.diff(grid) > 0):
        raise LutResolutionError(f"{name} 网格必须严格递增")
    return grid


def _locate(grid: np.ndarray, query: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """返回左节点下标和插值权重"""
    idx = np.clip(np.searchsorted(grid, query, side="right") - 1, 0, grid.size - 2)
    weight = (query - grid[idx]) / (grid[idx + 1] - grid[idx])
    return idx, np.clip(weight, 0.0, 1.0)


@dataclass(frozen=True, eq=False)
class InversionLut:
    """只读查找表，table[i, j, k] = log σ0(θ_i, φ_j, v_k)"""

    theta_grid: np.ndarray
    phi_grid: np.ndarray
    v_grid: np.ndarray
    log_table: np.ndarray
    gmf: str = "cmod5n"

    def __post_init__(self):
        for arr in (self.theta_grid, self.phi_grid, self.v_grid, self.log_table):
            arr.setflags(write=False)

    @property
    def theta_range(self) -> Tuple[float, float]:
        return float(self.theta_grid[0]), float(self.theta_grid[-1])

    def invert(self, sigma0, phi, theta) -> Tuple[np.ndarray, np.ndarray]:
        """插值反演风速

        Returns:
            (speed, flags)：与 invert_speed_array 的约定一致
        """
        sigma0, phi, theta = np.broadcast_arrays(
            np.asarray(sigma0, dtype=np.float64),
            np.asarray(phi, dtype=np.float64),
            np.asarray(theta, dtype=np.float64),
        )
        shape = sigma0.shape
        s = sigma0.ravel()
        valid = np.isfinite(s) & (s > 0)
        th = theta.ravel()
        lo, hi = self.theta_range
        bad = valid & ~((th >= lo) & (th <= hi))
        if np.any(bad):
            raise GmfDomainError(f"入射角超出查找表范围 [{lo}, {hi}]，拒绝外推", field="incidence_angle")

        speed = np.full(s.shape, np.nan)
        flags = np.full(s.shape, FLAG_OK, dtype=np.int8)
        index = np.flatnonzero(valid)
        ph = fold_direction(phi.ravel())
        for start in range(0, index.size, _CHUNK):
            sel = index[start:start + _CHUNK]
            sp, fl = self._invert_chunk(np.log(s[sel]), ph[sel], th[sel])
            speed[sel] = sp
            flags[sel] = fl
        return speed.reshape(shape), flags.reshape(shape)

    def _invert_chunk(self, log_s: np.ndarray, phi: np.ndarray, theta: np.ndarray):
        ti, tw = _locate(self.theta_grid, theta)
        pi, pw = _locate(self.phi_grid, phi)
        tw = tw[:, None]
        pw = pw[:, None]
        table = self.log_table
        curve = (
            (1 - tw) * (1 - pw) * table[ti, pi]
            + (1 - tw) * pw * table[ti, pi + 1]
            + tw * (1 - pw) * table[ti + 1, pi]
            + tw * pw * table[ti + 1, pi + 1]
        )

        above = curve >= log_s[:, None]
        any_above = above.any(axis=1)
        k = np.argmax(above, axis=1)  # 第一个跨越点

        v = self.v_grid
        n = np.arange(curve.shape[0])
        k_left = np.maximum(k - 1, 0)
        c_left = curve[n, k_left]
        c_right = curve[n, k]
        with np.errstate(divide="ignore", invalid="ignore"):
            frac = np.where(c_right > c_left, (log_s - c_left) / (c_right - c_left), 0.0)
        speed = v[k_left] + np.clip(frac, 0.0, 1.0) * (v[k] - v[k_left])

        flags = np.full(log_s.shape, FLAG_OK, dtype=np.int8)
        low = any_above & (k == 0) & (log_s < curve[:, 0])
        speed = np.where(low, v[0], speed)
        flags[low] = FLAG_CLAMPED_LOW
        speed = np.where(any_above, speed, v[-1])
        flags[~any_above] = FLAG_CLAMPED_HIGH
        return speed, flags

    def max_deviation(self, n_samples: int = 2000, seed: int = 0) -> float:
        """在网格单元中点抽样，与精确二分反演比较的最大偏差"""
        rng = np.random.default_rng(seed)
        ti = rng.integers(0, self.theta_grid.size - 1, n_samples)
        pi = rng.integers(0, self.phi_grid.size - 1, n_samples)
        vi = rng.integers(0, self.v_grid.size - 1, n_samples)
        theta = 0.5 * (self.theta_grid[ti] + self.theta_grid[ti + 1])
        phi = 0.5 * (self.phi_grid[pi] + self.phi_grid[pi + 1])
        v = 0.5 * (self.v_grid[vi] + self.v_grid[vi + 1])

        sigma0 = get_gmf(self.gmf)(v, phi, theta)
        exact, exact_flags = invert_speed_array(sigma0, phi, theta, gmf=self.gmf)
        approx, approx_flags = self.invert(sigma0, phi, theta)
        # 只在精确反演能唯一回到 v 的点上比较，GMF 非单调的区段不计入
        usable = (exact_flags == FLAG_OK) & (approx_flags == FLAG_OK) & (np.abs(exact - v) < 1e-3)
        if not np.any(usable):
            return 0.0
        return float(np.max(np.abs(approx[usable] - exact[usable])))


def build_inversion_lut(theta_grid: Sequence[float], phi_grid: Sequence[float], v_grid: Sequence[float],
                        gmf: str = "cmod5n", validate: bool = True) -> InversionLut:
    """构建查找表

    Args:
        theta_grid: 入射角节点（度），严格递增
        phi_grid: 相对风向节点（度），严格递增，需覆盖 [0, 180]
        v_grid: 风速节点（m/s），严格递增
        validate: 是否校验 0.1 m/s 的插值精度

    Raises:
        LutResolutionError: 网格不合法或太粗
    """
    theta = _check_grid("theta", theta_grid)
    phi = _check_grid("phi", phi_grid)
    v = _check_grid("v", v_grid)
    if phi[0] > 0.0 or phi[-1] < 180.0:
        raise LutResolutionError("phi 网格必须覆盖 [0, 180] 度")
    if v[0] <= 0:
        raise LutResolutionError("v 网格必须为正")

    func = get_gmf(gmf)
    tt, pp, vv = np.meshgrid(theta, phi, v, indexing="ij")
    with np.errstate(divide="ignore"):
        log_table = np.log(func(vv, pp, tt))
    lut = InversionLut(theta_grid=theta, phi_grid=phi, v_grid=v, log_table=log_table, gmf=gmf)

    if validate:
        deviation = lut.max_deviation()
        if deviation > LUT_TOLERANCE:
            raise LutResolutionError(
                f"查找表网格过粗：插值误差 {deviation:.3f} m/s 超过 {LUT_TOLERANCE} m/s，请加密网格间距"
            )
        logger.debug(f"查找表构建完成 {log_table.shape}，最大插值误差 {deviation:.4f} m/s")
    return lut


@lru_cache(maxsize=4)
def default_lut(gmf: str = "cmod5n", theta_step: float = 0.5, phi_step: float = 2.5,
                v_step: float = 0.2) -> InversionLut:
    """进程内共享的默认查找表，只构建一次"""
    theta = np.arange(18.0, 50.0 + theta_step / 2, theta_step)
    phi = np.arange(0.0, 180.0 + phi_step / 2, phi_step)
    v = np.arange(0.2, 50.0 + v_step / 2, v_step)
    return build_inversion_lut(theta, phi, v, gmf=gmf)


def save_lut(lut: InversionLut, path) -> None:
    """通过栅格容器缓存查找表：行 = θ×φ，列 = v"""
    n_theta, n_phi, n_v = lut.log_table.shape
    grid = RasterGrid.from_array(np.exp(lut.log_table).reshape(n_theta * n_phi, n_v))
    attrs = {
        "gmf": lut.gmf,
        "theta_grid": lut.theta_grid.tolist(),
        "phi_grid": lut.phi_grid.tolist(),
        "v_grid": lut.v_grid.tolist(),
    }
    write_raster(grid, SceneMetadata(scene_id=f"lut-{lut.gmf}"), path, band="gmf_lut", attrs=attrs)


def load_lut(path, gmf: Optional[str] = None) -> InversionLut:
    header = read_header(path)
    attrs = header.get("attrs", {})
    grid, _ = read_raster(path)
    theta = np.asarray(attrs["theta_grid"], dtype=np.float64)
    phi = np.asarray(attrs["phi_grid"], dtype=np.float64)
    v = np.asarray(attrs["v_grid"], dtype=np.float64)
    table = np.log(grid.values.astype(np.float64)).reshape(theta.size, phi.size, v.size)
    name = gmf or attrs.get("gmf", "cmod5n")
    logger.info(f"从缓存载入查找表: {os.fspath(path)}")
    return InversionLut(theta_grid=theta, phi_grid=phi, v_grid=v, log_table=table, gmf=name)
