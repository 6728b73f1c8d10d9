"""
GainsService - 观测器增益服务层

职责：
1. 由核函数 p(r,s,t) 提取输出注入增益
   p1(r,t) = −½p(r,1,t)D(1,t) − ∂_s[p(r,s,t)D(s,t)]|_{s=1}
   p10(t)  = ½ + H(t) − p(1,1,t)
2. 仿真时按 t 线性插值增益

注意：
- ∂_s 用 s = 1 处的三点二阶单侧差分
- 最后两行 (r = r_{n−1}, r_n) 在 s 方向不足三个样本，p1 由前面各行二次外推
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List

import numpy as np
from loguru import logger

from src.kernel.fields import KernelField
from src.problem.coefficients import CoefficientSet, eval_boundary_data
from src.services.config import gains_config
from src.shared.errors import ConfigurationError, ResolutionError
from src.transforms.grid import SpatialGrid


# ==================== 数据类定义 ====================

@dataclass(frozen=True)
class ObserverGains:
    """p1 采样 (K, n+1) 与 p10 采样 (K,)"""
    grid: SpatialGrid
    times: np.ndarray
    p1: np.ndarray
    p10: np.ndarray
    time_invariant: bool = False
    info: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        p1 = np.atleast_2d(np.asarray(self.p1, dtype=float))
        p10 = np.atleast_1d(np.asarray(self.p10, dtype=float))
        if not (np.all(np.isfinite(p1)) and np.all(np.isfinite(p10))):
            raise ConfigurationError("观测器增益含非有限值")
        object.__setattr__(self, "p1", p1)
        object.__setattr__(self, "p10", p10)
        object.__setattr__(self, "times", np.atleast_1d(np.asarray(self.times, dtype=float)))

    def _weights(self, t: float) -> tuple[int, int, float]:
        if self.time_invariant or self.times.size == 1:
            return 0, 0, 0.0
        t0, t1 = self.times[0], self.times[-1]
        eps = 1e-9 * max(1.0, abs(t1))
        if t < t0 - eps or t > t1 + eps:
            raise ConfigurationError(f"增益未覆盖 t={t:.6g}（范围 [{t0:.6g}, {t1:.6g}]）")
        k1 = int(np.clip(np.searchsorted(self.times, t), 1, self.times.size - 1))
        w = float(np.clip((t - self.times[k1 - 1]) / (self.times[k1] - self.times[k1 - 1]), 0.0, 1.0))
        return k1 - 1, k1, w

    def p1_at(self, t: float) -> np.ndarray:
        k0, k1, w = self._weights(t)
        return (1.0 - w) * self.p1[k0] + w * self.p1[k1]

    def p10_at(self, t: float) -> float:
        k0, k1, w = self._weights(t)
        return float((1.0 - w) * self.p10[k0] + w * self.p10[k1])

    def zeroed(self) -> "ObserverGains":
        """注入为零的增益（开环对照）"""
        return ObserverGains(
            grid=self.grid,
            times=self.times,
            p1=np.zeros_like(self.p1),
            p10=np.zeros_like(self.p10),
            time_invariant=self.time_invariant,
            info={**self.info, "zeroed": True},
        )

    def p1_rows(self) -> List[tuple]:
        nodes = self.grid.nodes
        return [(float(t), float(r), float(v)) for k, t in enumerate(self.times) for r, v in zip(nodes, self.p1[k])]

    def p10_rows(self) -> List[tuple]:
        return [(float(t), float(v)) for t, v in zip(self.times, self.p10)]


# ==================== 服务类 ====================

class GainsService:
    """由核函数计算观测器增益"""

    @staticmethod
    def one_sided_slope(f: np.ndarray, h: float) -> np.ndarray:
        """末端三点二阶单侧差分 (3f_n − 4f_{n−1} + f_{n−2})/(2h)，沿最后一轴"""
        return (3.0 * f[..., -1] - 4.0 * f[..., -2] + f[..., -3]) / (2.0 * h)

    def _p1_slice(self, p: np.ndarray, D_s: np.ndarray, h: float) -> np.ndarray:
        n = p.shape[0] - 1
        pD = p[:, -3:] * D_s[-3:]
        out = np.empty(n + 1)
        rows = slice(0, n - 1)
        out[rows] = -0.5 * p[rows, -1] * D_s[-1] - self.one_sided_slope(pD[rows], h)
        # 二次外推到 r_{n−1}, r_n
        for i in (n - 1, n):
            out[i] = 3.0 * out[i - 1] - 3.0 * out[i - 2] + out[i - 3]
        return out

    def compute(self, p: KernelField, cs: CoefficientSet) -> ObserverGains:
        grid = p.grid
        if grid.size < gains_config.MIN_S_SAMPLES or grid.n_cells < 4:
            raise ResolutionError(f"s = 1 附近样本不足，无法计算二阶单侧差分: n={grid.n_cells}")
        p1, p10 = [], []
        for k, t in enumerate(p.times):
            t = float(t)
            P = p.values[k]
            D_s = cs.D.value(grid.nodes, t)
            p1.append(self._p1_slice(P, D_s, grid.h))
            H = eval_boundary_data(cs, t).H
            p10.append(0.5 + H - float(P[-1, -1]))
        gains = ObserverGains(
            grid=grid,
            times=p.times,
            p1=np.stack(p1),
            p10=np.array(p10),
            time_invariant=p.time_invariant,
            info={"kernel_method": p.info.get("method", "unknown")},
        )
        logger.info(
            f"增益计算完成: {gains.times.size} 个时间样本, max|p1| = {np.max(np.abs(gains.p1)):.4g}, "
            f"p10 ∈ [{gains.p10.min():.4g}, {gains.p10.max():.4g}]"
        )
        return gains


gains_service = GainsService()


def compute_gains(p: KernelField, cs: CoefficientSet) -> ObserverGains:
    return gains_service.compute(p, cs)
