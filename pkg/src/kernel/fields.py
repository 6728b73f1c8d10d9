"""核函数相关的数据结构。"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List

import numpy as np

from src.shared.errors import ShapeMismatchError
from src.transforms.grid import SpatialGrid


def upper_mask(size: int) -> np.ndarray:
    """三角形 0 ≤ r_i ≤ s_j ≤ 1 的掩码（行 i 为 r，列 j 为 s）"""
    return np.triu(np.ones((size, size), dtype=bool))


@dataclass(frozen=True)
class KernelField:
    """
    p(r_i, s_j, t_k) 的三角形采样

    values 形状为 (K, n+1, n+1)，仅 i ≤ j 的位置有意义，其余为 NaN。
    time_invariant=True 时只有一个时间样本，在任意 t 上有效。
    """
    grid: SpatialGrid
    times: np.ndarray
    values: np.ndarray
    mu: float
    time_invariant: bool = False
    info: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        times = np.atleast_1d(np.asarray(self.times, dtype=float))
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 2:
            values = values[None, :, :]
        expected = (times.size, self.grid.size, self.grid.size)
        if values.shape != expected:
            raise ShapeMismatchError(f"核函数形状 {values.shape} 与期望 {expected} 不一致")
        if times.size > 1 and not np.all(np.diff(times) > 0):
            raise ShapeMismatchError("核函数时间样本必须严格递增")
        values = np.where(upper_mask(self.grid.size)[None, :, :], values, np.nan)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    def at_time(self, t: float, interpolate: bool = False) -> np.ndarray:
        """取 t 时刻的 (n+1)×(n+1) 切片"""
        if self.time_invariant or self.times.size == 1:
            return self.values[0]
        k = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[k] - t) <= 1e-9 * max(1.0, abs(t)):
            return self.values[k]
        if not interpolate:
            raise ShapeMismatchError(f"核函数没有 t={t} 的样本")
        if t < self.times[0] - 1e-9 or t > self.times[-1] + 1e-9:
            raise ShapeMismatchError(f"t={t} 超出核函数时间范围 [{self.times[0]}, {self.times[-1]}]")
        k1 = int(np.clip(np.searchsorted(self.times, t), 1, self.times.size - 1))
        t0, t1 = self.times[k1 - 1], self.times[k1]
        w = (t - t0) / (t1 - t0)
        return (1.0 - w) * self.values[k1 - 1] + w * self.values[k1]

    def diagonal(self, k: int = 0) -> np.ndarray:
        return np.diagonal(self.values[k]).copy()

    def scaled(self, factor: float) -> "KernelField":
        return KernelField(
            grid=self.grid,
            times=self.times,
            values=self.values * factor,
            mu=self.mu,
            time_invariant=self.time_invariant,
            info=dict(self.info),
        )

    def to_rows(self) -> List[tuple]:
        """(t, r, s, p) 行，按 t、r、s 排序"""
        rows = []
        nodes = self.grid.nodes
        iu, ju = np.triu_indices(self.grid.size)
        for k, t in enumerate(self.times):
            vals = self.values[k][iu, ju]
            rows.extend(zip([float(t)] * iu.size, nodes[iu], nodes[ju], vals))
        return rows


@dataclass(frozen=True)
class PsiField:
    """
    ψ(ξ, η, t) 在特征变量格点上的采样

    格点 ξ = k·h̄, η = −m·h̄（k, m = 0..2N，h̄ = bar_length/N），
    有效区域为 m ≤ k 且 k + m ≤ 2N；values 形状为 (K, 2N+1, 2N+1)，无效位置为 0。
    """
    values: np.ndarray
    h_bar: np.ndarray
    n_bar: int
    iterate: int
    times: np.ndarray = field(default_factory=lambda: np.zeros(1))

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0


def psi_valid_mask(n_bar: int) -> np.ndarray:
    k = np.arange(2 * n_bar + 1)[:, None]
    m = np.arange(2 * n_bar + 1)[None, :]
    return (m <= k) & (k + m <= 2 * n_bar)
