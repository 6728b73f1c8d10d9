"""均匀空间网格与状态场。"""
from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Literal

import numpy as np

from src.shared.errors import DomainRangeError, ShapeMismatchError

StateLabel = Literal["u", "c", "c_hat", "c_tilde", "w_tilde"]
STATE_LABELS = ("u", "c", "c_hat", "c_tilde", "w_tilde")


@dataclass(frozen=True)
class SpatialGrid:
    """r ∈ [0,1] 上的均匀网格，节点 r_i = i/n"""
    n_cells: int

    def __post_init__(self):
        if self.n_cells < 1:
            raise DomainRangeError(f"网格单元数必须 >= 1: {self.n_cells}")

    @functools.cached_property
    def nodes(self) -> np.ndarray:
        nodes = np.arange(self.n_cells + 1, dtype=float) / self.n_cells
        nodes.setflags(write=False)
        return nodes

    @property
    def h(self) -> float:
        return 1.0 / self.n_cells

    @property
    def size(self) -> int:
        return self.n_cells + 1

    def refined(self, factor: int = 2) -> "SpatialGrid":
        return SpatialGrid(self.n_cells * factor)


@dataclass(frozen=True)
class StateField:
    """某一时刻网格上的 PDE 状态（u、c、ĉ、c̃ 或 w̃）"""
    grid: SpatialGrid
    values: np.ndarray
    time: float
    label: StateLabel

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.size,):
            raise ShapeMismatchError(f"状态长度 {values.shape} 与网格节点数 {self.grid.size} 不一致")
        if not np.all(np.isfinite(values)):
            raise DomainRangeError(f"状态 {self.label} 在 t={self.time} 含非有限值")
        if self.label not in STATE_LABELS:
            raise ShapeMismatchError(f"未知的状态标签: {self.label}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def with_values(self, values: np.ndarray, label: StateLabel | None = None, time: float | None = None) -> "StateField":
        return StateField(
            grid=self.grid,
            values=values,
            time=self.time if time is None else time,
            label=self.label if label is None else label,
        )

    def l2_norm(self) -> float:
        """梯形求积的 L2(0,1) 范数"""
        return float(np.sqrt(np.trapezoid(self.values**2, dx=self.grid.h)))

    @property
    def boundary_value(self) -> float:
        """r=1 处的值（观测器唯一可用的测量）"""
        return float(self.values[-1])
