"""
时变坐标映射 r̄ = φ_map(r,t) = √D(0,t)·∫₀ʳ dτ/√D(τ,t) 及其反函数。

映射在细网格（步长 h_q）上以累积 Simpson 制表，再用三次样条求值；
反函数先二分到容差，再做一次 Newton 修正。
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicSpline

from src.problem.coefficients import CoefficientSet
from src.shared.config import get_settings
from src.shared.errors import DomainRangeError, NumericalError


@dataclass(frozen=True)
class CoordinateMap:
    """t 时刻的 (r, r̄) 表"""
    t: float
    r_table: np.ndarray
    rbar_table: np.ndarray
    sqrt_D0: float
    cs: CoefficientSet

    @property
    def bar_length(self) -> float:
        return float(self.rbar_table[-1])

    def _spline(self) -> CubicSpline:
        return CubicSpline(self.r_table, self.rbar_table)

    def forward(self, r) -> np.ndarray:
        r_arr = np.asarray(r, dtype=float)
        if np.any(r_arr < -1e-14) or np.any(r_arr > 1.0 + 1e-14):
            raise DomainRangeError(f"r 超出 [0,1]: {r}")
        out = self._spline()(np.clip(r_arr, 0.0, 1.0))
        # φ_map(0,t) = 0 严格成立
        return np.where(r_arr <= 0.0, 0.0, out)

    def derivative(self, r) -> np.ndarray:
        """dr̄/dr = √D(0,t)/√D(r,t)"""
        return self.sqrt_D0 / np.sqrt(self.cs.D.value(np.asarray(r, dtype=float), self.t))

    def inverse(self, r_bar) -> np.ndarray:
        rb = np.asarray(r_bar, dtype=float)
        length = self.bar_length
        if np.any(rb < -1e-14) or np.any(rb > length + 1e-12):
            raise DomainRangeError(f"r̄ 超出 [0, {length:.12g}]: {r_bar}")
        rb = np.clip(rb, 0.0, length)
        spline = self._spline()
        tol = get_settings().solver.coordinate_map.inverse_tol
        lo = np.zeros_like(rb)
        hi = np.ones_like(rb)
        # 每次二分区间减半，迭代次数由容差决定
        for _ in range(int(math.ceil(math.log2(1.0 / tol))) + 2):
            mid = 0.5 * (lo + hi)
            below = spline(mid) < rb
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        r = 0.5 * (lo + hi)
        # Newton 修正
        r = np.clip(r - (spline(r) - rb) / self.derivative(r), 0.0, 1.0)
        r = np.where(rb <= 0.0, 0.0, r)
        return np.where(rb >= length, 1.0, r)


def coordinate_map(cs: CoefficientSet, t: float) -> CoordinateMap:
    """构造 t 时刻的坐标映射表"""
    step = get_settings().solver.quadrature.step
    n = max(2, int(math.ceil(1.0 / step)))
    n += n % 2
    r = np.linspace(0.0, 1.0, n + 1)
    D = cs.D.value(r, t)
    if np.any(D <= 0.0):
        raise NumericalError(f"坐标映射要求 D > 0: t={t}")
    sqrt_D0 = float(np.sqrt(cs.D.value(0.0, t)))
    rbar = sqrt_D0 * cumulative_simpson(1.0 / np.sqrt(D), x=r, initial=0.0)
    if not np.all(np.diff(rbar) > 0.0):
        raise NumericalError(f"坐标映射非严格单调: t={t}")
    return CoordinateMap(t=float(t), r_table=r, rbar_table=rbar, sqrt_D0=sqrt_D0, cs=cs)


def phi_map(r, t: float, cs: CoefficientSet):
    """r̄ = φ_map(r,t)"""
    out = coordinate_map(cs, t).forward(r)
    return float(out) if np.ndim(out) == 0 else out


def phi_inverse(r_bar, t: float, cs: CoefficientSet):
    """r = φ_map⁻¹(r̄,t)"""
    out = coordinate_map(cs, t).inverse(r_bar)
    return float(out) if np.ndim(out) == 0 else out
