"""
规范变换：c = u·exp(∫₀ʳ b/2D dτ)，用于消去对流项 b·u_r。
"""
from __future__ import annotations

import numpy as np

from src.problem.coefficients import CoefficientSet, advection_exponent
from src.shared.errors import DomainRangeError, NumericalError
from src.transforms.grid import StateField


def gauge_factor(cs: CoefficientSet, r_nodes: np.ndarray, t: float) -> np.ndarray:
    """exp(∫₀ʳ b/2D dτ) 在各节点上的取值"""
    if t < -1e-14 or t > cs.horizon_T + 1e-9 * max(1.0, cs.horizon_T):
        raise DomainRangeError(f"t={t} 超出时域 [0, {cs.horizon_T}]")
    if cs.b.is_time_invariant and np.all(cs.b.value(np.asarray(r_nodes), t) == 0.0):
        return np.ones_like(np.asarray(r_nodes, dtype=float))
    factor = np.exp(advection_exponent(cs, r_nodes, t))
    if not np.all(np.isfinite(factor)):
        raise NumericalError(f"规范因子求积失败: t={t}")
    return factor


def gauge_forward(u: StateField, cs: CoefficientSet) -> StateField:
    """u → c"""
    factor = gauge_factor(cs, u.grid.nodes, u.time)
    return u.with_values(u.values * factor, label="c")


def gauge_inverse(c: StateField, cs: CoefficientSet) -> StateField:
    """c → u"""
    factor = gauge_factor(cs, c.grid.nodes, c.time)
    return c.with_values(c.values / factor, label="u")
