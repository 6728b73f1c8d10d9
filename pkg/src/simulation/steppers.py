"""
Crank–Nicolson 时间推进

统一形式：v_t = D(r,t)v_rr + β(r,t)v_r + γ(r,t)v + S(r)，v(0,t) = 0，v_r(1,t) = α·v(1,t) + g
- 系数冻结在 t + dt/2
- r = 1 处用三点单侧差分 (3v_n − 4v_{n−1} + v_{n−2})/(2h) = α·v_n + g（取 t + dt 时刻），
  与第 n−1 行消元后仍是三对角
- 源项 S 与输出注入显式（取 t 时刻）

各系统：
- 原始对象 u：      D, b, φ_rxn；Robin (1, U)
- 变换后对象 c：    D, 0, λ；Robin (H, M)
- 观测器 ĉ：        同 c，再加 p1(r,t)(y − ĉ(1)) 与 p10(t)(y − ĉ(1))
- 误差系统 c̃：      同 c，内部 −p1(r,t)c̃(1)，边界 −p10(t)c̃(1,t)（显式）
- 目标系统 w̃：      D, 0, μ；Robin (−½, 0)
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.linalg import LinAlgError, solve_banded

from src.problem.coefficients import CoefficientSet, advection_exponent, eval_boundary_data, lambda_field
from src.services.gains_service import ObserverGains
from src.shared.errors import NumericalError, ResolutionError, ShapeMismatchError
from src.transforms.grid import SpatialGrid, StateField


# ==================== 通用 CN 步 ====================

def crank_nicolson_step(
    values: np.ndarray,
    h: float,
    dt: float,
    D: np.ndarray,
    beta: np.ndarray,
    gamma: np.ndarray,
    alpha: float,
    g: float,
    source: Optional[np.ndarray] = None,
) -> np.ndarray:
    """一步 CN；D、beta、gamma 为全部节点上的数组，只用内部节点 1..n−1"""
    n = values.size - 1
    if n < 2:
        raise ResolutionError(f"时间推进至少需要 2 个网格单元: n={n}")
    Di, bi, gi = D[1:n], beta[1:n], gamma[1:n]
    lower = Di / h**2 - bi / (2.0 * h)
    diag = -2.0 * Di / h**2 + gi
    upper = Di / h**2 + bi / (2.0 * h)

    v = values
    Av = lower * v[0:n - 1] + diag * v[1:n] + upper * v[2:n + 1]
    rhs = np.empty(n)
    rhs[: n - 1] = v[1:n] + 0.5 * dt * Av
    if source is not None:
        rhs[: n - 1] += dt * source[1:n]

    # 带状存储：ab[0] 上对角，ab[1] 主对角，ab[2] 下对角；未知量为 v_1..v_n
    ab = np.zeros((3, n))
    ab[1, : n - 1] = 1.0 - 0.5 * dt * diag
    ab[0, 1:n] = -0.5 * dt * upper
    ab[2, : n - 2] = -0.5 * dt * lower[1:]

    e_nm2, e_nm1, e_n = 1.0 / (2.0 * h), -4.0 / (2.0 * h), 3.0 / (2.0 * h) - alpha
    b_rhs = g
    if n > 2:
        L = -0.5 * dt * lower[-1]   # 第 n−1 行中 v_{n−2} 的系数
        if L == 0.0:
            raise NumericalError("Robin 行消元失败：第 n−1 行下对角为 0")
        f = e_nm2 / L
        e_nm1 -= f * ab[1, n - 2]
        e_n -= f * ab[0, n - 1]
        b_rhs -= f * rhs[n - 2]
    ab[2, n - 2] = e_nm1
    ab[1, n - 1] = e_n
    rhs[n - 1] = b_rhs

    try:
        sol = solve_banded((1, 1), ab, rhs)
    except (LinAlgError, ValueError) as exc:
        raise NumericalError(f"三对角求解失败: {exc}") from exc
    if not np.all(np.isfinite(sol)):
        raise NumericalError("三对角求解得到非有限值")
    out = np.empty_like(values)
    out[0] = 0.0
    out[1:] = sol
    return out


# ==================== 系统推进器 ====================

@dataclass
class PdeStepper:
    """
    各系统的 CN 推进器

    系数时不变时，节点上的系数数组与 exp(∫b/2D) 只计算一次。
    """
    cs: CoefficientSet
    grid: SpatialGrid
    _cache: Dict[Tuple[str, Optional[float]], object] = field(default_factory=dict, repr=False)

    def _memo(self, key: str, t: float, fn):
        k = (key, None if self.cs.is_time_invariant else float(t))
        if k not in self._cache:
            if not self.cs.is_time_invariant:
                # 时变系数只保留最近一次
                self._cache = {kk: vv for kk, vv in self._cache.items() if kk[1] is None}
            self._cache[k] = fn(t)
        return self._cache[k]

    def _D(self, t: float) -> np.ndarray:
        return self._memo("D", t, lambda tt: self.cs.D.value(self.grid.nodes, tt))

    def _lam(self, t: float) -> np.ndarray:
        return self._memo("lambda", t, lambda tt: lambda_field(self.cs, self.grid.nodes, tt))

    def _boundary(self, t: float) -> Tuple[float, float]:
        """(H(t), M(t))"""
        if self.cs.is_time_invariant:
            H, gauge = self._memo(
                "boundary",
                t,
                lambda tt: (
                    eval_boundary_data(self.cs, 0.0).H,
                    math.exp(float(advection_exponent(self.cs, np.array([1.0]), 0.0)[0])),
                ),
            )
            return H, float(self.cs.U(t)) * gauge
        data = eval_boundary_data(self.cs, t)
        return data.H, data.M

    def _check(self, state: StateField, label: str) -> None:
        if state.label != label:
            raise ShapeMismatchError(f"期望状态 {label}，得到 {state.label}")
        if state.grid != self.grid:
            raise ShapeMismatchError("状态网格与推进器网格不一致")

    def plant(self, state: StateField, dt: float) -> StateField:
        self._check(state, "u")
        t, tm = state.time, state.time + 0.5 * dt
        r = self.grid.nodes
        new = crank_nicolson_step(
            state.values,
            self.grid.h,
            dt,
            self._D(tm),
            self.cs.b.value(r, tm),
            self.cs.phi_rxn.value(r, tm),
            alpha=1.0,
            g=float(self.cs.U(t + dt)),
        )
        return state.with_values(new, time=t + dt)

    def transformed(self, state: StateField, dt: float) -> StateField:
        self._check(state, "c")
        return self._reaction_diffusion(state, dt)

    def observer(self, state: StateField, gains: ObserverGains, y: float, dt: float) -> StateField:
        self._check(state, "c_hat")
        mismatch = float(y) - float(state.values[-1])
        t = state.time
        return self._reaction_diffusion(
            state, dt, source=gains.p1_at(t) * mismatch, boundary_shift=gains.p10_at(t) * mismatch
        )

    def error(self, state: StateField, gains: ObserverGains, dt: float) -> StateField:
        self._check(state, "c_tilde")
        t = state.time
        # 注入项与观测器同为 t 时刻显式，c̃ 与 c − ĉ 仅差舍入误差
        boundary = float(state.values[-1])
        return self._reaction_diffusion(
            state,
            dt,
            source=-gains.p1_at(t) * boundary,
            boundary_shift=-gains.p10_at(t) * boundary,
            with_input=False,
        )

    def target(self, state: StateField, mu: float, dt: float) -> StateField:
        self._check(state, "w_tilde")
        t, tm = state.time, state.time + 0.5 * dt
        zeros = np.zeros(self.grid.size)
        new = crank_nicolson_step(
            state.values, self.grid.h, dt, self._D(tm), zeros, zeros + mu, alpha=-0.5, g=0.0
        )
        return state.with_values(new, time=t + dt)

    def _reaction_diffusion(
        self,
        state: StateField,
        dt: float,
        source: Optional[np.ndarray] = None,
        boundary_shift: float = 0.0,
        with_input: bool = True,
    ) -> StateField:
        t, tm = state.time, state.time + 0.5 * dt
        H, M = self._boundary(t + dt)
        new = crank_nicolson_step(
            state.values,
            self.grid.h,
            dt,
            self._D(tm),
            np.zeros(self.grid.size),
            self._lam(tm),
            alpha=H,
            g=(M if with_input else 0.0) + boundary_shift,
            source=source,
        )
        return state.with_values(new, time=t + dt)


# ==================== 函数式入口 ====================

def step_plant(state: StateField, cs: CoefficientSet, dt: float) -> StateField:
    """u_t = D u_rr + b u_r + φ_rxn u，u(0)=0，u_r(1) = u(1) + U(t)"""
    return PdeStepper(cs, state.grid).plant(state, dt)


def step_transformed(state: StateField, cs: CoefficientSet, dt: float) -> StateField:
    """c_t = D c_rr + λ c，c(0)=0，c_r(1) = H c(1) + M"""
    return PdeStepper(cs, state.grid).transformed(state, dt)


def step_observer(state: StateField, cs: CoefficientSet, gains: ObserverGains, y: float, dt: float) -> StateField:
    """观测器只读取一个标量测量 y = c(1,t)"""
    return PdeStepper(cs, state.grid).observer(state, gains, y, dt)


def step_error(state: StateField, cs: CoefficientSet, gains: ObserverGains, dt: float) -> StateField:
    return PdeStepper(cs, state.grid).error(state, gains, dt)


def step_target(state: StateField, cs: CoefficientSet, mu: float, dt: float) -> StateField:
    """w̃_t = D w̃_rr + μ w̃，w̃(0)=0，w̃_r(1) = −½ w̃(1)"""
    return PdeStepper(cs, state.grid).target(state, mu, dt)
