"""
问题数据与派生标量场

CoefficientSet 保存 D(r,t)、b(r,t)、φ_rxn(r,t)、U(t) 与有限时域 T，并提供：
- λ(r,t)：消去对流项后的反应系数（含 ∫₀ʳ ∂_t(b/D) dτ 积分项）
- M(t)、H(t)：变换后 Robin 边界的源项与增益
- μ 的可容许上界（有限时域、采样网格上的 max/min）

注意：
- φ_rxn 是反应系数，坐标映射 φ_map 在 src.transforms.coordinate_map 中，二者不要混用
- 所有求值都是纯函数，CoefficientSet 构造后不可变，可在多线程中并发调用
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Dict, Iterable, Optional

import numpy as np
from loguru import logger
from scipy.integrate import cumulative_simpson, simpson
from scipy.interpolate import CubicSpline

from src.problem.families import BoundaryInput, ScalarField
from src.shared.config import get_settings
from src.shared.errors import DomainRangeError, InvariantViolationError, NumericalError
from src.transforms.grid import SpatialGrid


# ==================== 数据类定义 ====================

@dataclass(frozen=True)
class CoefficientSet:
    """PDE 系数集合（构造后不可变）"""
    D: ScalarField
    b: ScalarField
    phi_rxn: ScalarField
    U: BoundaryInput
    horizon_T: float

    @property
    def is_time_invariant(self) -> bool:
        return self.D.is_time_invariant and self.b.is_time_invariant and self.phi_rxn.is_time_invariant

    def describe(self) -> Dict[str, Any]:
        return {
            "D": self.D.describe(),
            "b": self.b.describe(),
            "phi_rxn": self.phi_rxn.describe(),
            "U": self.U.describe(),
            "horizon_T": self.horizon_T,
        }


@dataclass(frozen=True)
class DerivedBoundaryData:
    """t 时刻的 M(t)、H(t) 采样"""
    t: float
    M: float
    H: float


@dataclass(frozen=True)
class MuBound:
    """μ 上界及其组成部分"""
    bound: float
    max_abs_D_rr: float
    D_m: float
    min_D: float

    def lemma_rate(self, mu: float) -> float:
        """‖w̃‖ 的保证衰减率 μ + max|D_rr|/2 + D_m²/min D（W 的衰减率为其两倍）"""
        return mu - self.bound


@dataclass(frozen=True)
class TargetParams:
    """目标系统参数"""
    mu: float

    @classmethod
    def checked(
        cls,
        mu: float,
        cs: CoefficientSet,
        grid: SpatialGrid,
        t_samples: Iterable[float],
    ) -> "TargetParams":
        """带可容许性检查的构造函数（严格不等式）"""
        bound = mu_bound(cs, grid, t_samples)
        if not is_admissible(mu, bound):
            raise InvariantViolationError(f"μ={mu} 不满足可容许条件 μ < {bound}")
        return cls(mu=float(mu))


# ==================== 定义域检查 ====================

def _check_r(r, what: str = "r") -> None:
    arr = np.asarray(r, dtype=float)
    if np.any(arr < -1e-14) or np.any(arr > 1.0 + 1e-14):
        raise DomainRangeError(f"{what} 超出 [0,1]: {arr.min() if arr.size else r}..{arr.max() if arr.size else r}")


def _check_t(cs: CoefficientSet, t: float) -> None:
    if t < -1e-14 or t > cs.horizon_T + 1e-9 * max(1.0, cs.horizon_T):
        raise DomainRangeError(f"t={t} 超出时域 [0, {cs.horizon_T}]")


def _n_intervals(length: float, step: float, multiple: int = 4) -> int:
    n = max(multiple, int(math.ceil(length / step)))
    return n + (-n) % multiple


# ==================== λ(r,t) ====================

def _time_integrand(cs: CoefficientSet, tau, t):
    """∂_t(b/D) = b_t/D − b·D_t/D²"""
    D = cs.D.value(tau, t)
    return cs.b.d_t(tau, t) / D - cs.b.value(tau, t) * cs.D.d_t(tau, t) / D**2


def _local_lambda(cs: CoefficientSet, r, t):
    """λ 中不含积分的部分"""
    D = cs.D.value(r, t)
    b = cs.b.value(r, t)
    return cs.phi_rxn.value(r, t) - b**2 / (4.0 * D) - cs.b.d_r(r, t) / 2.0 + b * cs.D.d_r(r, t) / (2.0 * D)


def _has_time_integral(cs: CoefficientSet) -> bool:
    return not (cs.b.is_time_invariant and cs.D.is_time_invariant)


def time_integral(cs: CoefficientSet, r: float, t: float) -> tuple[float, float]:
    """∫₀ʳ ∂_t(b/D) dτ，返回 (值, Richardson 误差估计)"""
    if r == 0.0 or not _has_time_integral(cs):
        return 0.0, 0.0
    step = get_settings().solver.quadrature.step
    n = _n_intervals(r, step)
    tau = np.linspace(0.0, r, n + 1)
    f = _time_integrand(cs, tau, t)
    fine = simpson(f, x=tau)
    coarse = simpson(f[::2], x=tau[::2])
    return float(fine), float(abs(fine - coarse) / 15.0)


def eval_lambda(cs: CoefficientSet, r: float, t: float) -> float:
    """
    计算 λ(r,t) = φ − b²/4D − b_r/2 + b·D_r/2D + ½∫₀ʳ ∂_t(b/D) dτ

    Raises:
        DomainRangeError: r 或 t 越界
        NumericalError: 积分误差估计超过阈值
    """
    _check_r(r)
    _check_t(cs, t)
    integral, err = time_integral(cs, float(r), float(t))
    tol = get_settings().solver.quadrature.richardson_tol
    if err > tol:
        raise NumericalError(f"λ 积分项未收敛: r={r}, t={t}, 误差估计 {err:.2e} > {tol:.1e}")
    return float(_local_lambda(cs, r, t) + 0.5 * integral)


def cumulative_integral(cs: CoefficientSet, integrand, r_nodes: np.ndarray, t: float) -> np.ndarray:
    """在细网格上做累积 Simpson，再用三次样条取到任意节点"""
    r_nodes = np.asarray(r_nodes, dtype=float)
    r_max = float(r_nodes.max()) if r_nodes.size else 0.0
    if r_max <= 0.0:
        return np.zeros_like(r_nodes)
    step = get_settings().solver.quadrature.step
    n = _n_intervals(r_max, step, multiple=2)
    tau = np.linspace(0.0, r_max, n + 1)
    cum = cumulative_simpson(integrand(tau, t), x=tau, initial=0.0)
    return CubicSpline(tau, cum)(r_nodes)


def lambda_field(cs: CoefficientSet, r_nodes, t: float) -> np.ndarray:
    """向量化的 λ(r,t)，供核函数求解与时间推进使用"""
    r_nodes = np.asarray(r_nodes, dtype=float)
    local = _local_lambda(cs, r_nodes, t)
    if not _has_time_integral(cs):
        return np.asarray(local, dtype=float)
    integral = cumulative_integral(cs, lambda tau, tt: _time_integrand(cs, tau, tt), r_nodes, t)
    return local + 0.5 * integral


def advection_exponent(cs: CoefficientSet, r_nodes, t: float) -> np.ndarray:
    """规范因子指数 ∫₀ʳ b/(2D) dτ"""
    return cumulative_integral(
        cs, lambda tau, tt: cs.b.value(tau, tt) / (2.0 * cs.D.value(tau, tt)), np.asarray(r_nodes), t
    )


# ==================== M(t), H(t) ====================

def eval_boundary_data(cs: CoefficientSet, t: float) -> DerivedBoundaryData:
    """M(t) = U(t)·exp(∫₀¹ b/2D dτ)，H(t) = 1 + b(1,t)/2D(1,t)"""
    _check_t(cs, t)
    step = get_settings().solver.quadrature.step
    n = _n_intervals(1.0, step)
    tau = np.linspace(0.0, 1.0, n + 1)
    f = cs.b.value(tau, t) / (2.0 * cs.D.value(tau, t))
    exponent = simpson(f, x=tau)
    if not np.isfinite(exponent):
        raise NumericalError(f"M(t) 指数积分失败: t={t}")
    M = float(cs.U(t)) * math.exp(exponent)
    H = 1.0 + float(cs.b.value(1.0, t)) / (2.0 * float(cs.D.value(1.0, t)))
    return DerivedBoundaryData(t=float(t), M=M, H=H)


# ==================== μ 上界 ====================

def mu_bound_details(cs: CoefficientSet, grid: SpatialGrid, t_samples: Iterable[float]) -> MuBound:
    """在采样网格 × 采样时间上计算 μ 的严格上界"""
    ts = np.asarray(list(t_samples), dtype=float)
    if grid.n_cells < 1 or ts.size == 0:
        raise DomainRangeError("mu_bound 需要非空网格与时间采样")
    R, TT = np.meshgrid(grid.nodes, ts, indexing="ij")
    D = cs.D.value(R, TT)
    min_D = float(D.min())
    if min_D <= 0.0:
        raise InvariantViolationError(f"D 在采样点上非正: min D = {min_D:.3e}")
    max_abs_D_rr = float(np.abs(cs.D.d_rr(R, TT)).max())
    edge = -(cs.D.value(1.0, ts) + cs.D.d_r(1.0, ts)) / 2.0
    D_m = float(np.max(np.maximum(0.0, edge)))
    bound = -(max_abs_D_rr / 2.0 + D_m**2 / min_D)
    return MuBound(bound=float(bound), max_abs_D_rr=max_abs_D_rr, D_m=D_m, min_D=min_D)


def mu_bound(cs: CoefficientSet, grid: SpatialGrid, t_samples: Iterable[float]) -> float:
    """可容许 μ 的严格上界：μ < −(max|D_rr|/2 + D_m²/min D)"""
    return mu_bound_details(cs, grid, t_samples).bound


def is_admissible(mu: float, bound: float) -> bool:
    return mu < bound


def warn_if_not_admissible(mu: float, bound: Optional[float]) -> None:
    if bound is not None and not is_admissible(mu, bound):
        logger.warning(f"μ={mu} 不满足可容许条件 μ < {bound:.6g}，核函数仍可求解但不保证衰减")
