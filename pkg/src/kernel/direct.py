"""
时不变核方程的直接差分解法（逐次逼近的独立对照）

D(r)p_rr − (D(s)p)_ss = (μ − λ(r))p，p(r,r) 为对角数据，p(0,s) = 0。
把 s 当作“时间”做 leapfrog 推进：列 j+1 由列 j、j−1 得到，
靠近对角线的一个点用对角线上的 P = p(r,r) 与 V = (p_r − p_s)(r,r) 的 Taylor 展开给出。
"""
from __future__ import annotations

import time as _time

import numpy as np
from loguru import logger
from scipy.integrate import solve_ivp

from src.kernel.fields import KernelField
from src.kernel.normalized import diagonal_trace
from src.problem.coefficients import CoefficientSet, lambda_field
from src.shared.errors import NumericalError, UnsupportedConfigurationError
from src.transforms.grid import SpatialGrid


def _diagonal_slopes(cs: CoefficientSet, mu: float, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    沿对角线积分 (J, V)：
        J' = (μ−λ)/√D,  P = J/(2√D),  P' = (μ−λ)/(2D) − D'P/(2D)
        V' = [(μ − λ + D'')P + D'(P' − V)]/D
    初值 J(0) = 0，V(0) = P'(0)（p(0,s) ≡ 0 使 p_s(0,0) = 0）。
    返回 points 处的 (P, V)。
    """
    D = cs.D

    def gap(r: float) -> float:
        return mu - float(lambda_field(cs, np.array([r]), 0.0)[0])

    def rhs(r, y):
        J, V = y
        d, d1, d2 = float(D.value(r, 0.0)), float(D.d_r(r, 0.0)), float(D.d_rr(r, 0.0))
        g = gap(r)
        P = J / (2.0 * np.sqrt(d))
        dP = g / (2.0 * d) - d1 * P / (2.0 * d)
        return [g / np.sqrt(d), ((g + d2) * P + d1 * (dP - V)) / d]

    v0 = gap(0.0) / (2.0 * float(D.value(0.0, 0.0)))
    sol = solve_ivp(rhs, (0.0, 1.0), [0.0, v0], method="DOP853", t_eval=points, rtol=1e-12, atol=1e-14)
    if not sol.success:
        raise NumericalError(f"对角线 ODE 积分失败: {sol.message}")
    J, V = sol.y
    P = J / (2.0 * np.sqrt(D.value(points, 0.0)))
    return P, V


def solve_kernel_direct(cs: CoefficientSet, mu: float, grid: SpatialGrid) -> KernelField:
    """时不变系数下的二阶 leapfrog 核函数解"""
    if not cs.is_time_invariant:
        raise UnsupportedConfigurationError("直接差分解法只支持时不变系数")
    n, h = grid.n_cells, grid.h
    r = grid.nodes
    D = cs.D.value(r, 0.0)
    if np.any(np.diff(D) < -1e-14 * float(np.max(np.abs(D)))):
        # s 方向推进的 Courant 数为 √(D(r)/D(s))，需 ≤ 1
        raise UnsupportedConfigurationError("D 沿 r 递减时 leapfrog 推进违反 CFL 条件，请改用逐次逼近")

    start = _time.perf_counter()
    D1 = cs.D.d_r(r, 0.0)
    D2 = cs.D.d_rr(r, 0.0)
    gap = mu - lambda_field(cs, r, 0.0)
    trace = diagonal_trace(cs, mu, r, 0.0)
    P_mid, V_mid = _diagonal_slopes(cs, mu, r[:-1] + 0.5 * h)
    near_diag = P_mid - 0.5 * h * V_mid

    p = np.zeros((grid.size, grid.size))
    p[0, 0] = trace[0]
    if n >= 1:
        p[1, 1] = trace[1]
    for j in range(1, n):
        a = D[j] / h**2
        c = D1[j] / h
        i = np.arange(1, j)
        if i.size:
            lap_r = D[i] * (p[i + 1, j] - 2.0 * p[i, j] + p[i - 1, j]) / h**2
            p[i, j + 1] = (
                lap_r + 2.0 * a * p[i, j] - (a - c) * p[i, j - 1] - (D2[j] + gap[i]) * p[i, j]
            ) / (a + c)
        p[j, j + 1] = near_diag[j]
        p[j + 1, j + 1] = trace[j + 1]
        p[0, j + 1] = 0.0

    if not np.all(np.isfinite(p[np.triu_indices(grid.size)])):
        raise NumericalError("直接差分核函数出现非有限值")
    elapsed = _time.perf_counter() - start
    logger.info(f"直接差分核函数完成: n={n}, 用时 {elapsed:.3f}s")
    return KernelField(
        grid=grid,
        times=np.zeros(1),
        values=p,
        mu=float(mu),
        time_invariant=True,
        info={"method": "direct", "elapsed_s": elapsed},
    )
