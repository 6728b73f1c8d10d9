"""核方程残差检查：内部 PDE、对角数据、r = 0 边。"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Any, Dict, Tuple

import numpy as np
from loguru import logger

from src.kernel.fields import KernelField
from src.kernel.normalized import diagonal_trace
from src.problem.coefficients import CoefficientSet, lambda_field
from src.shared.errors import ConfigurationError


@dataclass(frozen=True)
class KernelResidualReport:
    interior_max: float
    interior_l2: float
    argmax: Tuple[float, float, float]   # (r, s, t)
    diagonal: float
    edge: float
    n_cells: int
    time_samples: int

    def to_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        out["argmax"] = list(self.argmax)
        return out


def _interior_residual(p: np.ndarray, p_t: np.ndarray, cs: CoefficientSet, mu: float, grid, t: float) -> np.ndarray:
    """R = p_t − D(r)p_rr + (D(s)p)_ss + (μ−λ)p，仅 1 ≤ i ≤ j−1, j ≤ n−1 有定义，其余为 0"""
    n, h = grid.n_cells, grid.h
    r = grid.nodes
    D = cs.D.value(r, t)
    gap = mu - lambda_field(cs, r, t)
    R = np.zeros((grid.size, grid.size))
    if n < 3:
        return R
    # 上三角以外是 NaN，先置 0，下面只取内部节点
    q = np.nan_to_num(p, nan=0.0)
    Dq = q * D[None, :]
    i = np.arange(1, n)[:, None]
    j = np.arange(1, n)[None, :]
    p_rr = (q[2:, 1:-1] - 2.0 * q[1:-1, 1:-1] + q[:-2, 1:-1]) / h**2
    dp_ss = (Dq[1:-1, 2:] - 2.0 * Dq[1:-1, 1:-1] + Dq[1:-1, :-2]) / h**2
    block = (
        np.nan_to_num(p_t[1:-1, 1:-1], nan=0.0)
        - D[1:-1, None] * p_rr
        + dp_ss
        + gap[1:-1, None] * q[1:-1, 1:-1]
    )
    R[1:-1, 1:-1] = np.where(i <= j - 1, block, 0.0)
    return R


def kernel_residual(p: KernelField, cs: CoefficientSet, mu: float) -> KernelResidualReport:
    """在内部三角节点上用中心差分计算核方程残差"""
    grid = p.grid
    K = p.times.size
    if p.time_invariant or K == 1:
        if not cs.is_time_invariant:
            logger.warning("系数时变但核函数只有一个时间样本，p_t 按 0 处理")
        p_t = np.zeros_like(p.values)
    else:
        if K < 3:
            raise ConfigurationError(f"时变核函数残差至少需要 3 个时间样本，当前 {K}")
        p_t = np.gradient(p.values, p.times, axis=0, edge_order=2)

    best = (0.0, (0.0, 0.0, float(p.times[0])))
    sq_sum = 0.0
    diag_err = 0.0
    edge_err = 0.0
    for k, t in enumerate(p.times):
        R = _interior_residual(p.values[k], p_t[k], cs, mu, grid, float(t))
        idx = np.unravel_index(int(np.argmax(np.abs(R))), R.shape)
        if abs(R[idx]) > best[0]:
            best = (float(abs(R[idx])), (float(grid.nodes[idx[0]]), float(grid.nodes[idx[1]]), float(t)))
        sq_sum += float(np.sum(R**2)) * grid.h**2
        trace = diagonal_trace(cs, mu, grid.nodes, float(t))
        diag_err = max(diag_err, float(np.max(np.abs(p.diagonal(k) - trace))))
        edge_err = max(edge_err, float(np.max(np.abs(p.values[k][0, :]))))

    report = KernelResidualReport(
        interior_max=best[0],
        interior_l2=float(np.sqrt(sq_sum / K)),
        argmax=best[1],
        diagonal=diag_err,
        edge=edge_err,
        n_cells=grid.n_cells,
        time_samples=K,
    )
    logger.info(
        f"核方程残差: 内部 max={report.interior_max:.3e} L2={report.interior_l2:.3e}, "
        f"对角 {report.diagonal:.2e}, 边 {report.edge:.2e}"
    )
    return report
