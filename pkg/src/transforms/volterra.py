"""
Volterra 积分变换 c̃(r) = w̃(r) − ∫_r¹ p(r,s,t)·w̃(s) ds 及其离散逆。

离散算子是上三角的（节点 i 只依赖 j ≥ i），逆变换用回代求解。
"""
from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular

from src.kernel.fields import KernelField
from src.shared.config import get_settings
from src.shared.errors import NumericalError, ShapeMismatchError
from src.transforms.grid import SpatialGrid, StateField


def trapezoid_weights(grid: SpatialGrid) -> np.ndarray:
    """第 i 行为 s ∈ [r_i, 1] 上的梯形权重"""
    n = grid.size
    W = np.triu(np.full((n, n), grid.h))
    idx = np.arange(n)
    W[idx, idx] = 0.5 * grid.h
    W[:, -1] = np.where(idx < n - 1, 0.5 * grid.h, 0.0)
    W[-1, -1] = 0.0
    return W


def volterra_operator(p_slice: np.ndarray, grid: SpatialGrid) -> np.ndarray:
    """I − K，其中 K[i,j] = w_ij·p(r_i, s_j)"""
    W = trapezoid_weights(grid)
    K = np.where(W > 0.0, W * np.nan_to_num(p_slice), 0.0)
    return np.eye(grid.size) - K


def _slice_for(p: KernelField, field: StateField) -> np.ndarray:
    if p.grid != field.grid:
        raise ShapeMismatchError(f"网格不匹配: kernel n={p.grid.n_cells}, state n={field.grid.n_cells}")
    return p.at_time(field.time, interpolate=True)


def volterra_apply(p: KernelField, w: StateField) -> StateField:
    """w̃ → c̃"""
    A = volterra_operator(_slice_for(p, w), w.grid)
    return w.with_values(A @ w.values, label="c_tilde")


def volterra_invert(p: KernelField, c_tilde: StateField) -> StateField:
    """c̃ → w̃：上三角系统回代"""
    A = volterra_operator(_slice_for(p, c_tilde), c_tilde.grid)
    diag = np.diag(A)
    tol = get_settings().solver.volterra.singular_tol
    if np.any(np.abs(diag) < tol):
        i = int(np.argmin(np.abs(diag)))
        raise NumericalError(f"Volterra 逆变换对角元奇异: i={i}, 值={diag[i]:.3e}")
    w = solve_triangular(A, c_tilde.values, lower=False)
    return c_tilde.with_values(w, label="w_tilde")
