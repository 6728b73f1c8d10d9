"""范数、Lyapunov 函数与衰减率拟合。"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Any, Dict, Iterable, Optional, Sequence

import numpy as np
from loguru import logger

from src.problem.coefficients import CoefficientSet, mu_bound_details
from src.shared.config import get_settings
from src.shared.errors import ConfigurationError
from src.transforms.grid import SpatialGrid, StateField


@dataclass(frozen=True)
class DecayFit:
    sigma: Optional[float]
    residual: Optional[float]
    converged: bool
    n_samples: int
    window_start: float

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class LemmaCheck:
    non_increasing: bool
    max_increase: float
    first_violation: Optional[int]

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def lyapunov_W(w: StateField) -> float:
    """W = ½∫₀¹ w̃² dr（梯形公式）"""
    return 0.5 * float(np.trapezoid(w.values**2, w.grid.nodes))


def fit_decay(times: Sequence[float], norms: Sequence[float]) -> DecayFit:
    """
    log‖·‖ 对 t 的最小二乘直线拟合，返回斜率 σ 与 RMS 残差

    拟合窗口去掉前 transient_fraction 的时域；窗口内出现非正样本时置 converged，
    只用其之前的正样本拟合。
    """
    fcfg = get_settings().solver.fit
    t = np.asarray(times, dtype=float)
    y = np.asarray(norms, dtype=float)
    if t.shape != y.shape:
        raise ConfigurationError(f"时间与范数序列长度不一致: {t.shape} vs {y.shape}")
    if t.size < fcfg.min_samples:
        raise ConfigurationError(f"衰减拟合至少需要 {fcfg.min_samples} 个样本，当前 {t.size}")

    start = t[0] + fcfg.transient_fraction * (t[-1] - t[0])
    window = t >= start
    t_w, y_w = t[window], y[window]
    converged = bool(np.any(y_w <= 0.0))
    if converged:
        first = int(np.argmax(y_w <= 0.0))
        t_w, y_w = t_w[:first], y_w[:first]
    if t_w.size < 2:
        return DecayFit(sigma=None, residual=None, converged=converged, n_samples=int(t_w.size), window_start=float(start))

    log_y = np.log(y_w)
    slope, intercept = np.polyfit(t_w, log_y, 1)
    residual = float(np.sqrt(np.mean((log_y - (slope * t_w + intercept)) ** 2)))
    if converged:
        logger.info("范数在拟合窗口内降到 0，衰减拟合标记为 converged")
    return DecayFit(
        sigma=float(slope), residual=residual, converged=converged, n_samples=int(t_w.size), window_start=float(start)
    )


def check_lemma_decay(W: Iterable[float], rtol: float = 1e-12) -> LemmaCheck:
    """W(t) 在每个记录步上不增（允许舍入量级的增长）"""
    W = np.asarray(list(W), dtype=float)
    if W.size < 2:
        return LemmaCheck(non_increasing=True, max_increase=0.0, first_violation=None)
    inc = np.diff(W)
    allowed = rtol * np.abs(W[:-1])
    bad = np.flatnonzero(inc > allowed)
    return LemmaCheck(
        non_increasing=bad.size == 0,
        max_increase=float(max(inc.max(), 0.0)),
        first_violation=int(bad[0]) + 1 if bad.size else None,
    )


def lyapunov_rate_bound(cs: CoefficientSet, mu: float, grid: SpatialGrid, t_samples: Iterable[float]) -> float:
    """‖w̃‖ 的保证衰减率 μ + max|D_rr|/2 + D_m²/min D（μ 可容许时为负）"""
    return mu_bound_details(cs, grid, t_samples).lemma_rate(mu)
