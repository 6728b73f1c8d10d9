"""
核方程标准化所需的系数

- L(y,t)：消去一阶项后的零阶修正
- λ̄(r,s,t)：标准化核方程 p̄_t = D(0,t)(p̄_r̄r̄ − p̄_s̄s̄) + λ̄·p̄ 的反应系数
- 对角数据 p(r,r,t) = 1/(2√D(r,t))·∫₀ʳ (μ−λ)/√D dτ
- ψ 格点上下文 PsiLattice（每个时间样本一张格点）
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from src.kernel.fields import psi_valid_mask
from src.problem.coefficients import CoefficientSet, cumulative_integral, lambda_field
from src.transforms.coordinate_map import CoordinateMap, coordinate_map


def eval_L(cs: CoefficientSet, y, t: float):
    """
    L(y,t) = √D(y,t)·∂_y(D_y/√D)/(4·D(0,t)) + D_y²/(16·D·D(0,t))

    第一项中 √D(y,t)/√D(0,t) 来自 dy/dȳ 的链式法则。
    """
    D = cs.D.value(y, t)
    D_y = cs.D.d_r(y, t)
    D_yy = cs.D.d_rr(y, t)
    D0 = cs.D.value(0.0, t)
    # ∂_y(D_y/√D) = D_yy/√D − D_y²/(2·D^{3/2})
    d_ratio = D_yy / np.sqrt(D) - D_y**2 / (2.0 * D**1.5)
    out = np.sqrt(D) * d_ratio / (4.0 * D0) + D_y**2 / (16.0 * D * D0)
    return float(out) if np.ndim(out) == 0 else out


def eval_lambda_bar(cs: CoefficientSet, mu: float, r, s, t: float, lam_r=None):
    """
    λ̄ = −D_r²/8D(r) + D_s²/8D(s) + D(0,t)(L(r)−L(s))
        − ∂_t(D(r)D(s))/(4D(r)D(s)) + D_t(s)/D(s) − (μ − λ(r,t))

    Args:
        lam_r: 可选，预先算好的 λ(r,t)（与 r 同形状）
    """
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    Dr, Ds = cs.D.value(r, t), cs.D.value(s, t)
    Dr_r, Ds_s = cs.D.d_r(r, t), cs.D.d_r(s, t)
    Dr_t, Ds_t = cs.D.d_t(r, t), cs.D.d_t(s, t)
    D0 = cs.D.value(0.0, t)
    if lam_r is None:
        lam_r = lambda_field(cs, r.ravel(), t).reshape(r.shape) if r.ndim else lambda_field(cs, [float(r)], t)[0]
    out = (
        -(Dr_r**2) / (8.0 * Dr)
        + Ds_s**2 / (8.0 * Ds)
        + D0 * (eval_L(cs, r, t) - eval_L(cs, s, t))
        - (Dr_t * Ds + Dr * Ds_t) / (4.0 * Dr * Ds)
        + Ds_t / Ds
        - (mu - lam_r)
    )
    return float(out) if np.ndim(out) == 0 else out


def diagonal_integral(cs: CoefficientSet, mu: float, r_nodes, t: float) -> np.ndarray:
    """J(r) = ∫₀ʳ (μ − λ(τ,t))/√D(τ,t) dτ"""
    return cumulative_integral(
        cs,
        lambda tau, tt: (mu - lambda_field(cs, tau, tt)) / np.sqrt(cs.D.value(tau, tt)),
        np.asarray(r_nodes, dtype=float),
        t,
    )


def diagonal_trace(cs: CoefficientSet, mu: float, r_nodes, t: float) -> np.ndarray:
    """对角数据 p(r,r,t) = J(r)/(2√D(r,t))"""
    r_nodes = np.asarray(r_nodes, dtype=float)
    return diagonal_integral(cs, mu, r_nodes, t) / (2.0 * np.sqrt(cs.D.value(r_nodes, t)))


def psi_initial(cs: CoefficientSet, mu: float, xi: float, eta: float, t: float) -> float:
    """
    ψ⁰(ξ,η,t) = (1/4√D(0,t))·∫_{−η}^{ξ} (μ − λ(φ⁻¹(τ/2),t)) dτ

    换元 τ/2 = φ_map(ρ) 后等于 ½·(J(φ⁻¹(ξ/2)) − J(φ⁻¹(−η/2)))；
    λ 为常数时化为 (1/4√D(0,t))(μ−λ)(ξ+η)。
    """
    cmap = coordinate_map(cs, t)
    r_hi, r_lo = cmap.inverse([xi / 2.0, -eta / 2.0])
    J = diagonal_integral(cs, mu, np.array([r_hi, r_lo]), t)
    return float(0.5 * (J[0] - J[1]))


# ==================== ψ 格点上下文 ====================

@dataclass(frozen=True)
class NormalizedCoeffs:
    """单个时间样本上的标准化系数：坐标映射、半节点 r 值、格点上的 λ̄ 与 ψ⁰"""
    t: float
    cmap: CoordinateMap
    D0: float
    h_bar: float
    r_half: np.ndarray       # r̄ = q·h̄/2 (q = 0..2N) 对应的 r
    lambda_bar: np.ndarray   # (2N+1, 2N+1)，按 (k, m) 索引
    psi0: np.ndarray         # (2N+1, 2N+1)


@dataclass(frozen=True)
class PsiLattice:
    cs: CoefficientSet
    mu: float
    n_bar: int
    times: np.ndarray
    slices: List[NormalizedCoeffs]
    time_invariant: bool

    @property
    def valid(self) -> np.ndarray:
        return psi_valid_mask(self.n_bar)

    @property
    def h_bar(self) -> np.ndarray:
        return np.array([s.h_bar for s in self.slices])

    @property
    def D0(self) -> np.ndarray:
        return np.array([s.D0 for s in self.slices])


def _normalized_slice(cs: CoefficientSet, mu: float, n_bar: int, t: float) -> NormalizedCoeffs:
    cmap = coordinate_map(cs, t)
    h_bar = cmap.bar_length / n_bar
    q = np.arange(2 * n_bar + 1)
    r_half = cmap.inverse(q * h_bar / 2.0)
    lam_half = lambda_field(cs, r_half, t)
    J = diagonal_integral(cs, mu, r_half, t)

    k = q[:, None]
    m = q[None, :]
    valid = psi_valid_mask(n_bar)
    qr = np.clip(k - m, 0, 2 * n_bar)
    qs = np.clip(k + m, 0, 2 * n_bar)
    # λ̄ 在 (r, s) = (r_half[k−m], r_half[k+m]) 上取值
    lam_bar = eval_lambda_bar(cs, mu, r_half[qr], r_half[qs], t, lam_r=lam_half[qr])
    lam_bar = np.where(valid, lam_bar, 0.0)
    psi0 = np.where(valid, 0.5 * (J[k] - J[m]), 0.0)
    return NormalizedCoeffs(
        t=float(t),
        cmap=cmap,
        D0=float(cs.D.value(0.0, t)),
        h_bar=float(h_bar),
        r_half=r_half,
        lambda_bar=lam_bar,
        psi0=psi0,
    )


def build_psi_lattice(cs: CoefficientSet, mu: float, n_bar: int, t_samples: Sequence[float]) -> PsiLattice:
    """为每个时间样本构造标准化系数；时不变系数只构造一张"""
    times = np.atleast_1d(np.asarray(list(t_samples), dtype=float))
    time_invariant = cs.is_time_invariant
    if time_invariant:
        times = times[:1]
    slices = [_normalized_slice(cs, mu, n_bar, float(t)) for t in times]
    return PsiLattice(
        cs=cs, mu=float(mu), n_bar=n_bar, times=times, slices=slices, time_invariant=time_invariant
    )
