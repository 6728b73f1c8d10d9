"""
ScenarioService - 观测器联合仿真服务层

职责：
1. 系数 → μ 上界 → 核函数 → 增益
2. 联合推进变换后对象 c、观测器 ĉ、原始对象 u，以及误差系统 c̃ 与目标系统 w̃
3. 记录 ‖c̃‖、W(t)，拟合衰减率，检查一致性三角

注意：
- 测量 y = c(1,t) 取自变换后对象 c，观测器每步只读这一个标量
- 每个阶段的异常包装为 StageError，带阶段名
"""
from __future__ import annotations

import time as _time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional, Tuple

import numpy as np
from loguru import logger

from src.kernel.direct import solve_kernel_direct
from src.kernel.fields import KernelField
from src.kernel.residual import KernelResidualReport, kernel_residual
from src.kernel.successive import solve_kernel
from src.problem.coefficients import CoefficientSet, MuBound, mu_bound_details, warn_if_not_admissible
from src.services.config import report_config, simulation_config
from src.services.gains_service import ObserverGains, compute_gains
from src.shared.config import get_settings
from src.shared.errors import PdeObserverError, StageError
from src.shared.scenario import ScenarioConfig
from src.simulation.diagnostics import DecayFit, LemmaCheck, check_lemma_decay, fit_decay, lyapunov_W
from src.simulation.steppers import PdeStepper
from src.transforms.gauge import gauge_forward, gauge_inverse
from src.transforms.grid import SpatialGrid, StateField
from src.transforms.volterra import volterra_apply, volterra_invert


# ==================== 数据类定义 ====================

@dataclass
class KernelStage:
    """核函数阶段产物（solve-kernel 与 simulate 共用）"""
    cs: CoefficientSet
    grid: SpatialGrid
    mu: float
    bound: MuBound
    kernel: KernelField
    residual: KernelResidualReport
    oracle: Optional[Dict[str, Any]] = None
    direct: Optional[KernelField] = None


@dataclass
class SimulationResult:
    times: np.ndarray
    c_tilde_norm: np.ndarray
    w_tilde_norm: np.ndarray
    W: np.ndarray
    snapshots: List[Tuple[float, Dict[str, StateField]]]
    fit: DecayFit
    target_fit: DecayFit
    lemma: LemmaCheck
    kernel_stage: KernelStage
    gains: ObserverGains
    consistency: Dict[str, float] = field(default_factory=dict)
    timings: Dict[str, float] = field(default_factory=dict)

    def summary(self, config: ScenarioConfig) -> Dict[str, Any]:
        ks = self.kernel_stage
        return {
            "config": config.model_dump(mode="json"),
            "mu": ks.mu,
            "coefficients": ks.cs.describe(),
            "mu_bound": ks.bound.bound,
            "lemma_rate": ks.bound.lemma_rate(ks.mu),
            "fit": self.fit.to_dict(),
            "target_fit": self.target_fit.to_dict(),
            "lemma_check": self.lemma.to_dict(),
            "kernel": {
                "iterations": ks.kernel.info.get("iterations"),
                "tail_norm": ks.kernel.info.get("tail_norm"),
                "iterate_norms": ks.kernel.info.get("iterate_norms"),
                "time_samples": int(ks.kernel.times.size),
                "residual": ks.residual.to_dict(),
                "oracle": ks.oracle,
            },
            "final_ratio": float(self.c_tilde_norm[-1] / self.c_tilde_norm[0]) if self.c_tilde_norm[0] > 0 else None,
            "consistency": self.consistency,
            "timings": self.timings,
            "regularity": report_config.REGULARITY_NOTE,
        }


# ==================== 服务类 ====================

class ScenarioService:
    """场景流水线"""

    @contextmanager
    def _stage(self, name: str, timings: Dict[str, float]) -> Iterator[None]:
        start = _time.perf_counter()
        logger.info(f"阶段开始: {name}")
        try:
            yield
        except StageError:
            raise
        except (PdeObserverError, ValueError, ArithmeticError) as exc:
            logger.error(f"阶段 {name} 失败: {exc}")
            raise StageError(name, exc) from exc
        finally:
            timings[name] = _time.perf_counter() - start
        logger.info(f"阶段完成: {name} ({timings[name]:.3f}s)")

    def resolve_mu(self, config: ScenarioConfig, cs: CoefficientSet, grid: SpatialGrid) -> Tuple[float, MuBound]:
        """μ 直接给定或取 上界 + mu_offset；不可容许时只警告"""
        vcfg = get_settings().solver.validation
        bound = mu_bound_details(cs, grid, np.linspace(0.0, config.time.T, vcfg.time_points))
        mu = config.target.mu if config.target.mu is not None else bound.bound + config.target.mu_offset
        warn_if_not_admissible(mu, bound.bound)
        logger.info(f"μ = {mu:.6g}，可容许上界 {bound.bound:.6g}")
        return float(mu), bound

    def kernel_times(self, config: ScenarioConfig, cs: CoefficientSet) -> np.ndarray:
        if cs.is_time_invariant:
            return np.zeros(1)
        k = config.kernel.time_samples or get_settings().solver.kernel.time_samples
        k = max(k, simulation_config.MIN_KERNEL_TIME_SAMPLES)
        return np.linspace(0.0, config.time.T, k)

    def build_kernel(
        self,
        config: ScenarioConfig,
        timings: Dict[str, float],
        tol: Optional[float] = None,
        max_iter: Optional[int] = None,
        oracle: Optional[bool] = None,
    ) -> KernelStage:
        with self._stage("coefficients", timings):
            cs = config.to_coefficients()
            grid = SpatialGrid(config.grid.n)
            mu, bound = self.resolve_mu(config, cs, grid)

        with self._stage("kernel", timings):
            kernel = solve_kernel(
                cs,
                mu,
                grid,
                self.kernel_times(config, cs),
                tol=tol if tol is not None else config.kernel.tol,
                max_iter=max_iter if max_iter is not None else config.kernel.max_iter,
            )
            residual = kernel_residual(kernel, cs, mu)

        oracle_info, direct = None, None
        if oracle if oracle is not None else config.kernel.oracle:
            with self._stage("oracle", timings):
                direct = solve_kernel_direct(cs, mu, grid)
                diff = np.nan_to_num(kernel.values[0] - direct.values[0], nan=0.0)
                oracle_info = {"max_abs_diff": float(np.max(np.abs(diff)))}
                logger.info(f"直接差分对照: max|Δp| = {oracle_info['max_abs_diff']:.3e}")

        return KernelStage(
            cs=cs, grid=grid, mu=float(mu), bound=bound, kernel=kernel, residual=residual,
            oracle=oracle_info, direct=direct,
        )

    def run(
        self,
        config: ScenarioConfig,
        seed: Optional[int] = None,
        tol: Optional[float] = None,
        max_iter: Optional[int] = None,
        oracle: Optional[bool] = None,
    ) -> SimulationResult:
        timings: Dict[str, float] = {}
        ks = self.build_kernel(config, timings, tol=tol, max_iter=max_iter, oracle=oracle)
        cs, grid, p, mu = ks.cs, ks.grid, ks.kernel, ks.mu

        with self._stage("gains", timings):
            gains = compute_gains(p, cs)

        with self._stage("simulate", timings):
            seed = config.seed if seed is None else seed
            result = self._simulate(config, ks, gains, seed)

        with self._stage("diagnostics", timings):
            fit = fit_decay(result["times"], result["c_tilde_norm"])
            target_fit = fit_decay(result["times"], result["w_tilde_norm"])
            lemma = check_lemma_decay(result["W"])
            logger.info(
                f"‖c̃‖ 衰减率 σ = {fit.sigma}（残差 {fit.residual}，converged={fit.converged}），"
                f"W 单调不增: {lemma.non_increasing}"
            )

        return SimulationResult(
            times=result["times"],
            c_tilde_norm=result["c_tilde_norm"],
            w_tilde_norm=result["w_tilde_norm"],
            W=result["W"],
            snapshots=result["snapshots"],
            fit=fit,
            target_fit=target_fit,
            lemma=lemma,
            kernel_stage=ks,
            gains=gains,
            consistency=result["consistency"],
            timings=timings,
        )

    def _simulate(self, config: ScenarioConfig, ks: KernelStage, gains: ObserverGains, seed: int) -> Dict[str, Any]:
        cs, grid, p, mu = ks.cs, ks.grid, ks.kernel, ks.mu
        dt, n_steps = config.time.dt, config.time.n_steps
        every = config.output.state_every
        with_error = config.output.consistency
        stepper = PdeStepper(cs, grid)
        nodes = grid.nodes
        ics = config.initial_conditions

        u = StateField(grid, ics.plant.evaluate(nodes, seed), 0.0, "u")
        c = gauge_forward(u, cs)
        c_hat = StateField(grid, ics.observer.evaluate(nodes, seed + 1), 0.0, "c_hat")
        c_err = StateField(grid, c.values - c_hat.values, 0.0, "c_tilde")
        w = volterra_invert(p, c_err)

        times = np.empty(n_steps + 1)
        c_norm = np.empty(n_steps + 1)
        w_norm = np.empty(n_steps + 1)
        W = np.empty(n_steps + 1)
        snapshots: List[Tuple[float, Dict[str, StateField]]] = []
        worst = {"plant_minus_observer_vs_error": 0.0, "error_vs_target": 0.0, "plant_minus_observer_vs_target": 0.0,
                 "gauge": 0.0}

        def record(k: int) -> None:
            diff = c.values - c_hat.values
            times[k] = c.time
            c_norm[k] = float(np.sqrt(np.trapezoid(diff**2, nodes)))
            w_norm[k] = w.l2_norm()
            W[k] = lyapunov_W(w)
            if k % every and k != n_steps:
                return
            pm = StateField(grid, diff, c.time, "c_tilde")
            mapped = volterra_apply(p, w).values
            worst["plant_minus_observer_vs_target"] = max(worst["plant_minus_observer_vs_target"],
                                                          float(np.max(np.abs(diff - mapped))))
            if with_error:
                worst["plant_minus_observer_vs_error"] = max(worst["plant_minus_observer_vs_error"],
                                                             float(np.max(np.abs(diff - c_err.values))))
                worst["error_vs_target"] = max(worst["error_vs_target"], float(np.max(np.abs(c_err.values - mapped))))
            worst["gauge"] = max(worst["gauge"], float(np.max(np.abs(gauge_forward(u, cs).values - c.values))))
            if config.output.write_states:
                snapshots.append(
                    (c.time, {"u": u, "c": c, "c_hat": c_hat, "c_tilde": pm, "w_tilde": w, "u_hat": gauge_inverse(c_hat, cs)})
                )

        record(0)
        for k in range(1, n_steps + 1):
            y = float(c.values[-1])
            c_hat = stepper.observer(c_hat, gains, y, dt)
            c = stepper.transformed(c, dt)
            u = stepper.plant(u, dt)
            if with_error:
                c_err = stepper.error(c_err, gains, dt)
            w = stepper.target(w, mu, dt)
            record(k)
            if k % max(1, n_steps // 10) == 0:
                logger.debug(f"t = {c.time:.4f}: ‖c̃‖ = {c_norm[k]:.3e}, W = {W[k]:.3e}")

        calibration = simulation_config.TRIANGLE_CALIBRATION * (dt + grid.h**2)
        consistency = {**worst, "tolerance": calibration}
        if not with_error:
            consistency.pop("plant_minus_observer_vs_error")
            consistency.pop("error_vs_target")
        return {
            "times": times,
            "c_tilde_norm": c_norm,
            "w_tilde_norm": w_norm,
            "W": W,
            "snapshots": snapshots,
            "consistency": consistency,
        }


scenario_service = ScenarioService()


def run_scenario(config: ScenarioConfig, **kwargs) -> SimulationResult:
    return scenario_service.run(config, **kwargs)
