"""
系数校验报告

检查项：
1. D 的正性：采样网格 × 采样时间上的 min D
2. 偏导一致性：解析偏导 vs 中心差分（d_r, d_rr, d_t, d_rt）
3. 边界输入 U(t) 是否有限

报告本身不抛异常，失败写在 alerts 里。
"""
from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any, Dict, Iterable, List, Optional

import numpy as np
from loguru import logger

from src.problem.coefficients import CoefficientSet
from src.problem.families import ScalarField
from src.shared.config import get_settings
from src.transforms.grid import SpatialGrid


@dataclass
class ValidationReport:
    timestamp: str
    metrics: Dict[str, Any] = field(default_factory=dict)
    alerts: List[Dict[str, str]] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not any(a["severity"] == "error" for a in self.alerts)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "timestamp": self.timestamp,
            "metrics": self.metrics,
            "alerts": self.alerts,
            "summary": self.summary,
        }


class CoefficientValidator:
    """系数校验器"""

    FIELDS = ("D", "b", "phi_rxn")

    def __init__(self, cs: CoefficientSet, grid: SpatialGrid, t_samples: Iterable[float], fd_step: Optional[float] = None):
        vcfg = get_settings().solver.validation
        self.cs = cs
        self.grid = grid
        self.t_samples = np.asarray(list(t_samples), dtype=float)
        self.h = vcfg.fd_step if fd_step is None else float(fd_step)
        self.tol = vcfg.partial_tol
        self.report = ValidationReport(timestamp=datetime.now(timezone.utc).isoformat())

    def _alert(self, severity: str, message: str) -> None:
        self.report.alerts.append({"severity": severity, "message": message})

    def check_positivity(self) -> None:
        """检查 D > 0"""
        R, T = np.meshgrid(self.grid.nodes, self.t_samples, indexing="ij")
        min_D = float(np.min(self.cs.D.value(R, T)))
        self.report.metrics["min_D"] = min_D
        if not min_D > 0.0:
            self._alert("error", f"D 非正: 采样点上 min D = {min_D:.6g}")

    def _partial_discrepancies(self, f: ScalarField) -> Dict[str, float]:
        h = self.h
        R, T = np.meshgrid(self.grid.nodes, self.t_samples, indexing="ij")
        v = f.value
        fd = {
            "d_r": (v(R + h, T) - v(R - h, T)) / (2 * h),
            "d_rr": (v(R + h, T) - 2 * v(R, T) + v(R - h, T)) / h**2,
            "d_t": (v(R, T + h) - v(R, T - h)) / (2 * h),
            "d_rt": (v(R + h, T + h) - v(R + h, T - h) - v(R - h, T + h) + v(R - h, T - h)) / (4 * h**2),
        }
        return {name: float(np.max(np.abs(getattr(f, name)(R, T) - approx))) for name, approx in fd.items()}

    def check_partials(self) -> None:
        """解析偏导 vs 中心差分"""
        worst = 0.0
        for name in self.FIELDS:
            disc = self._partial_discrepancies(getattr(self.cs, name))
            self.report.metrics[f"{name}_partials"] = disc
            for partial, value in disc.items():
                worst = max(worst, value)
                if not value <= self.tol:
                    self._alert("error", f"{name}.{partial} 与中心差分不一致: 最大偏差 {value:.3e} (容差 {self.tol:.1e})")
        self.report.metrics["max_partial_discrepancy"] = worst

    def check_input(self) -> None:
        u = np.array([float(self.cs.U(t)) for t in self.t_samples])
        self.report.metrics["max_abs_U"] = float(np.max(np.abs(u))) if u.size else 0.0
        if not np.all(np.isfinite(u)):
            self._alert("error", "边界输入 U(t) 含非有限值")

    def generate_summary(self) -> None:
        errors = sum(1 for a in self.report.alerts if a["severity"] == "error")
        warnings = sum(1 for a in self.report.alerts if a["severity"] == "warning")
        self.report.summary = {
            "total_alerts": len(self.report.alerts),
            "errors": errors,
            "warnings": warnings,
            "health_status": "failed" if errors else ("degraded" if warnings else "healthy"),
            "fd_step": self.h,
            "grid_points": self.grid.size,
            "time_points": int(self.t_samples.size),
        }

    def run_all_checks(self) -> ValidationReport:
        logger.info("开始系数校验...")
        self.check_positivity()
        self.check_partials()
        self.check_input()
        self.generate_summary()
        logger.info(f"系数校验完成: {self.report.summary['health_status']}")
        for alert in self.report.alerts:
            logger.warning(f"[{alert['severity']}] {alert['message']}")
        return self.report


def validate(cs: CoefficientSet, grid: Optional[SpatialGrid] = None, t_samples: Optional[Iterable[float]] = None) -> ValidationReport:
    """正性与偏导一致性校验；网格与时间采样缺省取配置中的点数"""
    vcfg = get_settings().solver.validation
    if grid is None:
        grid = SpatialGrid(vcfg.grid_points - 1)
    if t_samples is None:
        t_samples = np.linspace(0.0, cs.horizon_T, vcfg.time_points)
    return CoefficientValidator(cs, grid, t_samples).run_all_checks()
