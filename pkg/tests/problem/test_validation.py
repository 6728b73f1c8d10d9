"""
系数校验报告测试
"""
import math

import numpy as np
import pytest

from src.problem.validation import CoefficientValidator, validate
from src.transforms.grid import SpatialGrid

pytestmark = pytest.mark.unit


class TestCoefficientValidator:
    """测试正性与偏导一致性检查"""

    def test_constant_passes(self, make_cs):
        report = validate(make_cs())
        assert report.passed
        assert report.summary["health_status"] == "healthy"
        assert report.metrics["max_partial_discrepancy"] == 0.0
        assert report.metrics["min_D"] == 1.0

    def test_wrong_partial_named(self, make_cs):
        """D≡1 但声明 D_r = 1：偏差约为 1，告警点名 D.d_r"""
        cs = make_cs(D={"family": "constant", "value": 1.0, "partials": {"d_r": {"family": "constant", "value": 1.0}}})
        report = validate(cs)
        assert not report.passed
        assert report.summary["health_status"] == "failed"
        assert report.metrics["D_partials"]["d_r"] == pytest.approx(1.0)
        assert any("D.d_r" in a["message"] for a in report.alerts)

    def test_trig_within_tolerance(self, make_cs):
        """D = 1 + 0.1 sin(πr) cos t 的解析偏导在 h = 1e-3 的中心差分下通过"""
        cs = make_cs(
            D={"family": "separable_trig", "base": 1.0, "amplitude": 0.1, "k_r": 1.0, "phase_r": 0.0,
               "omega": 1.0, "phase_t": math.pi / 2},
            T=2.0,
        )
        report = validate(cs, SpatialGrid(50), np.linspace(0.0, 2.0, 5))
        assert report.passed
        assert 0.0 < report.metrics["max_partial_discrepancy"] < 1e-5

    def test_nonpositive_diffusion(self, make_cs):
        """D 降到 0 以下时报告失败但不抛异常"""
        report = validate(make_cs(D={"family": "poly_r", "coefficients": [0.5, -1.0]}))
        assert not report.passed
        assert report.metrics["min_D"] == pytest.approx(-0.5)
        assert any("D 非正" in a["message"] for a in report.alerts)

    def test_summary_counts(self, make_cs):
        validator = CoefficientValidator(make_cs(), SpatialGrid(10), [0.0, 0.5])
        report = validator.run_all_checks()
        assert report.summary["grid_points"] == 11
        assert report.summary["time_points"] == 2
        assert report.to_dict()["alerts"] == []
