"""
核方程残差测试
"""
import numpy as np
import pytest

from src.kernel.fields import KernelField
from src.kernel.residual import kernel_residual
from src.shared.errors import ConfigurationError
from src.transforms.grid import SpatialGrid

pytestmark = pytest.mark.unit


def _field(grid: SpatialGrid, values: np.ndarray, times=None, mu: float = -1.0) -> KernelField:
    times = np.zeros(1) if times is None else np.asarray(times)
    return KernelField(grid=grid, times=times, values=values, mu=mu, time_invariant=times.size == 1)


class TestKernelResidual:
    """测试内部残差、对角与边界检查"""

    def test_zero_kernel_zero_residual(self, make_cs):
        """p ≡ 0 且 μ − λ ≡ 0：所有残差严格为 0"""
        grid = SpatialGrid(20)
        report = kernel_residual(_field(grid, np.zeros((21, 21))), make_cs(phi=-1.0), -1.0)
        assert report.interior_max == 0.0
        assert report.interior_l2 == 0.0
        assert report.diagonal == 0.0
        assert report.edge == 0.0

    def test_closed_form_small(self, make_cs, exact_kernel):
        grid = SpatialGrid(20)
        report = kernel_residual(_field(grid, exact_kernel(1.0, grid)), make_cs(), -1.0)
        assert report.interior_max < 1e-2
        assert report.diagonal < 1e-9
        assert report.edge == 0.0

    def test_fault_injection_located(self, make_cs, exact_kernel):
        """在内部节点 (5, 12) 加 0.1：相邻节点残差约 0.1/h²"""
        grid = SpatialGrid(20)
        values = exact_kernel(1.0, grid)
        values[5, 12] += 0.1
        report = kernel_residual(_field(grid, values), make_cs(), -1.0)
        h = grid.h
        assert report.interior_max >= 0.05 / h**2
        r, s, _ = report.argmax
        assert abs(r - grid.nodes[5]) + abs(s - grid.nodes[12]) == pytest.approx(h)

    def test_time_varying_needs_three_samples(self, make_cs, time_varying_D):
        grid = SpatialGrid(10)
        values = np.zeros((2, 11, 11))
        with pytest.raises(ConfigurationError):
            kernel_residual(_field(grid, values, times=[0.0, 0.5]), make_cs(D=time_varying_D), -1.0)

    def test_report_dict(self, make_cs):
        grid = SpatialGrid(10)
        report = kernel_residual(_field(grid, np.zeros((11, 11))), make_cs(phi=-1.0), -1.0)
        d = report.to_dict()
        assert d["n_cells"] == 10
        assert d["time_samples"] == 1
        assert len(d["argmax"]) == 3
