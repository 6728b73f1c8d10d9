"""
Crank–Nicolson 推进器测试

测试覆盖：
1. 零态保持、线性
2. 目标系统：W 单调不增、衰减率
3. 时间与空间加密下的收敛
4. 观测器注入与误差系统
5. 函数式入口与目标系统经 Volterra 变换后的一致性
"""
import numpy as np
import pytest

from src.kernel.successive import solve_kernel
from src.services.gains_service import compute_gains
from src.shared.errors import ShapeMismatchError
from src.simulation.diagnostics import check_lemma_decay, fit_decay, lyapunov_W
from src.simulation.steppers import (
    PdeStepper,
    crank_nicolson_step,
    step_error,
    step_observer,
    step_plant,
    step_target,
    step_transformed,
)
from src.transforms.grid import SpatialGrid, StateField
from src.transforms.volterra import volterra_apply

pytestmark = pytest.mark.unit


def _state(grid: SpatialGrid, values, label: str, t: float = 0.0) -> StateField:
    return StateField(grid, np.asarray(values, dtype=float), t, label)


class TestCrankNicolson:
    """测试通用 CN 步"""

    def test_zero_stays_zero(self, make_cs):
        grid = SpatialGrid(20)
        u = _state(grid, np.zeros(grid.size), "u")
        cs = make_cs(phi=2.0)
        for _ in range(5):
            u = step_plant(u, cs, 1e-3)
        np.testing.assert_array_equal(u.values, 0.0)
        assert u.time == pytest.approx(5e-3)

    def test_linearity(self, make_cs):
        grid = SpatialGrid(30)
        cs = make_cs(b={"family": "poly_r", "coefficients": [0.0, 0.5]}, phi=1.0)
        rng = np.random.default_rng(5)
        a = rng.standard_normal(grid.size)
        a[0] = 0.0
        b = np.sin(np.pi * grid.nodes / 2)
        lhs = step_plant(_state(grid, 2.5 * a + b, "u"), cs, 1e-3).values
        rhs = 2.5 * step_plant(_state(grid, a, "u"), cs, 1e-3).values + step_plant(_state(grid, b, "u"), cs, 1e-3).values
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    def test_robin_row(self):
        """r = 1 处三点单侧差分满足 v_r(1) = α·v(1) + g"""
        n, h = 20, 0.05
        r = np.linspace(0.0, 1.0, n + 1)
        out = crank_nicolson_step(np.sin(r), h, 1e-3, np.ones(n + 1), np.zeros(n + 1), np.zeros(n + 1), alpha=0.7, g=0.2)
        slope = (3.0 * out[-1] - 4.0 * out[-2] + out[-3]) / (2.0 * h)
        assert slope == pytest.approx(0.7 * out[-1] + 0.2, abs=1e-10)
        assert out[0] == 0.0

    def test_label_checked(self, make_cs):
        grid = SpatialGrid(10)
        with pytest.raises(ShapeMismatchError):
            PdeStepper(make_cs(), grid).plant(_state(grid, np.zeros(11), "c"), 1e-3)


class TestTargetSystem:
    """测试目标系统与衰减"""

    def test_lemma_decay(self, make_cs):
        """D≡1, μ=−1：W 每步不增，‖w̃‖ 衰减率 ≤ −0.9"""
        grid = SpatialGrid(50)
        cs = make_cs(T=2.0)
        stepper = PdeStepper(cs, grid)
        # sin(κr)，tan κ = −2κ：满足 w̃_r(1) = −½w̃(1) 的最低模态
        w = _state(grid, np.sin(1.8366 * grid.nodes), "w_tilde")
        dt = 2e-3
        times, norms, W = [0.0], [w.l2_norm()], [lyapunov_W(w)]
        for _ in range(1000):
            w = stepper.target(w, -1.0, dt)
            times.append(w.time)
            norms.append(w.l2_norm())
            W.append(lyapunov_W(w))
        assert check_lemma_decay(W).non_increasing
        fit = fit_decay(times, norms)
        assert fit.sigma <= -0.9
        assert fit.residual < 0.05

    def test_zero_target(self, make_cs):
        grid = SpatialGrid(10)
        w = step_target(_state(grid, np.zeros(11), "w_tilde"), make_cs(), -1.0, 1e-3)
        np.testing.assert_array_equal(w.values, 0.0)

    def test_time_refinement(self, make_cs):
        """Δt 减半，与参考解的差距约缩小 4 倍（CN 二阶）"""
        grid = SpatialGrid(40)
        cs = make_cs(phi=0.5)
        # u = r 满足 u(0) = 0 与 u_r(1) = u(1)，初值与边界相容
        u0 = grid.nodes.copy()

        def run(dt: float) -> np.ndarray:
            u = _state(grid, u0, "u")
            for _ in range(int(round(0.2 / dt))):
                u = step_plant(u, cs, dt)
            return u.values

        ref = run(0.2 / 1600)
        e1 = np.max(np.abs(run(0.2 / 20) - ref))
        e2 = np.max(np.abs(run(0.2 / 40) - ref))
        assert e1 / e2 > 3.0


class TestObserverAndError:
    """测试观测器注入与误差系统"""

    def test_zero_error_preserved(self, make_cs):
        grid = SpatialGrid(20)
        cs = make_cs(phi=2.0)
        gains = compute_gains(solve_kernel(cs, -1.0, grid, [0.0]), cs)
        stepper = PdeStepper(cs, grid)
        c0 = np.sin(np.pi * grid.nodes / 2)
        c = _state(grid, c0, "c")
        c_hat = _state(grid, c0, "c_hat")
        for _ in range(50):
            y = float(c.values[-1])
            c_hat = stepper.observer(c_hat, gains, y, 1e-3)
            c = stepper.transformed(c, 1e-3)
        np.testing.assert_array_equal(c_hat.values, c.values)

    @pytest.mark.parametrize(
        "b,phi,mu,U",
        [
            (0.0, 2.0, -1.0, None),
            ({"family": "poly_r", "coefficients": [0.0, 0.5]}, 2.0, -3.0, {"family": "sine", "amplitude": 1.0, "omega": 1.0}),
        ],
        ids=["no_advection", "linear_advection_sine_input"],
    )
    def test_error_system_matches_difference(self, make_cs, b, phi, mu, U):
        """注入项同为显式时，c̃ 与 c − ĉ 逐步一致（仅舍入误差）"""
        grid = SpatialGrid(20)
        cs = make_cs(b=b, phi=phi, U=U)
        gains = compute_gains(solve_kernel(cs, mu, grid, [0.0]), cs)
        stepper = PdeStepper(cs, grid)
        r = grid.nodes
        c = _state(grid, 4.0 * r * (1.0 - r) ** 2, "c")
        c_hat = _state(grid, 0.3 * np.sin(np.pi * r), "c_hat")
        err = _state(grid, c.values - c_hat.values, "c_tilde")
        dt = 1e-3
        worst = 0.0
        for _ in range(200):
            y = float(c.values[-1])
            c_hat = stepper.observer(c_hat, gains, y, dt)
            c = stepper.transformed(c, dt)
            err = step_error(err, cs, gains, dt)
            worst = max(worst, float(np.max(np.abs((c.values - c_hat.values) - err.values))))
        assert err.time == pytest.approx(0.2)
        assert worst < 1e-10


class TestFunctionalSteppers:
    """测试函数式入口"""

    def test_transformed_matches_plant_without_advection(self, make_cs):
        """b≡0 时 H = 1、M = U、λ = φ：c 与 u 的推进完全相同"""
        grid = SpatialGrid(30)
        cs = make_cs(D={"family": "poly_r", "coefficients": [1.0, 0.5]}, phi=1.5, U={"family": "sine", "amplitude": 1.0, "omega": 1.0})
        u = _state(grid, np.sin(np.pi * grid.nodes / 2), "u")
        c = _state(grid, u.values, "c")
        for _ in range(20):
            u = step_plant(u, cs, 1e-3)
            c = step_transformed(c, cs, 1e-3)
        assert c.label == "c"
        assert c.time == pytest.approx(0.02)
        np.testing.assert_allclose(c.values, u.values, rtol=1e-12, atol=1e-14)

    def test_transformed_label_checked(self, make_cs):
        grid = SpatialGrid(10)
        with pytest.raises(ShapeMismatchError):
            step_transformed(_state(grid, np.zeros(grid.size), "u"), make_cs(), 1e-3)

    def test_observer_without_mismatch(self, make_cs):
        """y = ĉ(1) 时观测器就是 c 的推进"""
        grid = SpatialGrid(20)
        cs = make_cs(phi=2.0, U={"family": "constant", "value": 0.5})
        gains = compute_gains(solve_kernel(cs, -1.0, grid, [0.0]), cs)
        values = np.sin(np.pi * grid.nodes / 2)
        c_hat = step_observer(_state(grid, values, "c_hat"), cs, gains, float(values[-1]), 1e-3)
        c = step_transformed(_state(grid, values, "c"), cs, 1e-3)
        assert c_hat.label == "c_hat"
        np.testing.assert_array_equal(c_hat.values, c.values)

    def test_observer_injection_is_linear(self, make_cs):
        """U ≡ 0：观测器一步 = 自由推进 + 对 y − ĉ(1) 的注入响应"""
        grid = SpatialGrid(20)
        cs = make_cs(b={"family": "poly_r", "coefficients": [0.0, 1.0]}, phi=2.0)
        gains = compute_gains(solve_kernel(cs, -1.0, grid, [0.0]), cs)
        values = 0.5 * np.sin(np.pi * grid.nodes)
        values[-1] = 0.2
        y, dt = 1.0, 1e-3
        full = step_observer(_state(grid, values, "c_hat"), cs, gains, y, dt)
        free = step_transformed(_state(grid, values, "c"), cs, dt)
        response = step_observer(_state(grid, np.zeros(grid.size), "c_hat"), cs, gains, y - 0.2, dt)
        np.testing.assert_allclose(full.values, free.values + response.values, atol=1e-13)
        assert np.max(np.abs(response.values)) > 0.0


@pytest.mark.integration
class TestTargetThroughVolterra:
    """目标系统经 Volterra 变换后与误差系统一致"""

    def test_target_mapped_matches_error(self, make_cs):
        """w̃ 按目标系统推进再映射，与 c̃ 按误差系统推进相差 O(Δt + h²)"""
        grid = SpatialGrid(40)
        cs = make_cs(phi=2.0)
        mu, dt = -1.0, 5e-4
        p = solve_kernel(cs, mu, grid, [0.0])
        gains = compute_gains(p, cs)
        # w̃(1) = w̃_r(1) = 0，映射后的 c̃ 也满足误差系统的边界条件
        w = _state(grid, 4.0 * grid.nodes * (1.0 - grid.nodes) ** 2, "w_tilde")
        err = volterra_apply(p, w)
        worst = 0.0
        for _ in range(1000):
            w = step_target(w, cs, mu, dt)
            err = step_error(err, cs, gains, dt)
            mapped = volterra_apply(p, w)
            worst = max(worst, float(np.max(np.abs(mapped.values - err.values))))
        assert w.time == pytest.approx(0.5)
        assert mapped.label == "c_tilde"
        assert worst < 5.0 * (dt + grid.h**2)
