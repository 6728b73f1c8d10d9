"""
网格/时间步加密研究

对同一场景依次取 (n, dt)、(2n, dt/2)、(4n, dt/4)：
1. 核函数：逐次逼近与直接差分的最大差距（时不变系数时）
2. 仿真：‖c̃‖ 末值、衰减率 σ、一致性三角的最大偏差
相邻两级差值之比约为 4 说明处于二阶收敛区间。

用法: python scripts/refinement_study.py config/scenarios/baseline.json [--levels 3] [--T 0.2]
"""
import argparse
import os
import sys

sys.path.append(os.getcwd())

import numpy as np
from loguru import logger

from src.services.scenario_service import scenario_service
from src.shared.errors import PdeObserverError, exit_code_for
from src.shared.log import configure_logging
from src.shared.scenario import ScenarioConfig, load_scenario


def refine(config: ScenarioConfig, level: int, horizon: float) -> ScenarioConfig:
    factor = 2**level
    time = config.time.model_copy(update={"dt": config.time.dt / factor, "T": horizon})
    grid = config.grid.model_copy(update={"n": config.grid.n * factor})
    output = config.output.model_copy(update={"write_states": False, "state_every": 10 * factor})
    return config.model_copy(update={"time": time, "grid": grid, "output": output})


def ratio(a: float, b: float) -> str:
    return f"{a / b:6.2f}" if b > 0.0 else "   n/a"


def main():
    parser = argparse.ArgumentParser(description="网格与时间步加密下的收敛性检查")
    parser.add_argument("config", help="场景文件")
    parser.add_argument("--levels", type=int, default=3, help="加密级数（每级 h、dt 减半）")
    parser.add_argument("--T", type=float, default=None, help="覆盖时域长度（默认取场景 T）")
    args = parser.parse_args()

    configure_logging("WARNING")
    base = load_scenario(args.config)
    horizon = args.T or base.time.T
    oracle = base.to_coefficients().is_time_invariant

    print("=" * 80)
    print(f"[加密研究] {base.name}: n={base.grid.n}, dt={base.time.dt:g}, T={horizon:g}, {args.levels} 级")
    print("=" * 80)

    finals, kernel_gaps = [], []
    for level in range(args.levels):
        config = refine(base, level, horizon)
        try:
            result = scenario_service.run(config, oracle=oracle)
        except PdeObserverError as exc:
            print(f"[失败] 第 {level} 级: {exc}")
            sys.exit(exit_code_for(exc))
        ks = result.kernel_stage
        finals.append(float(result.c_tilde_norm[-1]))
        gap = ks.oracle["max_abs_diff"] if ks.oracle else float("nan")
        kernel_gaps.append(gap)
        sigma = result.fit.sigma
        print(
            f"  n={config.grid.n:5d}  dt={config.time.dt:9.2e}  "
            f"‖c̃(T)‖={finals[-1]:.6e}  σ={sigma if sigma is not None else float('nan'):8.4f}  "
            f"核差距={gap:.3e}  三角偏差={result.consistency.get('plant_minus_observer_vs_target', 0.0):.3e}"
        )
        logger.info(f"第 {level} 级完成，耗时 {sum(result.timings.values()):.2f}s")

    if len(finals) >= 3:
        print("\n[收敛比] 相邻级 ‖c̃(T)‖ 差值之比（二阶约为 4）")
        diffs = np.abs(np.diff(finals))
        for k in range(diffs.size - 1):
            print(f"  级 {k}-{k + 1} / 级 {k + 1}-{k + 2}: {ratio(diffs[k], diffs[k + 1])}")
    if oracle and len(kernel_gaps) >= 2:
        print("\n[收敛比] 核函数两种方法的差距")
        for k in range(len(kernel_gaps) - 1):
            print(f"  级 {k} / 级 {k + 1}: {ratio(kernel_gaps[k], kernel_gaps[k + 1])}")


if __name__ == "__main__":
    main()
