"""
命令行入口

    pdeobs validate      --config PATH --out DIR
    pdeobs solve-kernel  --config PATH --out DIR [--grid-n N] [--tol TOL] [--max-iter K] [--oracle]
    pdeobs simulate      --config PATH --out DIR [--grid-n N] [--tol TOL] [--max-iter K] [--seed S] [--oracle]
    pdeobs verify        --config PATH --kernel CSV --out DIR

退出码：0 成功，2 配置错误，3 数值/收敛错误。
"""
from __future__ import annotations

import argparse
import sys
import time as _time
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import numpy as np
from loguru import logger

from src.cli.report_loader import ReportLoader
from src.cli.writers import (
    KERNEL_COLUMNS,
    NORM_COLUMNS,
    P1_COLUMNS,
    P10_COLUMNS,
    STATE_COLUMNS,
    atomic_output_dir,
    read_kernel_csv,
    write_csv,
    write_json,
)
from src.kernel.residual import kernel_residual
from src.problem.coefficients import mu_bound_details
from src.problem.validation import validate
from src.services.gains_service import ObserverGains, compute_gains
from src.services.scenario_service import KernelStage, scenario_service
from src.shared.config import get_settings
from src.shared.errors import ConfigurationError, exit_code_for
from src.shared.log import configure_logging
from src.shared.scenario import ScenarioConfig, load_scenario
from src.transforms.grid import SpatialGrid

CSV_HELP = """\
输出文件（浮点数 17 位有效数字）:
  kernel.csv   t,r,s,p                      （--oracle 时追加 p_direct,diff）
  p1.csv       t,r,p1
  p10.csv      t,p10
  states.csv   t,r,value,label              （label ∈ u,c,c_hat,c_tilde,w_tilde,u_hat）
  norms.csv    t,c_tilde_norm,W,w_tilde_norm
  summary.json / report.json / verify.json  运行摘要
  manifest.json                             最后写入，存在即表示运行完成
环境变量: PDEOBS_LOG 日志级别，PDEOBS_CONFIG_DIR 求解器默认配置目录
"""


@dataclass
class RunManifest:
    command: str
    config_path: str
    output_dir: str
    tool_version: str
    timings: Dict[str, float] = field(default_factory=dict)
    exit_code: int = 0
    finished_at: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


# ==================== 公共 ====================

def _apply_overrides(config: ScenarioConfig, args: argparse.Namespace) -> ScenarioConfig:
    if getattr(args, "grid_n", None) is not None:
        config = config.model_copy(update={"grid": config.grid.model_copy(update={"n": args.grid_n})})
    if getattr(args, "seed", None) is not None:
        config = config.model_copy(update={"seed": args.seed})
    return config


def _gains_files(out: Path, gains: ObserverGains) -> None:
    write_csv(out / "p1.csv", gains.p1_rows(), P1_COLUMNS)
    write_csv(out / "p10.csv", gains.p10_rows(), P10_COLUMNS)


def _kernel_rows(ks: KernelStage) -> tuple[List[tuple], List[str]]:
    rows = ks.kernel.to_rows()
    if ks.direct is None:
        return rows, KERNEL_COLUMNS
    direct = {(r, s): p for _, r, s, p in ks.direct.to_rows()}
    merged = [(t, r, s, p, direct[(r, s)], p - direct[(r, s)]) for t, r, s, p in rows]
    return merged, KERNEL_COLUMNS + ["p_direct", "diff"]


# ==================== 命令 ====================

def cmd_validate(config: ScenarioConfig, out: Path, args: argparse.Namespace, timings: Dict[str, float]) -> int:
    cs = config.to_coefficients()
    vcfg = get_settings().solver.validation
    grid = SpatialGrid(config.grid.n)
    t_samples = np.linspace(0.0, config.time.T, vcfg.time_points)
    start = _time.perf_counter()
    report = validate(cs, grid, t_samples)
    bound = mu_bound_details(cs, grid, t_samples) if report.metrics.get("min_D", 0.0) > 0.0 else None
    timings["validate"] = _time.perf_counter() - start

    payload = report.to_dict()
    payload["passed"] = report.passed
    payload["mu_bound"] = asdict(bound) if bound is not None else None
    write_json(out / "report.json", payload)
    text = ReportLoader.render("validate_report.j2", report=report, mu_bound=bound)
    (out / "report.txt").write_text(text, encoding="utf-8")
    print(text)
    return 0 if report.passed else ConfigurationError.exit_code


def cmd_solve_kernel(config: ScenarioConfig, out: Path, args: argparse.Namespace, timings: Dict[str, float]) -> int:
    ks = scenario_service.build_kernel(config, timings, tol=args.tol, max_iter=args.max_iter, oracle=args.oracle or None)
    gains = compute_gains(ks.kernel, ks.cs)
    rows, columns = _kernel_rows(ks)
    write_csv(out / "kernel.csv", rows, columns)
    _gains_files(out, gains)
    write_json(
        out / "kernel_summary.json",
        {
            "mu": ks.mu,
            "coefficients": ks.cs.describe(),
            "mu_bound": ks.bound.bound,
            "n_cells": ks.grid.n_cells,
            "time_invariant": ks.kernel.time_invariant,
            "info": ks.kernel.info,
            "residual": ks.residual.to_dict(),
            "oracle": ks.oracle,
        },
    )
    return 0


def cmd_simulate(config: ScenarioConfig, out: Path, args: argparse.Namespace, timings: Dict[str, float]) -> int:
    result = scenario_service.run(config, seed=args.seed, tol=args.tol, max_iter=args.max_iter, oracle=args.oracle or None)
    timings.update(result.timings)
    write_csv(
        out / "norms.csv",
        zip(result.times, result.c_tilde_norm, result.W, result.w_tilde_norm),
        NORM_COLUMNS,
    )
    if config.output.write_states:
        rows = []
        for t, fields in result.snapshots:
            for label, state in fields.items():
                rows.extend((t, r, v, label) for r, v in zip(state.grid.nodes, state.values))
        write_csv(out / "states.csv", rows, STATE_COLUMNS)
    _gains_files(out, result.gains)
    summary = result.summary(config)
    write_json(out / "summary.json", summary)
    print(ReportLoader.render("run_summary.j2", name=config.name, summary=summary))
    return 0


def cmd_verify(config: ScenarioConfig, out: Path, args: argparse.Namespace, timings: Dict[str, float]) -> int:
    if not args.kernel:
        raise ConfigurationError("verify 需要 --kernel 指定已保存的 kernel.csv")
    start = _time.perf_counter()
    cs = config.to_coefficients()
    saved = read_kernel_csv(Path(args.kernel), mu=0.0)
    mu, bound = scenario_service.resolve_mu(config, cs, saved.grid)
    kernel = read_kernel_csv(Path(args.kernel), mu=mu)
    report = kernel_residual(kernel, cs, mu)
    gains = compute_gains(kernel, cs)
    timings["verify"] = _time.perf_counter() - start
    _gains_files(out, gains)
    write_json(out / "verify.json", {"mu": mu, "mu_bound": bound.bound, "residual": report.to_dict()})
    return 0


COMMANDS: Dict[str, Callable[..., int]] = {
    "validate": cmd_validate,
    "solve-kernel": cmd_solve_kernel,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
}


# ==================== 入口 ====================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pdeobs",
        description="变系数反应-对流-扩散方程的边界观测器：核函数求解与联合仿真",
        epilog=CSV_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--log", default=None, help="日志级别（默认取 PDEOBS_LOG）")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, epilog=CSV_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
        p.add_argument("--config", required=True, help="场景文件（JSON 或 YAML）")
        p.add_argument("--out", required=True, help="输出目录（原子创建）")
        p.add_argument("--grid-n", type=int, default=None, help="覆盖 grid.n")
        p.add_argument("--tol", type=float, default=None, help="逐次逼近截断容差")
        p.add_argument("--max-iter", type=int, default=None, help="逐次逼近最大项数")
        p.add_argument("--seed", type=int, default=None, help="随机初值种子")
        p.add_argument("--oracle", action="store_true", help="附加直接差分解法的对照")
        if name == "verify":
            p.add_argument("--kernel", required=True, help="已保存的 kernel.csv")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log or get_settings().log)
    out = Path(args.out)
    timings: Dict[str, float] = {}
    try:
        config = _apply_overrides(load_scenario(args.config), args)
        with atomic_output_dir(out) as tmp:
            code = COMMANDS[args.command](config, tmp, args, timings)
            manifest = RunManifest(
                command=args.command,
                config_path=str(args.config),
                output_dir=str(out),
                tool_version=get_settings().app_version,
                timings=timings,
                exit_code=code,
                finished_at=datetime.now(timezone.utc).isoformat(),
            )
            write_json(tmp / "manifest.json", manifest.to_dict())
        return code
    except Exception as exc:  # noqa: BLE001
        code = exit_code_for(exc)
        logger.error(f"{args.command} 失败（退出码 {code}）: {exc}")
        return code


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
