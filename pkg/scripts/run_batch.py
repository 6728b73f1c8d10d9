"""
批量运行场景

每个场景在独立进程中运行，输出写到 <out>/<场景名>/，互不共享状态。

用法: python scripts/run_batch.py --out runs/ [--command simulate] [--workers 4] config/scenarios/*.json
"""
import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor, as_completed
from pathlib import Path

sys.path.append(os.getcwd())

from loguru import logger

from src.cli.main import main as cli_main
from src.shared.log import configure_logging


def run_one(command: str, config: str, out_root: str, extra: list) -> tuple:
    out = Path(out_root) / Path(config).stem
    code = cli_main([command, "--config", config, "--out", str(out), *extra])
    return config, code


def main():
    parser = argparse.ArgumentParser(description="并发运行多个场景")
    parser.add_argument("configs", nargs="+", help="场景文件")
    parser.add_argument("--out", required=True, help="输出根目录")
    parser.add_argument("--command", default="simulate", choices=["validate", "solve-kernel", "simulate"])
    parser.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    args, extra = parser.parse_known_args()

    configure_logging("INFO")
    print("=" * 80)
    print(f"[任务] {args.command}: {len(args.configs)} 个场景，{args.workers} 个进程")
    print("=" * 80)

    results = {}
    with ProcessPoolExecutor(max_workers=args.workers) as pool:
        futures = [pool.submit(run_one, args.command, c, args.out, extra) for c in args.configs]
        for future in as_completed(futures):
            config, code = future.result()
            results[config] = code
            status = "完成" if code == 0 else f"失败（退出码 {code}）"
            logger.info(f"{config}: {status}")

    failed = {c: code for c, code in results.items() if code != 0}
    print(f"\n[完成] 成功 {len(results) - len(failed)} / {len(results)}")
    for config, code in sorted(failed.items()):
        print(f"  [失败] {config} → {code}")
    sys.exit(max(failed.values()) if failed else 0)


if __name__ == "__main__":
    main()
