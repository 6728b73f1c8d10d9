"""
CSV / JSON 输出

CSV 列固定，浮点数写 17 位有效数字，保证回读后逐位相同。
"""
from __future__ import annotations

import json
import os
import shutil
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Sequence

import numpy as np
import pandas as pd

from src.kernel.fields import KernelField
from src.services.config import report_config
from src.shared.errors import ConfigurationError
from src.transforms.grid import SpatialGrid

KERNEL_COLUMNS = ["t", "r", "s", "p"]
STATE_COLUMNS = ["t", "r", "value", "label"]
NORM_COLUMNS = ["t", "c_tilde_norm", "W", "w_tilde_norm"]
P1_COLUMNS = ["t", "r", "p1"]
P10_COLUMNS = ["t", "p10"]


def write_csv(path: Path, rows: Iterable[Sequence[Any]], columns: List[str]) -> Path:
    df = pd.DataFrame(list(rows), columns=columns)
    df.to_csv(path, index=False, float_format=report_config.FLOAT_FORMAT)
    return path


def _json_default(obj: Any) -> Any:
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"无法序列化 {type(obj).__name__}")


def write_json(path: Path, payload: Dict[str, Any]) -> Path:
    with path.open("w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, ensure_ascii=False, default=_json_default, allow_nan=False)
        f.write("\n")
    return path


def read_kernel_csv(path: Path, mu: float) -> KernelField:
    """读回 (t, r, s, p) 行，重建 KernelField"""
    df = pd.read_csv(path)
    missing = set(KERNEL_COLUMNS) - set(df.columns)
    if missing:
        raise ConfigurationError(f"{path}: 核函数 CSV 缺少列 {sorted(missing)}")
    times = np.sort(df["t"].unique())
    r_nodes = np.sort(df["r"].unique())
    grid = SpatialGrid(r_nodes.size - 1)
    index = {float(r): i for i, r in enumerate(grid.nodes)}
    values = np.full((times.size, grid.size, grid.size), np.nan)
    t_index = {float(t): k for k, t in enumerate(times)}
    try:
        ri = df["r"].map(lambda v: index[float(v)]).to_numpy()
        si = df["s"].map(lambda v: index[float(v)]).to_numpy()
    except KeyError as exc:
        raise ConfigurationError(f"{path}: 节点不在均匀网格上: {exc}") from exc
    ki = df["t"].map(lambda v: t_index[float(v)]).to_numpy()
    values[ki, ri, si] = df["p"].to_numpy()
    return KernelField(
        grid=grid,
        times=times,
        values=values,
        mu=float(mu),
        time_invariant=times.size == 1,
        info={"method": "stored", "source": str(path)},
    )


@contextmanager
def atomic_output_dir(out: Path) -> Iterator[Path]:
    """在同级临时目录中写完，再整体改名为 out；失败时删除临时目录"""
    out = Path(out)
    if out.exists() and any(out.iterdir()):
        raise ConfigurationError(f"输出目录已存在且非空: {out}")
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{out.name}.", dir=out.parent))
    try:
        yield tmp
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    if out.exists():
        out.rmdir()
    os.replace(tmp, out)
