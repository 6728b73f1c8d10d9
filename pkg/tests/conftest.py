"""
Pytest 配置文件

提供测试固件和通用配置：
1. 系数集合工厂（解析族字典或常数）
2. 常用网格
3. 常系数核函数的解析解（Bessel 函数），作为数值解的对照
4. 场景文件写入
"""
import json
import os
from pathlib import Path
from typing import Any, Callable, Dict, Union

import numpy as np
import pytest
from scipy.special import i1

from src.problem.coefficients import CoefficientSet
from src.problem.families import build_field, build_input
from src.transforms.grid import SpatialGrid

# 设置测试环境
os.environ.setdefault("PDEOBS_LOG", "WARNING")

FieldSpec = Union[float, Dict[str, Any]]


def _as_spec(value: FieldSpec) -> Dict[str, Any]:
    if isinstance(value, dict):
        return value
    return {"family": "constant", "value": float(value)}


# ============ 系数 ============

@pytest.fixture
def make_cs() -> Callable[..., CoefficientSet]:
    """
    系数集合工厂

    make_cs(D=1.0, b={"family": "poly_r", "coefficients": [0, 1]}, phi=2.0, U=..., T=1.0)
    """

    def _make(D: FieldSpec = 1.0, b: FieldSpec = 0.0, phi: FieldSpec = 0.0, U: Dict[str, Any] = None, T: float = 1.0):
        return CoefficientSet(
            D=build_field(_as_spec(D)),
            b=build_field(_as_spec(b)),
            phi_rxn=build_field(_as_spec(phi)),
            U=build_input(U or {"family": "zero"}),
            horizon_T=T,
        )

    return _make


@pytest.fixture
def unit_cs(make_cs) -> CoefficientSet:
    """D≡1, b≡0, φ≡0"""
    return make_cs()


@pytest.fixture
def time_varying_D() -> Dict[str, Any]:
    """D(r,t) = 1 + 0.2·sin(t)"""
    return {
        "family": "separable_trig",
        "base": 1.0,
        "amplitude": 0.2,
        "k_r": 0.0,
        "phase_r": np.pi / 2,
        "omega": 1.0,
        "phase_t": 0.0,
    }


# ============ 网格 ============

@pytest.fixture
def grid20() -> SpatialGrid:
    return SpatialGrid(20)


@pytest.fixture
def grid40() -> SpatialGrid:
    return SpatialGrid(40)


# ============ 解析核函数 ============

@pytest.fixture
def exact_kernel() -> Callable[[float, SpatialGrid], np.ndarray]:
    """
    D≡1、λ、μ 为常数时 p(r,s) = −a·r·I1(z)/z，z = √(a(s²−r²))，a = λ − μ > 0

    返回 (n+1)×(n+1) 数组，下三角为 NaN。
    """

    def _kernel(a: float, grid: SpatialGrid) -> np.ndarray:
        R, S = np.meshgrid(grid.nodes, grid.nodes, indexing="ij")
        z = np.sqrt(np.clip(a * (S**2 - R**2), 0.0, None))
        safe = np.where(z > 0.0, z, 1.0)
        ratio = np.where(z > 0.0, i1(safe) / safe, 0.5)
        return np.where(S >= R, -a * R * ratio, np.nan)

    return _kernel


# ============ 场景文件 ============

@pytest.fixture
def write_scenario(tmp_path) -> Callable[[Dict[str, Any], str], Path]:
    """把场景字典写成 JSON 文件，返回路径"""

    def _write(doc: Dict[str, Any], name: str = "scenario.json") -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(doc, indent=2), encoding="utf-8")
        return path

    return _write


@pytest.fixture
def small_scenario() -> Dict[str, Any]:
    """D≡1、φ≡0、μ=−1 的小规模场景（n=20，T=0.05）"""
    return {
        "name": "small",
        "coefficients": {"D": {"family": "constant", "value": 1.0}},
        "target": {"mu": -1.0},
        "grid": {"n": 20},
        "time": {"dt": 1e-3, "T": 0.05},
        "initial_conditions": {
            "plant": {"family": "sine", "amplitude": 1.0, "k": 0.5},
            "observer": {"family": "zero"},
        },
        "output": {"state_every": 10},
    }
