"""全局配置加载与强类型定义。
该模块负责读取 config/ 目录下的 YAML 文件，并映射为 Pydantic 模型。
"""
from __future__ import annotations

import functools
import os
import pathlib
from typing import Any, Dict

import yaml
from pydantic import BaseModel, Field
from pydantic_settings import BaseSettings, SettingsConfigDict

# 定位到项目根目录
BASE_DIR = pathlib.Path(__file__).resolve().parents[2]
CONFIG_DIR = pathlib.Path(os.environ.get("PDEOBS_CONFIG_DIR", BASE_DIR / "config"))


def _load_yaml(filename: str) -> Dict[str, Any]:
    """辅助函数：安全加载 YAML 文件"""
    path = CONFIG_DIR / filename
    if not path.exists():
        return {}
    with path.open("r", encoding="utf-8") as f:
        return yaml.safe_load(f) or {}


# --- 1. 求积 ---
class QuadratureConfig(BaseModel):
    step: float = 1.0e-3
    richardson_tol: float = 1.0e-8


# --- 2. 坐标映射 ---
class CoordinateMapConfig(BaseModel):
    inverse_tol: float = 1.0e-12


class VolterraConfig(BaseModel):
    singular_tol: float = 1.0e-12


# --- 3. 核函数求解 ---
class KernelConfig(BaseModel):
    tol: float = 1.0e-10
    max_iter: int = 50
    time_samples: int = 21


# --- 4. 系数校验 ---
class ValidationConfig(BaseModel):
    fd_step: float = 1.0e-3
    partial_tol: float = 1.0e-4
    grid_points: int = 101
    time_points: int = 11


# --- 5. 衰减拟合 ---
class FitConfig(BaseModel):
    transient_fraction: float = 0.1
    min_samples: int = 10


class SolverConfig(BaseModel):
    quadrature: QuadratureConfig = Field(default_factory=QuadratureConfig)
    coordinate_map: CoordinateMapConfig = Field(default_factory=CoordinateMapConfig)
    volterra: VolterraConfig = Field(default_factory=VolterraConfig)
    kernel: KernelConfig = Field(default_factory=KernelConfig)
    validation: ValidationConfig = Field(default_factory=ValidationConfig)
    fit: FitConfig = Field(default_factory=FitConfig)


# --- 全局 Settings 聚合 ---
class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_prefix="PDEOBS_", env_file=".env", env_nested_delimiter="__", extra="ignore"
    )

    app_name: str = "pde-observer"
    app_version: str = "0.1.0"
    # PDEOBS_LOG
    log: str = "INFO"

    solver: SolverConfig = Field(default_factory=lambda: SolverConfig(**_load_yaml("solver.yaml")))


@functools.lru_cache(maxsize=1)
def get_settings() -> Settings:
    """获取全局单例配置。"""
    return Settings()
