"""
仿真场景配置（JSON 为主，按扩展名也接受 YAML）

顶层分节：coefficients / target / grid / time / initial_conditions / output，另有可选的 kernel 分节。
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.problem.coefficients import CoefficientSet
from src.problem.families import build_field, build_input
from src.shared.errors import ConfigurationError


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class CoefficientsSection(_Section):
    D: Dict[str, Any]
    b: Dict[str, Any] = Field(default_factory=lambda: {"family": "constant", "value": 0.0})
    phi_rxn: Dict[str, Any] = Field(default_factory=lambda: {"family": "constant", "value": 0.0})
    U: Dict[str, Any] = Field(default_factory=lambda: {"family": "zero"})


class TargetSection(_Section):
    """mu 直接给定，或者 mu_offset 相对 μ 上界给出（μ = bound + mu_offset）"""
    mu: Optional[float] = None
    mu_offset: Optional[float] = None

    @model_validator(mode="after")
    def _exactly_one(self):
        if (self.mu is None) == (self.mu_offset is None):
            raise ValueError("target 需要且只需要 mu 或 mu_offset 之一")
        return self


class GridSection(_Section):
    n: int = Field(100, ge=4)


class TimeSection(_Section):
    dt: float = Field(..., gt=0.0)
    T: float = Field(..., gt=0.0)

    @model_validator(mode="after")
    def _dt_fits(self):
        if self.dt > self.T:
            raise ValueError(f"dt={self.dt} 大于时域 T={self.T}")
        return self

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))


class InitialCondition(_Section):
    """
    r = 0 处取 0 的解析初值族
    - zero
    - polynomial: Σ a_k r^k，要求 a_0 = 0
    - sine:       amplitude·sin(k·π·r)
    - random:     Σ_{m=1}^{modes} a_m sin(m·π·r/2)，a_m ~ amplitude·N(0,1)/m，按 seed 固定
    """
    family: Literal["zero", "polynomial", "sine", "random"] = "zero"
    coefficients: List[float] = Field(default_factory=list)
    amplitude: float = 1.0
    k: float = 0.5
    modes: int = Field(8, ge=1)
    seed: Optional[int] = None

    @field_validator("coefficients")
    @classmethod
    def _vanish_at_origin(cls, v: List[float]) -> List[float]:
        if v and v[0] != 0.0:
            raise ValueError(f"初值在 r=0 处必须为 0，常数项为 {v[0]}")
        return v

    def evaluate(self, nodes: np.ndarray, seed: Optional[int] = None) -> np.ndarray:
        r = np.asarray(nodes, dtype=float)
        if self.family == "zero":
            return np.zeros_like(r)
        if self.family == "polynomial":
            return np.polynomial.polynomial.polyval(r, self.coefficients or [0.0])
        if self.family == "sine":
            return self.amplitude * np.sin(self.k * np.pi * r)
        rng = np.random.default_rng(self.seed if seed is None else seed)
        m = np.arange(1, self.modes + 1)
        amps = self.amplitude * rng.standard_normal(self.modes) / m
        return np.sin(np.outer(r, m) * np.pi / 2.0) @ amps


class InitialConditionsSection(_Section):
    plant: InitialCondition = Field(default_factory=InitialCondition)
    observer: InitialCondition = Field(default_factory=InitialCondition)


class KernelSection(_Section):
    tol: Optional[float] = Field(None, gt=0.0)
    max_iter: Optional[int] = Field(None, ge=1)
    time_samples: Optional[int] = Field(None, ge=1)
    oracle: bool = False


class OutputSection(_Section):
    state_every: int = Field(100, ge=1)
    write_states: bool = True
    consistency: bool = True


class ScenarioConfig(_Section):
    name: str = "scenario"
    coefficients: CoefficientsSection
    target: TargetSection
    grid: GridSection = Field(default_factory=GridSection)
    time: TimeSection
    initial_conditions: InitialConditionsSection = Field(default_factory=InitialConditionsSection)
    kernel: KernelSection = Field(default_factory=KernelSection)
    output: OutputSection = Field(default_factory=OutputSection)
    seed: int = 0

    def to_coefficients(self) -> CoefficientSet:
        c = self.coefficients
        return CoefficientSet(
            D=build_field(c.D),
            b=build_field(c.b),
            phi_rxn=build_field(c.phi_rxn),
            U=build_input(c.U),
            horizon_T=float(self.time.T),
        )


def load_scenario(path: str | Path) -> ScenarioConfig:
    """读取并校验场景文件；JSON 语法错误带行列号，字段错误由 pydantic 报告"""
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"场景文件不存在: {path}")
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() in (".yaml", ".yml"):
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigurationError(f"{path}: YAML 解析失败: {exc}") from exc
    else:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}:{exc.lineno}:{exc.colno}: JSON 解析失败: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path}: 顶层必须是对象")
    return ScenarioConfig.model_validate(data)
