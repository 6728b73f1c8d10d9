"""
系数解析族

系数 D、b、φ_rxn 只能取自有限的解析族，每个族都给出精确的偏导数：
- constant:        f(r,t) = a
- poly_r:          f(r,t) = Σ a_k r^k            （与时间无关）
- separable_trig:  f(r,t) = a0 + A·sin(k_r·π·r + θ_r)·sin(ω·t + θ_t)

输入 U(t) 的族：zero / constant / sine。
"""
from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Mapping, Tuple

import numpy as np
from numpy.polynomial import Polynomial

from src.shared.errors import ConfigurationError

PARTIAL_NAMES = ("d_r", "d_rr", "d_t", "d_rt")


class ScalarField(ABC):
    """(r, t) 上的标量场，所有方法均支持 numpy 广播"""

    name: str = "field"

    @abstractmethod
    def value(self, r, t): ...

    @abstractmethod
    def d_r(self, r, t): ...

    @abstractmethod
    def d_rr(self, r, t): ...

    @abstractmethod
    def d_t(self, r, t): ...

    @abstractmethod
    def d_rt(self, r, t): ...

    @property
    @abstractmethod
    def is_time_invariant(self) -> bool: ...

    @abstractmethod
    def describe(self) -> Dict[str, Any]:
        """写入 summary.json 的族参数"""


def _broadcast(const: float, r, t) -> np.ndarray:
    shape = np.broadcast(np.asarray(r, dtype=float), np.asarray(t, dtype=float)).shape
    return np.full(shape, float(const))


@dataclass(frozen=True)
class ConstantField(ScalarField):
    val: float
    name: str = "constant"

    def value(self, r, t):
        return _broadcast(self.val, r, t)

    def d_r(self, r, t):
        return _broadcast(0.0, r, t)

    d_rr = d_r
    d_t = d_r
    d_rt = d_r

    @property
    def is_time_invariant(self) -> bool:
        return True

    def describe(self) -> Dict[str, Any]:
        return {"family": self.name, "value": self.val}


@dataclass(frozen=True)
class PolyRField(ScalarField):
    coefficients: Tuple[float, ...]
    name: str = "poly_r"

    def _poly(self, order: int = 0) -> Polynomial:
        poly = Polynomial(self.coefficients)
        return poly.deriv(order) if order else poly

    def value(self, r, t):
        return self._poly()(np.asarray(r, dtype=float)) + _broadcast(0.0, r, t)

    def d_r(self, r, t):
        return self._poly(1)(np.asarray(r, dtype=float)) + _broadcast(0.0, r, t)

    def d_rr(self, r, t):
        return self._poly(2)(np.asarray(r, dtype=float)) + _broadcast(0.0, r, t)

    def d_t(self, r, t):
        return _broadcast(0.0, r, t)

    d_rt = d_t

    @property
    def is_time_invariant(self) -> bool:
        return True

    def describe(self) -> Dict[str, Any]:
        return {"family": self.name, "coefficients": list(self.coefficients)}


@dataclass(frozen=True)
class SeparableTrigField(ScalarField):
    base: float
    amplitude: float
    k_r: float = 0.0
    phase_r: float = np.pi / 2
    omega: float = 0.0
    phase_t: float = np.pi / 2
    name: str = "separable_trig"

    def _g(self, r):
        return np.sin(self.k_r * np.pi * np.asarray(r, dtype=float) + self.phase_r)

    def _g_r(self, r):
        return self.k_r * np.pi * np.cos(self.k_r * np.pi * np.asarray(r, dtype=float) + self.phase_r)

    def _h(self, t):
        return np.sin(self.omega * np.asarray(t, dtype=float) + self.phase_t)

    def _h_t(self, t):
        return self.omega * np.cos(self.omega * np.asarray(t, dtype=float) + self.phase_t)

    def value(self, r, t):
        return self.base + self.amplitude * self._g(r) * self._h(t)

    def d_r(self, r, t):
        return self.amplitude * self._g_r(r) * self._h(t)

    def d_rr(self, r, t):
        return -self.amplitude * (self.k_r * np.pi) ** 2 * self._g(r) * self._h(t)

    def d_t(self, r, t):
        return self.amplitude * self._g(r) * self._h_t(t)

    def d_rt(self, r, t):
        return self.amplitude * self._g_r(r) * self._h_t(t)

    @property
    def is_time_invariant(self) -> bool:
        return self.amplitude == 0.0 or self.omega == 0.0

    def describe(self) -> Dict[str, Any]:
        return {
            "family": self.name,
            "base": self.base,
            "amplitude": self.amplitude,
            "k_r": self.k_r,
            "phase_r": self.phase_r,
            "omega": self.omega,
            "phase_t": self.phase_t,
        }


@dataclass(frozen=True)
class OverriddenField(ScalarField):
    """用另一族替换某些偏导数（校验用，正常配置不会出现）"""

    inner: ScalarField
    overrides: Mapping[str, ScalarField] = field(default_factory=dict)
    name: str = "overridden"

    def value(self, r, t):
        return self.inner.value(r, t)

    def _partial(self, which: str, r, t):
        if which in self.overrides:
            return self.overrides[which].value(r, t)
        return getattr(self.inner, which)(r, t)

    def d_r(self, r, t):
        return self._partial("d_r", r, t)

    def d_rr(self, r, t):
        return self._partial("d_rr", r, t)

    def d_t(self, r, t):
        return self._partial("d_t", r, t)

    def d_rt(self, r, t):
        return self._partial("d_rt", r, t)

    @property
    def is_time_invariant(self) -> bool:
        return self.inner.is_time_invariant and all(
            o.is_time_invariant for o in self.overrides.values()
        )

    def describe(self) -> Dict[str, Any]:
        desc = dict(self.inner.describe())
        desc["partials"] = {k: v.describe() for k, v in self.overrides.items()}
        return desc


# ==================== 边界输入 U(t) ====================

@dataclass(frozen=True)
class BoundaryInput:
    """U(t) = offset + amplitude·sin(omega·t + phase)"""

    offset: float = 0.0
    amplitude: float = 0.0
    omega: float = 0.0
    phase: float = 0.0
    name: str = "zero"

    def __call__(self, t):
        return self.offset + self.amplitude * np.sin(self.omega * np.asarray(t, dtype=float) + self.phase)

    def describe(self) -> Dict[str, Any]:
        return {
            "family": self.name,
            "offset": self.offset,
            "amplitude": self.amplitude,
            "omega": self.omega,
            "phase": self.phase,
        }


# ==================== 工厂 ====================

def _build_constant(spec: Mapping[str, Any]) -> ScalarField:
    return ConstantField(float(spec.get("value", 0.0)))


def _build_poly(spec: Mapping[str, Any]) -> ScalarField:
    coeffs = tuple(float(c) for c in spec.get("coefficients", ()))
    if not coeffs:
        raise ConfigurationError("poly_r 族需要非空 coefficients")
    return PolyRField(coeffs)


def _build_trig(spec: Mapping[str, Any]) -> ScalarField:
    return SeparableTrigField(
        base=float(spec.get("base", 0.0)),
        amplitude=float(spec.get("amplitude", 0.0)),
        k_r=float(spec.get("k_r", 0.0)),
        phase_r=float(spec.get("phase_r", np.pi / 2)),
        omega=float(spec.get("omega", 0.0)),
        phase_t=float(spec.get("phase_t", np.pi / 2)),
    )


FIELD_BUILDERS: Dict[str, Callable[[Mapping[str, Any]], ScalarField]] = {
    "constant": _build_constant,
    "poly_r": _build_poly,
    "separable_trig": _build_trig,
}


def build_field(spec: Mapping[str, Any]) -> ScalarField:
    """根据 {"family": ..., 参数...} 构造标量场"""
    family = spec.get("family")
    if family not in FIELD_BUILDERS:
        raise ConfigurationError(f"未知的系数族: {family!r}，可选 {sorted(FIELD_BUILDERS)}")
    built = FIELD_BUILDERS[family](spec)
    partials = spec.get("partials") or {}
    if partials:
        unknown = set(partials) - set(PARTIAL_NAMES)
        if unknown:
            raise ConfigurationError(f"未知的偏导数名称: {sorted(unknown)}")
        built = OverriddenField(built, {k: build_field(v) for k, v in partials.items()})
    return built


def build_input(spec: Mapping[str, Any]) -> BoundaryInput:
    """根据 {"family": zero|constant|sine, ...} 构造 U(t)"""
    family = spec.get("family", "zero")
    if family == "zero":
        return BoundaryInput()
    if family == "constant":
        return BoundaryInput(offset=float(spec.get("value", 0.0)), name="constant")
    if family == "sine":
        return BoundaryInput(
            offset=float(spec.get("offset", 0.0)),
            amplitude=float(spec.get("amplitude", 1.0)),
            omega=float(spec.get("omega", 1.0)),
            phase=float(spec.get("phase", 0.0)),
            name="sine",
        )
    raise ConfigurationError(f"未知的输入族: {family!r}")
