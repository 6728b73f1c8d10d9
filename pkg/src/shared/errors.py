"""统一异常定义。

CLI 依据异常类型映射退出码：配置类错误返回 2，数值/收敛类错误返回 3。
"""
from __future__ import annotations

from typing import Optional


class PdeObserverError(Exception):
    """工具包所有异常的基类"""

    exit_code: int = 3


class ConfigurationError(PdeObserverError, ValueError):
    """场景配置或求解参数不合法"""

    exit_code = 2


class UnsupportedConfigurationError(ConfigurationError):
    """当前求解器不支持该配置（例如直接求解器遇到时变系数）"""


class DomainRangeError(PdeObserverError, ValueError):
    """自变量超出定义域"""


class ShapeMismatchError(PdeObserverError, ValueError):
    """网格或时间戳不匹配"""


class ResolutionError(PdeObserverError, ValueError):
    """网格分辨率不足以构造差分模板"""


class InvariantViolationError(PdeObserverError):
    """系数不满足基本不变量（例如 D <= 0）"""

    exit_code = 2


class NumericalError(PdeObserverError, ArithmeticError):
    """求积、线性求解等数值过程失败"""


class ConvergenceError(NumericalError):
    """逐次逼近在最大迭代次数内未收敛"""

    def __init__(self, message: str, tail_norm: float, iterations: int):
        super().__init__(f"{message} (tail_norm={tail_norm:.3e}, iterations={iterations})")
        self.tail_norm = tail_norm
        self.iterations = iterations


class StageError(PdeObserverError):
    """带流水线阶段标签的包装异常"""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 3)


def exit_code_for(exc: BaseException) -> int:
    """异常 → 退出码（0 成功，2 配置错误，3 数值/收敛错误）"""
    code: Optional[int] = getattr(exc, "exit_code", None)
    if code is not None:
        return code
    # pydantic.ValidationError 是 ValueError 的子类
    if isinstance(exc, ValueError):
        return 2
    return 3
