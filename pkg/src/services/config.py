"""
服务层配置

统一管理服务层的数值常量，避免硬编码
"""
from dataclasses import dataclass


@dataclass
class GainsConfig:
    """增益计算配置"""

    # s = 1 处单侧差分所需的最少 s 采样数
    MIN_S_SAMPLES: int = 3


@dataclass
class SimulationConfig:
    """联合仿真配置"""

    # 一致性三角的标定常数：容差 = C·(Δt + h²)
    TRIANGLE_CALIBRATION: float = 5.0

    # 时变系数下核函数的最少时间样本
    MIN_KERNEL_TIME_SAMPLES: int = 3


@dataclass
class ReportConfig:
    """输出配置"""

    FLOAT_FORMAT: str = "%.17g"
    REGULARITY_NOTE: str = (
        "经典解的正则性无法数值认证；以网格/时间步加密下的收敛性作为证据"
    )


gains_config = GainsConfig()
simulation_config = SimulationConfig()
report_config = ReportConfig()
