"""loguru 日志初始化。"""
from __future__ import annotations

import sys

from loguru import logger

_FORMAT = "{time:YYYY-MM-DD HH:mm:ss} [{level:>8}] {name}: {message}"


def configure_logging(level: str = "INFO") -> None:
    """替换默认 sink，只保留一个 stderr 输出"""
    logger.remove()
    logger.add(sys.stderr, level=level.upper(), format=_FORMAT)
