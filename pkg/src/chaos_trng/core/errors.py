#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
异常类型 - 映射、分析、随机数生成与命令行共用
"""

from typing import Optional, Tuple


class ChaosTRNGError(Exception):
    """所有库内异常的基类"""


class DomainError(ChaosTRNGError, ValueError):
    """状态值超出映射定义域"""

    def __init__(self, value: float, domain: Tuple[float, float], what: str = "x"):
        self.value = value
        self.domain = domain
        lo, hi = domain
        super().__init__(f"{what}={value!r} is outside the domain [{lo}, {hi}]")


class InvalidParameterError(ChaosTRNGError, ValueError):
    """映射或实验参数无效（例如 m = 0）"""


class EscapeError(ChaosTRNGError):
    """轨道在需要完整数据的位置逃逸出定义域"""

    def __init__(self, step: int, message: Optional[str] = None):
        self.step = step
        super().__init__(message or f"orbit escaped the domain at step {step}")


class InsufficientDataError(ChaosTRNGError, ValueError):
    """比特流长度不足以执行统计检验"""

    def __init__(self, required: int, actual: int, what: str = "bits"):
        self.required = required
        self.actual = actual
        super().__init__(f"need at least {required} {what}, got {actual}")


class ConfigError(ChaosTRNGError):
    """配置文件格式错误"""


class OutputError(ChaosTRNGError):
    """输出文件无法写入或读取"""


class UsageError(InvalidParameterError):
    """命令行参数错误"""
