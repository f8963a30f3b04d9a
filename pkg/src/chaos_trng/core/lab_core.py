#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
实验核心模块 - 统一管理默认配置、种子派生、运行清单和日志
"""

import configparser
import json
import os
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

from .errors import ConfigError, OutputError
from .logger import NullRunLogger, RunLogger
from .maps import DEFAULT_DITHER

TOOL_VERSION = "1.0.0"

# ===== CONFIGURATION =====
CONFIG: Dict[str, Any] = {
    "LOG_DIR": ".",
    "LOG_FILE": "error_log.txt",
    "LANGUAGE": "en",
    "MASTER_SEED": 20240601,
    "DITHER": DEFAULT_DITHER,
    "ALPHA": 0.01,
    "TRANSIENT": 1000,
    "KEEP": 10000,
    "ZERO_PLUS_X0": 1e-12,
    "THRESHOLD": 0.5,
    "X_BINS": 201,
    "M_COLUMNS": 600,
    "ORBIT_STEPS": 1000,
    "LYAPUNOV_STEPS": 100000,
    "SUITE_MIN_BITS": 10000,
    "TEST_BITS": 1000000,
    "BLOCK_BITS": 2,
    "CONFINE_TRIALS": 100,
    "CONFINE_STEPS": 10000,
    "PGM_ESCAPED_SHADE": 192,
    "MANIFEST_SUFFIX": ".manifest.json",
}

# ===== SEED SPLITTING =====
_MASK64 = (1 << 64) - 1
_GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def derive_seed(master: int, index: int) -> int:
    """
    由 (主种子, 任务下标) 派生子种子

    SplitMix64 的终结函数作用在 master + (index+1)·γ 上，结果与并行度无关。
    """
    z = (master + (index + 1) * _GOLDEN_GAMMA) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def load_config(path: str) -> Dict[str, Any]:
    """
    读取 config.ini 的 [General] 段并覆盖默认配置

    Args:
        path: 配置文件路径

    Returns:
        合并后的配置字典（不修改全局 CONFIG）
    """
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")

    parser = configparser.ConfigParser()
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as e:
        raise ConfigError(f"cannot parse {path}: {e}") from e

    merged = dict(CONFIG)
    if not parser.has_section("General"):
        return merged

    unknown = []
    for key, raw in parser.items("General"):
        name = key.upper()
        if name not in CONFIG:
            unknown.append(key)
            continue
        default = CONFIG[name]
        try:
            if isinstance(default, bool):
                merged[name] = parser.getboolean("General", key)
            elif isinstance(default, int):
                merged[name] = int(raw, 0)
            elif isinstance(default, float):
                merged[name] = float(raw)
            else:
                merged[name] = raw
        except ValueError as e:
            raise ConfigError(f"invalid value for {key} in {path}: {raw!r}") from e
    merged["_UNKNOWN_KEYS"] = unknown
    return merged


# ===== RUN MANIFEST =====
@dataclass
class RunManifest:
    """运行清单：随每个输出文件写出，重放即可逐字节复现"""

    subcommand: str
    parameters: Dict[str, Any]
    master_seed: int
    argv: List[str]
    tool_version: str = TOOL_VERSION
    outputs: List[str] = field(default_factory=list)
    notes: Dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    def save(self, path: str) -> None:
        try:
            with open(path, "w", encoding="utf-8", newline="\n") as f:
                f.write(self.to_json())
        except OSError as e:
            raise OutputError(f"cannot write manifest {path}: {e}") from e

    @classmethod
    def load(cls, path: str) -> "RunManifest":
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except OSError as e:
            raise OutputError(f"cannot read manifest {path}: {e}") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"manifest {path} is not valid JSON: {e}") from e
        try:
            return cls(**data)
        except TypeError as e:
            raise ConfigError(f"manifest {path} has unexpected fields: {e}") from e


def manifest_path_for(output_path: str) -> str:
    return output_path + CONFIG["MANIFEST_SUFFIX"]


class LabCore:
    """实验核心类，为命令行提供共享的配置和日志功能"""

    def __init__(self, log_dir: Optional[str] = None, enabled: bool = True,
                 settings: Optional[Dict[str, Any]] = None):
        """
        初始化实验核心

        Args:
            log_dir: 日志目录
            enabled: False 时不写任何日志文件
            settings: 已合并的配置（默认使用 CONFIG）
        """
        self.settings = dict(settings or CONFIG)
        self.log_dir = log_dir or self.settings["LOG_DIR"]
        if enabled:
            self.logger: RunLogger = RunLogger(os.path.join(self.log_dir, self.settings["LOG_FILE"]))
        else:
            self.logger = NullRunLogger()

    def log_error(self, error_message: str, exception: Optional[BaseException] = None,
                  context: Optional[Dict[str, Any]] = None) -> None:
        """记录错误日志"""
        self.logger.log_error(error_message, exception, context)

    def log_operation(self, operation: str, parameters: Optional[Dict[str, Any]] = None,
                      result: Optional[str] = None, duration: Optional[float] = None,
                      context: Optional[Dict[str, Any]] = None) -> None:
        """记录操作日志"""
        self.logger.log_operation(operation, parameters, result, duration, context)

    def log_experiment(self, experiment: str, map_label: str, settings: Dict[str, Any],
                       statistics: Dict[str, Any], duration: Optional[float] = None) -> None:
        """记录实验日志"""
        self.logger.log_experiment(experiment, map_label, settings, statistics, duration)

    def write_manifest(self, manifest: RunManifest, path: Optional[str] = None) -> str:
        """写出运行清单，默认放在第一个输出文件旁边"""
        if path is None:
            if not manifest.outputs:
                raise OutputError("manifest has no outputs to sit next to")
            path = manifest_path_for(manifest.outputs[0])
        manifest.save(path)
        return path
