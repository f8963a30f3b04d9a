#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
共享日志系统模块
记录实验操作、实验结果摘要和错误；日志只作旁路记录，从不影响主输出文件
"""

import datetime
import os
import sys
import traceback
from typing import Any, Dict, Optional


class RunLogger:
    """统一的实验日志系统"""

    def __init__(self, log_file_path: str = "error_log.txt"):
        """
        初始化日志系统

        Args:
            log_file_path: 错误日志文件路径，其他日志文件放在同目录的 logs/ 下
        """
        self.base_log_path = log_file_path
        self.base_dir = os.path.dirname(log_file_path)
        if not self.base_dir:
            self.base_dir = "."

        os.makedirs(os.path.join(self.base_dir, "logs"), exist_ok=True)

        self.error_log_path = log_file_path
        self.operation_log_path = os.path.join(self.base_dir, "logs", "operation_log.txt")
        self.experiment_log_path = os.path.join(self.base_dir, "logs", "experiment_log.txt")

    @staticmethod
    def _write_items(log_file: Any, title: str, items: Dict[str, Any]) -> None:
        log_file.write(f"{title}:\n")
        for key, value in items.items():
            log_file.write(f"  {key}: {value}\n")

    def log_error(self, error_message: str, exception: Optional[BaseException] = None,
                  context: Optional[Dict[str, Any]] = None) -> None:
        """
        错误日志记录

        Args:
            error_message: 错误消息
            exception: 异常对象
            context: 额外的上下文信息
        """
        try:
            timestamp = datetime.datetime.now().strftime("%Y-%m-%d %H:%M:%S")

            with open(self.error_log_path, "a", encoding="utf-8") as log_file:
                log_file.write(f"\n--- ERROR [{timestamp}] ---\n")
                log_file.write(f"Message: {error_message}\n")

                if exception is not None:
                    log_file.write(f"Exception: {type(exception).__name__}: {exception}\n")
                    traceback.print_exception(type(exception), exception,
                                              exception.__traceback__, file=log_file)

                if context:
                    self._write_items(log_file, "Context", context)

                log_file.write("--- END ERROR ---\n")

        except Exception as e:
            print(f"CRITICAL: Failed to write to error log: {e}", file=sys.stderr)

    def log_operation(self, operation: str, parameters: Optional[Dict[str, Any]] = None,
                      result: Optional[str] = None, duration: Optional[float] = None,
                      context: Optional[Dict[str, Any]] = None) -> None:
        """
        记录操作日志

        Args:
            operation: 操作名称（子命令）
            parameters: 解析后的参数
            result: 操作结果摘要
            duration: 操作持续时间（秒）
            context: 附加上下文
        """
        try:
            timestamp = datetime.datetime.now().strftime("%Y-%m-%d %H:%M:%S.%f")[:-3]

            with open(self.operation_log_path, "a", encoding="utf-8") as log_file:
                log_file.write(f"\n=== OPERATION [{timestamp}] ===\n")
                log_file.write(f"Operation: {operation}\n")

                if parameters:
                    log_file.write("Parameters:\n")
                    for key, value in parameters.items():
                        if isinstance(value, str) and len(value) > 200:
                            value = value[:200] + f"... (truncated, total: {len(value)} chars)"
                        log_file.write(f"  {key}: {value}\n")

                if result:
                    result_log = result[:500] + "..." if len(result) > 500 else result
                    log_file.write(f"Result: {result_log}\n")

                if duration is not None:
                    log_file.write(f"Duration: {duration:.3f}s\n")

                if context:
                    self._write_items(log_file, "Context", context)

                log_file.write("=== END OPERATION ===\n")

        except Exception as e:
            print(f"CRITICAL: Failed to write operation log: {e}", file=sys.stderr)

    def log_experiment(self, experiment: str, map_label: str, settings: Dict[str, Any],
                       statistics: Dict[str, Any], duration: Optional[float] = None) -> None:
        """
        记录一次实验的完整摘要

        Args:
            experiment: 实验名称
            map_label: 映射选择器
            settings: 轨道/扫描设置
            statistics: 关键统计量
            duration: 运行时间（秒）
        """
        try:
            timestamp = datetime.datetime.now().strftime("%Y-%m-%d %H:%M:%S.%f")[:-3]

            with open(self.experiment_log_path, "a", encoding="utf-8") as log_file:
                log_file.write(f"\n### EXPERIMENT [{timestamp}] ###\n")
                log_file.write(f"Experiment: {experiment}\n")
                log_file.write(f"Map: {map_label}\n")
                if duration is not None:
                    log_file.write(f"Duration: {duration:.3f}s\n")
                self._write_items(log_file, "Settings", settings)
                self._write_items(log_file, "Statistics", statistics)
                log_file.write("### END EXPERIMENT ###\n")

        except Exception as e:
            print(f"CRITICAL: Failed to write experiment log: {e}", file=sys.stderr)

    @staticmethod
    def create_default_logger(base_path: str = "error_log.txt") -> "RunLogger":
        """
        创建默认的日志器实例

        Args:
            base_path: 错误日志文件路径

        Returns:
            RunLogger: 日志器实例
        """
        return RunLogger(base_path)


class NullRunLogger(RunLogger):
    """--no-log 时使用：接口相同，不写任何文件"""

    def __init__(self) -> None:
        self.base_log_path = ""
        self.base_dir = ""

    def log_error(self, error_message: str, exception: Optional[BaseException] = None,
                  context: Optional[Dict[str, Any]] = None) -> None:
        return None

    def log_operation(self, operation: str, parameters: Optional[Dict[str, Any]] = None,
                      result: Optional[str] = None, duration: Optional[float] = None,
                      context: Optional[Dict[str, Any]] = None) -> None:
        return None

    def log_experiment(self, experiment: str, map_label: str, settings: Dict[str, Any],
                       statistics: Dict[str, Any], duration: Optional[float] = None) -> None:
        return None
