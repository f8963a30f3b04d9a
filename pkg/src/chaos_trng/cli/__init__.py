"""
CLI模块 - 命令行界面
"""

from .main import LabCLI, build_parser, main, parse_map_selector, run

__all__ = ['LabCLI', 'build_parser', 'main', 'parse_map_selector', 'run']
