#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
chaos-trng - 主模块入口
使用方法: python -m chaos_trng <子命令> [参数]
"""

import sys

from .cli.main import main

if __name__ == "__main__":
    sys.exit(main())
