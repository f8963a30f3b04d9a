#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
chaos-trng - 主入口文件
"""

import os
import sys

# Add src directory to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from chaos_trng.cli.main import main as cli_main

if __name__ == "__main__":
    sys.exit(cli_main())
