"""
chaos-trng - 改进帐篷映射的混沌动力学实验与真随机数生成
"""

__version__ = "1.0.0"
__description__ = "Modified tent map laboratory and chaos-based TRNG"

# 导出核心组件
from .core import (
    CONFIG, BitStream, EscapePolicy, LabCore, MapKind, OrbitConfig, OrbitResult, PartitionRule,
    RunLogger, TestReport, derive_seed, estimate_markov, extract_bits, iterate_orbit, run_suite, t,
)

__all__ = [
    'CONFIG', 'BitStream', 'EscapePolicy', 'LabCore', 'MapKind', 'OrbitConfig', 'OrbitResult',
    'PartitionRule', 'RunLogger', 'TestReport', 'derive_seed', 'estimate_markov', 'extract_bits',
    'iterate_orbit', 'run_suite', 't',
]
