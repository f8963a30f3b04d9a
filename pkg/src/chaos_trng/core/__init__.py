"""
核心模块 - 映射、混沌诊断、随机数生成、配置、日志系统、本地化
"""

from .analysis import (
    BifurcationDiagram, ConfinementReport, DensityHistogram, LyapunovEstimate, Regime,
    bifurcation_scan, check_bifurcation_regimes, classify_regime, confinement_probe,
    density_histogram, escape_frequencies, estimate_lyapunov,
)
from .errors import (
    ChaosTRNGError, ConfigError, DomainError, EscapeError, InsufficientDataError,
    InvalidParameterError, OutputError, UsageError,
)
from .lab_core import CONFIG, LabCore, RunManifest, derive_seed, load_config
from .localization import get_available_languages, get_current_language, init_localization, t
from .logger import NullRunLogger, RunLogger
from .maps import (
    EscapePolicy, MapFamily, MapKind, NonidealParams, OrbitConfig, OrbitResult, PiecewiseAffineMap,
    build_piecewise, derivative_magnitude, eval_bernoulli, eval_generalized, eval_modified_tent,
    eval_piecewise, eval_tent, evaluate, iterate_orbit,
)
from .trng import (
    BitStream, MarkovEstimate, PartitionRule, TestEntry, TestReport, TestStatus,
    block_chisquare_test, estimate_markov, extract_bits, generate_bits, markov_independence_test,
    monobit_test, read_bits_file, run_suite, runs_test, serial_correlation_test, write_bits_file,
)

__all__ = [
    'BifurcationDiagram', 'ConfinementReport', 'DensityHistogram', 'LyapunovEstimate', 'Regime',
    'bifurcation_scan', 'check_bifurcation_regimes', 'classify_regime', 'confinement_probe',
    'density_histogram', 'escape_frequencies', 'estimate_lyapunov',
    'ChaosTRNGError', 'ConfigError', 'DomainError', 'EscapeError', 'InsufficientDataError',
    'InvalidParameterError', 'OutputError', 'UsageError',
    'CONFIG', 'LabCore', 'RunManifest', 'derive_seed', 'load_config',
    'get_available_languages', 'get_current_language', 'init_localization', 't',
    'NullRunLogger', 'RunLogger',
    'EscapePolicy', 'MapFamily', 'MapKind', 'NonidealParams', 'OrbitConfig', 'OrbitResult',
    'PiecewiseAffineMap', 'build_piecewise', 'derivative_magnitude', 'eval_bernoulli',
    'eval_generalized', 'eval_modified_tent', 'eval_piecewise', 'eval_tent', 'evaluate', 'iterate_orbit',
    'BitStream', 'MarkovEstimate', 'PartitionRule', 'TestEntry', 'TestReport', 'TestStatus',
    'block_chisquare_test', 'estimate_markov', 'extract_bits', 'generate_bits',
    'markov_independence_test', 'monobit_test', 'read_bits_file', 'run_suite', 'runs_test',
    'serial_correlation_test', 'write_bits_file',
]
