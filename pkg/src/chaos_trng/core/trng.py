#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
真随机数模块 - 分区取比特、马尔可夫链估计与统计检验套件

状态落在 A 区（|x| < 阈值）输出 1，落在宏状态 B 输出 0。
比特按字节高位在前打包，长度单独记录。
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import special, stats

from .errors import ChaosTRNGError, InsufficientDataError, InvalidParameterError, OutputError
from .maps import MapKind, OrbitConfig, OrbitResult, iterate_orbit

DEFAULT_THRESHOLD = 0.5
DEFAULT_ALPHA = 0.01
SUITE_MIN_BITS = 10_000
TEST_MIN_BITS = 100
BLOCK_BITS_CHOICES = (2, 3, 4)

BitsLike = Union["BitStream", np.ndarray, Sequence[int]]


@dataclass(frozen=True)
class PartitionRule:
    """分区规则：|x| < threshold 输出 1，否则输出 0"""

    threshold: float = DEFAULT_THRESHOLD

    def __post_init__(self) -> None:
        if not math.isfinite(self.threshold) or self.threshold <= 0.0:
            raise InvalidParameterError(f"threshold must be positive, got {self.threshold}")

    def check(self, kind: MapKind) -> None:
        """阈值必须小于定义域的最大幅值，否则 B 区为空"""
        lo, hi = kind.domain
        if self.threshold >= max(abs(lo), abs(hi)):
            raise InvalidParameterError(
                f"threshold {self.threshold} leaves no room for macro-state B on [{lo}, {hi}]"
            )

    def classify(self, states: np.ndarray) -> np.ndarray:
        return (np.abs(np.asarray(states, dtype=float)) < self.threshold).astype(np.uint8)


@dataclass(frozen=True)
class BitStream:
    """
    打包的比特序列

    Args:
        packed: 高位在前的字节，最后一个字节低位补零
        length: 比特数
        kind, config, rule: 来源（从文件读入的流没有来源）
    """

    packed: bytes
    length: int
    kind: Optional[MapKind] = None
    config: Optional[OrbitConfig] = field(default=None, compare=False)
    rule: Optional[PartitionRule] = None

    def __post_init__(self) -> None:
        if self.length < 0 or len(self.packed) != -(-self.length // 8):
            raise InvalidParameterError(
                f"{len(self.packed)} packed bytes cannot hold exactly {self.length} bits"
            )

    @classmethod
    def from_bits(cls, bits: Iterable[int], **provenance: Any) -> "BitStream":
        arr = np.asarray(list(bits) if not isinstance(bits, np.ndarray) else bits, dtype=np.uint8)
        if arr.size and arr.max() > 1:
            raise InvalidParameterError("bit values must be 0 or 1")
        return cls(pack_bits(arr), int(arr.size), **provenance)

    def unpacked(self) -> np.ndarray:
        return unpack_bits(self.packed, self.length)

    @property
    def ones(self) -> int:
        return int(np.count_nonzero(self.unpacked()))

    def to_ascii(self) -> str:
        """每个比特一个字符 '0'/'1'，以换行结尾"""
        return (self.unpacked() + ord("0")).tobytes().decode("ascii") + "\n"

    def __len__(self) -> int:
        return self.length


# ===== 打包与文件读写 =====

def pack_bits(bits: np.ndarray) -> bytes:
    return np.packbits(np.asarray(bits, dtype=np.uint8)).tobytes()


def unpack_bits(data: bytes, length: int) -> np.ndarray:
    if len(data) * 8 < length:
        raise InvalidParameterError(f"{len(data)} bytes hold fewer than {length} bits")
    return np.unpackbits(np.frombuffer(data, dtype=np.uint8), count=length)


def write_bits_file(stream: BitStream, path: str, fmt: str = "packed") -> None:
    """按 packed 或 ascii 格式写出比特流"""
    try:
        if fmt == "packed":
            with open(path, "wb") as f:
                f.write(stream.packed)
        elif fmt == "ascii":
            with open(path, "w", encoding="ascii", newline="\n") as f:
                f.write(stream.to_ascii())
        else:
            raise InvalidParameterError(f"unknown bits format: {fmt}")
    except OSError as e:
        raise OutputError(f"cannot write bits file {path}: {e}") from e


def read_bits_file(path: str, fmt: str = "packed", length: Optional[int] = None) -> BitStream:
    """
    读取比特文件

    Args:
        path: 文件路径
        fmt: packed 或 ascii
        length: packed 格式的比特数（缺省时按整字节计算）
    """
    try:
        with open(path, "rb") as f:
            data = f.read()
    except OSError as e:
        raise OutputError(f"cannot read bits file {path}: {e}") from e

    if fmt == "ascii":
        text = data.decode("ascii", errors="replace").strip()
        if set(text) - {"0", "1"}:
            raise InvalidParameterError(f"{path} contains characters other than '0' and '1'")
        arr = np.frombuffer(text.encode("ascii"), dtype=np.uint8) - ord("0")
        return BitStream.from_bits(arr)
    if fmt != "packed":
        raise InvalidParameterError(f"unknown bits format: {fmt}")
    if length is None:
        length = len(data) * 8
    if -(-length // 8) != len(data):
        raise InvalidParameterError(f"{path} has {len(data)} bytes, which does not match {length} bits")
    return BitStream(data, length)


# ===== 取比特 =====

def extract_bits(orbit: OrbitResult, rule: PartitionRule = PartitionRule()) -> BitStream:
    """
    每个轨道状态产生一个比特；逃逸的轨道只对逃逸前的状态分类

    |x| 恰好等于阈值时归入 B（比特 0）。
    """
    states = orbit.states
    if orbit.escaped_at is not None:
        states = states[:orbit.escaped_at]
    if orbit.kind is not None:
        rule.check(orbit.kind)
    bits = rule.classify(states)
    return BitStream(pack_bits(bits), int(bits.size), orbit.kind, orbit.config, rule)


def generate_bits(kind: MapKind, cfg: OrbitConfig, rule: PartitionRule = PartitionRule()) -> BitStream:
    """迭代 cfg.n_steps 步并取比特（x0 本身不输出）"""
    return extract_bits(iterate_orbit(kind, cfg), rule)


def _as_bits(bits: BitsLike) -> np.ndarray:
    if isinstance(bits, BitStream):
        return bits.unpacked()
    return np.asarray(bits, dtype=np.uint8)


# ===== 马尔可夫链 =====

def _binary_entropy(p: float) -> float:
    return float(stats.entropy([p, 1.0 - p], base=2))


@dataclass(frozen=True)
class MarkovEstimate:
    """
    两状态马尔可夫链的最大似然估计

    p 是 1 之后仍为 1 的概率，q 是 0 之后仍为 0 的概率；
    分母为零时对应概率为 None。
    """

    n11: int
    n10: int
    n00: int
    n01: int
    p: Optional[float]
    q: Optional[float]

    @property
    def transitions(self) -> int:
        return self.n11 + self.n10 + self.n00 + self.n01

    @property
    def stationary_ones(self) -> Optional[float]:
        """平稳分布中 1 的概率 (1-q)/(2-p-q)"""
        if self.p is None or self.q is None or self.p + self.q >= 2.0:
            return None
        return (1.0 - self.q) / (2.0 - self.p - self.q)

    @property
    def entropy_rate(self) -> Optional[float]:
        """拟合链的熵率（比特/输出比特）"""
        pi1 = self.stationary_ones
        if pi1 is None:
            return None
        assert self.p is not None and self.q is not None
        return pi1 * _binary_entropy(self.p) + (1.0 - pi1) * _binary_entropy(self.q)

    def table(self) -> np.ndarray:
        """转移计数表，行是前一比特，列是后一比特"""
        return np.array([[self.n00, self.n01], [self.n10, self.n11]], dtype=np.int64)


def estimate_markov(bits: BitsLike) -> MarkovEstimate:
    b = _as_bits(bits)
    if b.size < 2:
        raise InsufficientDataError(2, int(b.size))
    codes = 2 * b[:-1].astype(np.int64) + b[1:]
    n00, n01, n10, n11 = (int(c) for c in np.bincount(codes, minlength=4))
    p = n11 / (n11 + n10) if n11 + n10 else None
    q = n00 / (n00 + n01) if n00 + n01 else None
    return MarkovEstimate(n11, n10, n00, n01, p, q)


# ===== 统计检验 =====

class TestStatus(str, Enum):
    __test__ = False

    PASS = "pass"
    FAIL = "fail"
    SKIPPED = "skipped"
    ERROR = "error"


@dataclass(frozen=True)
class TestEntry:
    """单项检验结果；跳过或出错时 statistic 与 p_value 为 NaN"""

    __test__ = False

    name: str
    statistic: float
    p_value: float
    status: TestStatus
    alpha: float
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.status is TestStatus.PASS

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "statistic": None if math.isnan(self.statistic) else self.statistic,
            "p_value": None if math.isnan(self.p_value) else self.p_value,
            "status": self.status.value,
            "alpha": self.alpha,
            "detail": self.detail,
        }


@dataclass(frozen=True)
class TestReport:
    """检验套件报告：所有未跳过的检验都通过时整体通过"""

    __test__ = False

    entries: Tuple[TestEntry, ...]
    alpha: float
    length: int
    markov: Optional[MarkovEstimate] = None

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries if e.status is not TestStatus.SKIPPED)

    def entry(self, name: str) -> TestEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "alpha": self.alpha,
            "length": self.length,
            "passed": self.passed,
            "entries": [e.to_dict() for e in self.entries],
        }
        if self.markov is not None:
            data["markov"] = {
                "n11": self.markov.n11, "n10": self.markov.n10,
                "n00": self.markov.n00, "n01": self.markov.n01,
                "p": self.markov.p, "q": self.markov.q,
                "stationary_ones": self.markov.stationary_ones,
                "entropy_rate": self.markov.entropy_rate,
            }
        return data


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise InvalidParameterError(f"alpha must lie in (0, 1), got {alpha}")


def _normal_entry(name: str, statistic: float, z: float, alpha: float, detail: str = "") -> TestEntry:
    p_value = float(special.erfc(abs(z) / math.sqrt(2.0)))
    status = TestStatus.PASS if p_value >= alpha else TestStatus.FAIL
    return TestEntry(name, float(statistic), p_value, status, alpha, detail)


def _skipped(name: str, alpha: float, detail: str) -> TestEntry:
    return TestEntry(name, math.nan, math.nan, TestStatus.SKIPPED, alpha, detail)


def monobit_test(bits: BitsLike, alpha: float = DEFAULT_ALPHA) -> TestEntry:
    """1 的个数相对 n/2 的双侧正态检验，统计量 |ones - n/2| / (√n/2)"""
    _check_alpha(alpha)
    b = _as_bits(bits)
    n = int(b.size)
    if n < TEST_MIN_BITS:
        raise InsufficientDataError(TEST_MIN_BITS, n)
    ones = int(np.count_nonzero(b))
    s = abs(ones - n / 2.0) / (math.sqrt(n) / 2.0)
    return _normal_entry("monobit", s, s, alpha, f"ones={ones}")


def runs_test(bits: BitsLike, alpha: float = DEFAULT_ALPHA) -> TestEntry:
    """
    游程检验：游程数与期望 2nπ₀π₁ + 1 比较

    1 的比例偏离 1/2 超过 2/√n 时不满足前提，报告为跳过。
    """
    _check_alpha(alpha)
    b = _as_bits(bits)
    n = int(b.size)
    if n < TEST_MIN_BITS:
        raise InsufficientDataError(TEST_MIN_BITS, n)
    pi1 = np.count_nonzero(b) / n
    if abs(pi1 - 0.5) >= 2.0 / math.sqrt(n):
        return _skipped("runs", alpha, f"ones fraction {pi1:.6f} fails the monobit precondition")
    pi0 = 1.0 - pi1
    runs = 1 + int(np.count_nonzero(b[1:] != b[:-1]))
    expected = 2.0 * n * pi0 * pi1 + 1.0
    z = (runs - expected) / (2.0 * math.sqrt(n) * pi0 * pi1)
    return _normal_entry("runs", z, z, alpha, f"runs={runs}")


def serial_correlation_test(bits: BitsLike, lag: int = 1, alpha: float = DEFAULT_ALPHA) -> TestEntry:
    """滞后 lag 的样本自相关，按方差 1/n 的正态分布检验是否为 0"""
    _check_alpha(alpha)
    if lag < 1:
        raise InvalidParameterError(f"lag must be >= 1, got {lag}")
    b = _as_bits(bits).astype(float)
    n = int(b.size)
    if n <= lag + TEST_MIN_BITS:
        raise InsufficientDataError(lag + TEST_MIN_BITS + 1, n)
    head, tail = b[:-lag], b[lag:]
    if head.std() == 0.0 or tail.std() == 0.0:
        # 常数序列完全可预测
        r = 1.0
    else:
        r = float(np.corrcoef(head, tail)[0, 1])
    z = r * math.sqrt(n - lag)
    return _normal_entry(f"serial_lag{lag}", r, z, alpha)


def block_chisquare_test(bits: BitsLike, block_bits: int = 2, alpha: float = DEFAULT_ALPHA) -> TestEntry:
    """不重叠 k 比特分组的 2^k 种模式对均匀分布的卡方检验"""
    _check_alpha(alpha)
    if block_bits not in BLOCK_BITS_CHOICES:
        raise InvalidParameterError(f"block_bits must be one of {BLOCK_BITS_CHOICES}, got {block_bits}")
    b = _as_bits(bits)
    n = int(b.size)
    required = 20 * 2 ** block_bits
    if n < required:
        raise InsufficientDataError(required, n)
    n_blocks = n // block_bits
    blocks = b[:n_blocks * block_bits].reshape(n_blocks, block_bits).astype(np.int64)
    patterns = blocks @ (1 << np.arange(block_bits - 1, -1, -1))
    counts = np.bincount(patterns, minlength=2 ** block_bits)
    statistic, p_value = stats.chisquare(counts)
    p_value = float(p_value)
    status = TestStatus.PASS if p_value >= alpha else TestStatus.FAIL
    return TestEntry(f"block{block_bits}_chisquare", float(statistic), p_value, status, alpha,
                     f"blocks={n_blocks}")


def markov_independence_test(bits: BitsLike, alpha: float = DEFAULT_ALPHA) -> TestEntry:
    """2×2 转移计数表的独立性卡方检验；无记忆信源的下一比特与上一比特无关"""
    _check_alpha(alpha)
    b = _as_bits(bits)
    if b.size < TEST_MIN_BITS:
        raise InsufficientDataError(TEST_MIN_BITS, int(b.size))
    table = estimate_markov(b).table()
    if (table.sum(axis=0) == 0).any() or (table.sum(axis=1) == 0).any():
        return _skipped("markov_independence", alpha, "transition table has an empty row or column")
    statistic, p_value, _, _ = stats.chi2_contingency(table, correction=False)
    p_value = float(p_value)
    status = TestStatus.PASS if p_value >= alpha else TestStatus.FAIL
    return TestEntry("markov_independence", float(statistic), p_value, status, alpha)


def _collect(name: str, run: Any, alpha: float) -> TestEntry:
    try:
        entry: TestEntry = run()
        return entry
    except ChaosTRNGError as e:
        return TestEntry(name, math.nan, math.nan, TestStatus.ERROR, alpha, str(e))


def run_suite(bits: BitsLike, alpha: float = DEFAULT_ALPHA, lags: Sequence[int] = (1,),
              block_bits: int = 2, min_bits: int = SUITE_MIN_BITS) -> TestReport:
    """
    运行全部检验

    Args:
        bits: 比特流
        alpha: 显著性水平
        lags: 序列相关检验的滞后
        block_bits: 分组卡方检验的分组比特数
        min_bits: 最少比特数

    Returns:
        TestReport（含马尔可夫估计）
    """
    _check_alpha(alpha)
    b = _as_bits(bits)
    n = int(b.size)
    if n < min_bits:
        raise InsufficientDataError(min_bits, n)

    entries: List[TestEntry] = [
        _collect("monobit", lambda: monobit_test(b, alpha), alpha),
        _collect("runs", lambda: runs_test(b, alpha), alpha),
    ]
    for lag in lags:
        entries.append(_collect(f"serial_lag{lag}", lambda lag=lag: serial_correlation_test(b, lag, alpha), alpha))
    entries.append(_collect(f"block{block_bits}_chisquare",
                            lambda: block_chisquare_test(b, block_bits, alpha), alpha))
    entries.append(_collect("markov_independence", lambda: markov_independence_test(b, alpha), alpha))
    return TestReport(tuple(entries), alpha, n, estimate_markov(b))
