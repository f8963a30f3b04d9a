#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
混沌诊断模块 - 李雅普诺夫指数、渐近密度直方图、分岔图扫描与约束探测

分岔列和约束试验各自拥有由 (主种子, 下标) 派生的独立生成器，
结果与批处理方式无关，所有结果类型生成后不可变。
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import EscapeError, InvalidParameterError
from .lab_core import derive_seed
from .maps import (
    CONFINED_SLOPE_LIMIT, DEFAULT_DITHER, NOISE_CHUNK, MapKind, OrbitConfig, OrbitResult,
    array_map_function, check_start, dither_generator, generalized_array, iterate_orbit,
    slope_magnitudes,
)

# "0⁺" 初值与分岔扫描的默认抖动：抖动须远小于初值，又要足以刷新尾数低位
ZERO_PLUS = 1e-12
SCAN_DITHER = 2.0 ** -52


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def _kept_states(orbit: OrbitResult, n_transient: int, allow_late_escape: bool) -> np.ndarray:
    """丢弃暂态后的状态；暂态内逃逸时抛出 EscapeError"""
    states = orbit.states
    if orbit.escaped_at is not None:
        if orbit.escaped_at <= n_transient or not allow_late_escape:
            raise EscapeError(orbit.escaped_at)
        return states[n_transient:orbit.escaped_at]
    return states[n_transient:]


# ===== 李雅普诺夫指数 =====

@dataclass(frozen=True)
class LyapunovEstimate:
    """李雅普诺夫指数估计（奈特/步）"""

    lambda_: float
    n_samples: int
    standard_error: float
    escaped_at: Optional[int] = None


def estimate_lyapunov(kind: MapKind, cfg: OrbitConfig, n_transient: int) -> LyapunovEstimate:
    """
    用访问状态的时间平均估计 λ = <ln|M'(x)|>

    Args:
        kind: 映射种类
        cfg: 轨道配置（斜率为 2 的映射应开启抖动）
        n_transient: 丢弃的暂态步数

    Returns:
        LyapunovEstimate
    """
    if cfg.n_steps <= n_transient:
        raise InvalidParameterError(f"n_steps ({cfg.n_steps}) must exceed n_transient ({n_transient})")
    orbit = iterate_orbit(kind, cfg)
    kept = _kept_states(orbit, n_transient, allow_late_escape=True)
    logs = np.log(slope_magnitudes(kind, kept))
    n = int(logs.size)
    stderr = float(np.std(logs, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return LyapunovEstimate(float(np.mean(logs)), n, stderr, orbit.escaped_at)


# ===== 密度直方图 =====

@dataclass(frozen=True)
class DensityHistogram:
    """归一化直方图：heights·widths 之和为 1"""

    edges: np.ndarray
    counts: np.ndarray
    heights: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    def integral(self) -> float:
        return float(np.sum(self.heights * self.widths))

    def bin_of(self, x: float) -> int:
        i = int(np.searchsorted(self.edges, x, side="right")) - 1
        return min(max(i, 0), len(self.counts) - 1)


def histogram_of(values: np.ndarray, lo: float, hi: float, n_bins: int) -> DensityHistogram:
    counts, edges = np.histogram(values, bins=n_bins, range=(lo, hi))
    heights = counts / (counts.sum() * np.diff(edges))
    return DensityHistogram(_frozen(edges), _frozen(counts), _frozen(heights))


def density_histogram(kind: MapKind, cfg: OrbitConfig, n_transient: int, n_bins: int,
                      use_abs: bool = False) -> DensityHistogram:
    """
    暂态后状态（或其绝对值）的归一化直方图

    Args:
        kind: 映射种类
        cfg: 轨道配置
        n_transient: 丢弃的暂态步数
        n_bins: 箱数，至少 2；箱数为偶数时 0 恰在箱边界上，带抖动的近零状态会分到两侧，
            需要 "0 所在的箱" 时用奇数箱数
        use_abs: 对 |x| 作直方图
    """
    if n_bins < 2:
        raise InvalidParameterError(f"n_bins must be >= 2, got {n_bins}")
    if cfg.n_steps <= n_transient:
        raise InvalidParameterError(f"n_steps ({cfg.n_steps}) must exceed n_transient ({n_transient})")
    orbit = iterate_orbit(kind, cfg)
    if orbit.escaped_at is not None:
        raise EscapeError(orbit.escaped_at)
    values = orbit.states[n_transient:]
    lo, hi = kind.domain
    if use_abs:
        values = np.abs(values)
        lo, hi = 0.0, max(abs(lo), abs(hi))
    return histogram_of(values, lo, hi, n_bins)


# ===== 分岔图 =====

class ColumnStatus(str, Enum):
    OK = "ok"
    ESCAPED = "escaped"
    INVALID = "invalid"


class Regime(str, Enum):
    """广义映射族按斜率划分的定性区间"""

    SETTLES_TO_ZERO = "settles_to_zero"
    POSITIVE_CHAOS = "positive_chaos"
    ALTERNATING_CHAOS = "alternating_chaos"
    CHAOS = "chaos"
    ESCAPES = "escapes"


def classify_regime(m: float) -> Regime:
    a = abs(m)
    if a > CONFINED_SLOPE_LIMIT:
        return Regime.ESCAPES
    if a <= 1.0:
        return Regime.SETTLES_TO_ZERO
    if 1.0 < m <= 2.0:
        return Regime.POSITIVE_CHAOS
    if -2.0 <= m < -1.0:
        return Regime.ALTERNATING_CHAOS
    return Regime.CHAOS


@dataclass(frozen=True)
class BifurcationDiagram:
    """
    分岔图

    density 的形状为 (x 箱数, m 列数)，第 0 行是最低的 x 箱。
    逃逸列只做标记，保留逃逸前已计入的访问次数。
    """

    m_grid: np.ndarray
    x_edges: np.ndarray
    density: np.ndarray
    status: Tuple[ColumnStatus, ...]
    escaped_at: np.ndarray
    kept_min: np.ndarray
    kept_max: np.ndarray
    terminal: np.ndarray
    alternating: np.ndarray
    n_transient: int
    n_keep: int
    x0: float
    dither: float
    seed: int

    @property
    def x_centers(self) -> np.ndarray:
        return 0.5 * (self.x_edges[:-1] + self.x_edges[1:])

    def column(self, i: int) -> np.ndarray:
        return self.density[:, i]

    def column_index(self, m: float) -> int:
        """最接近 m 的列"""
        return int(np.argmin(np.abs(self.m_grid - m)))

    @property
    def escaped_columns(self) -> List[int]:
        return [i for i, s in enumerate(self.status) if s is ColumnStatus.ESCAPED]


def bifurcation_scan(m_lo: float, m_hi: float, n_m: int, x_bins: int, n_transient: int,
                     n_keep: int, x0: float = ZERO_PLUS, dither: float = SCAN_DITHER,
                     seed: int = 0, escape_study: bool = False) -> BifurcationDiagram:
    """
    对广义映射族做分岔扫描：每个 m 丢弃暂态后把 n_keep 个状态计入 x 箱

    所有列作为一个向量同步迭代，每列噪声来自各自的生成器。

    Args:
        m_lo, m_hi: 斜率范围
        n_m: 列数
        x_bins: [-1, 1] 上的箱数
        n_transient: 暂态步数
        n_keep: 每列保留的样本数
        x0: 初值（默认 0⁺ = 1e-12）
        dither: 抖动半宽
        seed: 主种子
        escape_study: 允许 |m| > 3 的列
    """
    if n_m < 1 or x_bins < 2 or n_keep < 1 or n_transient < 0:
        raise InvalidParameterError("n_m >= 1, x_bins >= 2, n_keep >= 1 and n_transient >= 0 are required")
    if not m_lo <= m_hi:
        raise InvalidParameterError(f"m range must satisfy m_lo <= m_hi, got [{m_lo}, {m_hi}]")
    if not escape_study and max(abs(m_lo), abs(m_hi)) > CONFINED_SLOPE_LIMIT:
        raise InvalidParameterError("m range leaves [-3, 3]; enable escape_study to scan it")
    if not -1.0 < x0 < 1.0:
        raise InvalidParameterError(f"x0 must lie inside (-1, 1), got {x0}")

    m_grid = np.linspace(m_lo, m_hi, n_m)
    invalid = m_grid == 0.0
    m_safe = np.where(invalid, 1.0, m_grid)
    edges = np.linspace(-1.0, 1.0, x_bins + 1)
    cols = np.arange(n_m)

    density = np.zeros((x_bins, n_m), dtype=np.int64)
    escaped_at = np.full(n_m, -1, dtype=np.int64)
    kept_min = np.full(n_m, np.inf)
    kept_max = np.full(n_m, -np.inf)
    alternating = np.ones(n_m, dtype=bool)
    active = ~invalid

    gens = [dither_generator(derive_seed(seed, i)) for i in range(n_m)] if dither > 0.0 else []
    total = n_transient + n_keep
    x = np.full(n_m, float(x0))
    prev: Optional[np.ndarray] = None
    k = 0
    while k < total:
        size = min(NOISE_CHUNK, total - k)
        noise = np.stack([g.uniform(-dither, dither, size) for g in gens], axis=1) if gens else None
        for j in range(size):
            y = generalized_array(m_safe, x)
            out = active & (np.abs(y) > 1.0)
            if out.any():
                escaped_at[out] = k
                active &= ~out
            if noise is not None:
                y = y + noise[j]
                y = np.where(y > 1.0, 2.0 - y, y)
                y = np.where(y < -1.0, -2.0 - y, y)
            y = np.where(active, y, 0.0)
            if k >= n_transient:
                rows = np.clip(np.searchsorted(edges, y, side="right") - 1, 0, x_bins - 1)
                density[rows[active], cols[active]] += 1
                kept_min = np.where(active, np.minimum(kept_min, y), kept_min)
                kept_max = np.where(active, np.maximum(kept_max, y), kept_max)
                if prev is not None:
                    alternating &= ~active | (prev * y < 0.0)
                prev = y
            x = y
            k += 1

    status = tuple(
        ColumnStatus.INVALID if invalid[i]
        else ColumnStatus.ESCAPED if escaped_at[i] >= 0
        else ColumnStatus.OK
        for i in range(n_m)
    )
    terminal = np.where(active, x, np.nan)
    return BifurcationDiagram(
        m_grid=_frozen(m_grid), x_edges=_frozen(edges), density=_frozen(density), status=status,
        escaped_at=_frozen(escaped_at), kept_min=_frozen(kept_min), kept_max=_frozen(kept_max),
        terminal=_frozen(terminal), alternating=_frozen(alternating & active),
        n_transient=n_transient, n_keep=n_keep, x0=float(x0), dither=float(dither), seed=seed,
    )


@dataclass(frozen=True)
class RegimeViolation:
    m: float
    regime: Regime
    problem: str


def check_bifurcation_regimes(diagram: BifurcationDiagram, zero_tol: float = 1e-6) -> List[RegimeViolation]:
    """
    按斜率区间核对分岔图的定性行为，返回所有不符合的列（空列表表示全部符合）
    """
    violations: List[RegimeViolation] = []
    for i, m in enumerate(diagram.m_grid.tolist()):
        status = diagram.status[i]
        if status is ColumnStatus.INVALID:
            continue
        regime = classify_regime(m)
        if regime is Regime.ESCAPES:
            if status is not ColumnStatus.ESCAPED:
                violations.append(RegimeViolation(m, regime, "column did not escape"))
            continue
        if status is ColumnStatus.ESCAPED:
            violations.append(RegimeViolation(m, regime, f"escaped at step {diagram.escaped_at[i]}"))
            continue
        if regime is Regime.SETTLES_TO_ZERO:
            spread = max(abs(diagram.kept_min[i]), abs(diagram.kept_max[i]))
            if spread >= zero_tol:
                violations.append(RegimeViolation(m, regime, f"kept states reach |x| = {spread:.3g}"))
        elif regime is Regime.POSITIVE_CHAOS:
            if not diagram.kept_min[i] > 0.0:
                violations.append(RegimeViolation(m, regime, f"minimum kept state {diagram.kept_min[i]:.3g}"))
        elif regime is Regime.ALTERNATING_CHAOS:
            if not diagram.alternating[i]:
                violations.append(RegimeViolation(m, regime, "consecutive kept states share a sign"))
    return violations


# ===== 约束探测 =====

@dataclass(frozen=True)
class ConfinementReport:
    """约束探测结果；escape_steps 仅对逃逸的试验有值"""

    kind: MapKind
    trials: int
    steps_per_trial: int
    escapes: int
    escape_steps: Tuple[Optional[int], ...]
    max_excursion: float
    seed: int
    dither: float

    @property
    def escape_rate(self) -> float:
        return self.escapes / self.trials

    @property
    def median_escape_step(self) -> Optional[float]:
        steps = [s for s in self.escape_steps if s is not None]
        return float(np.median(steps)) if steps else None


def interior_start(rng: np.random.Generator, lo: float, hi: float) -> float:
    """在开区间 (lo, hi) 内均匀抽取初值"""
    x0 = lo
    while not lo < x0 < hi:
        x0 = float(rng.uniform(lo, hi))
    return x0


def confinement_probe(kind: MapKind, trials: int, steps_per_trial: int, seed: int = 0,
                      dither: float = DEFAULT_DITHER,
                      seed_policy: str = "random-interior") -> ConfinementReport:
    """
    从随机内部初值运行多条独立轨道，统计未加噪声的映射值离开定义域的试验

    Args:
        kind: 映射种类（通常是带斜率误差的帐篷映射或 m 略大于 2 的广义映射）
        trials: 试验数
        steps_per_trial: 每条轨道的最大步数
        seed: 主种子，第 i 个试验使用 derive_seed(seed, i)
        dither: 抖动半宽
        seed_policy: 初值策略，目前只支持 "random-interior"
    """
    if trials < 1 or steps_per_trial < 1:
        raise InvalidParameterError("trials and steps_per_trial must be >= 1")
    if seed_policy != "random-interior":
        raise InvalidParameterError(f"unsupported seed policy: {seed_policy}")
    if not 0.0 <= dither < 1e-3:
        raise InvalidParameterError(f"dither must lie in [0, 1e-3), got {dither}")

    lo, hi = kind.domain
    gens = [dither_generator(derive_seed(seed, i)) for i in range(trials)]
    x = np.array([interior_start(g, lo, hi) for g in gens])
    for x0 in x.tolist():
        check_start(kind, x0)

    step = array_map_function(kind)
    escape_steps: List[Optional[int]] = [None] * trials
    idx = np.arange(trials)
    max_excursion = float(np.max(np.abs(x)))
    k = 0
    while k < steps_per_trial and idx.size:
        size = min(NOISE_CHUNK, steps_per_trial - k)
        noise = np.stack([g.uniform(-dither, dither, size) for g in gens], axis=1) if dither > 0.0 else None
        for j in range(size):
            y = step(x)
            y_min = float(y.min())
            y_max = float(y.max())
            max_excursion = max(max_excursion, abs(y_min), abs(y_max))
            if y_min < lo or y_max > hi:
                out = (y < lo) | (y > hi)
                for trial in idx[out].tolist():
                    escape_steps[trial] = k
                keep = ~out
                idx = idx[keep]
                y = y[keep]
                if not idx.size:
                    break
            if noise is not None:
                y = y + (noise[j] if idx.size == trials else noise[j, idx])
                if y.max() > hi:
                    y = np.where(y > hi, 2.0 * hi - y, y)
                if y.min() < lo:
                    y = np.where(y < lo, 2.0 * lo - y, y)
            x = y
            k += 1

    escapes = sum(s is not None for s in escape_steps)
    return ConfinementReport(kind, trials, steps_per_trial, escapes, tuple(escape_steps),
                             max_excursion, seed, float(dither))


def escape_frequencies(base: MapKind, slope_errors: Sequence[float], trials: int,
                       steps_per_trial: int, seed: int = 0,
                       dither: float = DEFAULT_DITHER) -> List[float]:
    """对一组斜率误差用相同种子做约束探测，返回逃逸频率"""
    rates = []
    for delta in slope_errors:
        kind = MapKind.perturbed(base, slope_error=delta)
        rates.append(confinement_probe(kind, trials, steps_per_trial, seed, dither).escape_rate)
    return rates
