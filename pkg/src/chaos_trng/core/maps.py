#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
映射模块 - 帐篷映射、伯努利映射、改进帐篷映射与斜率 m 广义映射族

提供闭式求值、断点列表（分段仿射）表示，以及带抖动噪声和逃逸检测的轨道迭代引擎。
所有求值函数都是纯函数；轨道迭代对同一 (kind, cfg) 逐位可复现。
"""

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Callable, Iterator, List, Optional, Tuple, Union

import numpy as np

from .errors import DomainError, InvalidParameterError

# 广义映射在 |m| <= 3 时保持状态有界
CONFINED_SLOPE_LIMIT = 3.0
MAX_DITHER = 1e-3
DEFAULT_DITHER = 2.0 ** -40
NOISE_CHUNK = 65536
SEED_LIMIT = 1 << 64

Interval = Tuple[float, float]


class MapFamily(str, Enum):
    """映射种类标签"""

    TENT = "tent"
    BERNOULLI = "bernoulli"
    MODIFIED_TENT = "modtent"
    GENERALIZED = "generalized"
    PERTURBED = "perturbed"


class EscapePolicy(str, Enum):
    """状态离开定义域时的处理方式"""

    HALT = "halt"
    EXTRAPOLATE = "extrapolate"


@dataclass(frozen=True)
class NonidealParams:
    """
    非理想实现参数

    Args:
        slope_error: 斜率乘性误差 Δ，每段斜率变为 slope·(1+Δ)
        offset: 输出加性误差
        saturation: 可选的输出钳位区间
    """

    slope_error: float = 0.0
    offset: float = 0.0
    saturation: Optional[Interval] = None

    def __post_init__(self) -> None:
        if not self.slope_error > -1.0:
            raise InvalidParameterError(f"slope_error must be > -1, got {self.slope_error}")
        if not math.isfinite(self.offset):
            raise InvalidParameterError(f"offset must be finite, got {self.offset}")
        if self.saturation is not None:
            lo, hi = self.saturation
            if not lo < hi:
                raise InvalidParameterError(f"saturation interval must satisfy lo < hi, got {self.saturation}")

    def clips(self, domain: Interval) -> bool:
        """钳位区间比定义域窄时返回 True"""
        if self.saturation is None:
            return False
        return self.saturation[0] > domain[0] or self.saturation[1] < domain[1]


@dataclass(frozen=True)
class MapKind:
    """
    映射种类

    ModifiedTent 与 Generalized(-2) 语义完全相同。广义映射默认要求 m ∈ (-3, 3)，
    只有设置 escape_study 时才接受范围外的斜率。
    """

    family: MapFamily
    m: Optional[float] = None
    base: Optional["MapKind"] = None
    nonideal: Optional[NonidealParams] = None
    escape_study: bool = False

    def __post_init__(self) -> None:
        if self.family is MapFamily.GENERALIZED:
            if self.m is None or not math.isfinite(self.m):
                raise InvalidParameterError(f"generalized map needs a finite slope m, got {self.m}")
            if self.m == 0:
                raise InvalidParameterError("slope parameter m must be non-zero")
            if not self.escape_study and not -CONFINED_SLOPE_LIMIT < self.m < CONFINED_SLOPE_LIMIT:
                raise InvalidParameterError(
                    f"m={self.m} is outside (-3, 3); enable escape_study to iterate non-confined maps"
                )
        elif self.family is MapFamily.PERTURBED:
            if self.base is None or self.nonideal is None:
                raise InvalidParameterError("perturbed map needs a base kind and non-ideal parameters")
        elif self.m is not None or self.base is not None or self.nonideal is not None:
            raise InvalidParameterError(f"{self.family.value} map takes no parameters")

    @classmethod
    def tent(cls) -> "MapKind":
        return cls(MapFamily.TENT)

    @classmethod
    def bernoulli(cls) -> "MapKind":
        return cls(MapFamily.BERNOULLI)

    @classmethod
    def modified_tent(cls) -> "MapKind":
        return cls(MapFamily.MODIFIED_TENT)

    @classmethod
    def generalized(cls, m: float, escape_study: bool = False) -> "MapKind":
        return cls(MapFamily.GENERALIZED, m=float(m), escape_study=escape_study)

    @classmethod
    def mirror_tent(cls) -> "MapKind":
        """m = +2 的镜像映射：x > 0 时与帐篷映射完全一致"""
        return cls.generalized(2.0)

    @classmethod
    def perturbed(cls, base: "MapKind", slope_error: float = 0.0, offset: float = 0.0,
                  saturation: Optional[Interval] = None, escape_study: bool = True) -> "MapKind":
        clamp = (float(saturation[0]), float(saturation[1])) if saturation is not None else None
        return cls(MapFamily.PERTURBED, base=base,
                   nonideal=NonidealParams(float(slope_error), float(offset), clamp),
                   escape_study=escape_study)

    @property
    def domain(self) -> Interval:
        if self.family is MapFamily.PERTURBED:
            assert self.base is not None
            return self.base.domain
        if self.family in (MapFamily.TENT, MapFamily.BERNOULLI):
            return (0.0, 1.0)
        return (-1.0, 1.0)

    @property
    def slope(self) -> Optional[float]:
        """广义映射族的斜率参数；其他种类返回 None"""
        if self.family is MapFamily.MODIFIED_TENT:
            return -2.0
        if self.family is MapFamily.GENERALIZED:
            return self.m
        return None

    @property
    def label(self) -> str:
        """命令行选择器形式的名称"""
        if self.family is MapFamily.GENERALIZED:
            return f"gen:{self.m!r}"
        if self.family is MapFamily.PERTURBED:
            assert self.base is not None and self.nonideal is not None
            parts = [self.base.label, f"slope_error={self.nonideal.slope_error!r}"]
            if self.nonideal.offset:
                parts.append(f"offset={self.nonideal.offset!r}")
            if self.nonideal.saturation is not None:
                parts.append(f"saturation={list(self.nonideal.saturation)}")
            return "+".join(parts)
        return self.family.value


# ===== 闭式求值 =====

def _require(x: float, domain: Interval, *, hi_open: bool = False) -> None:
    lo, hi = domain
    inside = lo <= x < hi if hi_open else lo <= x <= hi
    if not inside:
        raise DomainError(x, domain)


def eval_tent(x: float) -> float:
    """帐篷映射：x ≤ 1/2 时 2x，否则 2(1−x)"""
    _require(x, (0.0, 1.0))
    return 2.0 * x if x <= 0.5 else 2.0 * (1.0 - x)


def eval_bernoulli(x: float) -> float:
    """伯努利（倍增）映射 2x mod 1，定义域 [0, 1)"""
    _require(x, (0.0, 1.0), hi_open=True)
    return 2.0 * x if x < 0.5 else 2.0 * x - 1.0


def _generalized(m: float, x: float) -> float:
    edge = 1.0 / abs(m)
    reach = 2.0 / abs(m)
    if x <= -edge:
        y = -m * (x + reach)
    elif x >= edge:
        y = -m * (x - reach)
    else:
        y = m * x
    # |m| <= 3 时外端点可能因舍入越界一个 ulp
    if abs(m) <= CONFINED_SLOPE_LIMIT and -1.0 <= x <= 1.0:
        y = min(1.0, max(-1.0, y))
    return y


def eval_generalized(m: float, x: float) -> float:
    """
    斜率 m 的广义映射

    Args:
        m: 斜率参数，不能为 0
        x: 状态，-1 ≤ x ≤ 1

    Returns:
        外侧分支 −m(x ± 2/|m|)，中间分支 m·x
    """
    if m == 0 or not math.isfinite(m):
        raise InvalidParameterError(f"slope parameter m must be finite and non-zero, got {m}")
    _require(x, (-1.0, 1.0))
    return _generalized(m, x)


def eval_modified_tent(x: float) -> float:
    """改进帐篷映射，等同于 m = -2 的广义映射"""
    return eval_generalized(-2.0, x)


# ===== 分段仿射表示 =====

@dataclass(frozen=True)
class PiecewiseAffineMap:
    """
    断点列表表示

    第 i 段覆盖 [b_i, b_{i+1})，最后一段为闭区间。每段以锚点形式存储：
    y = anchor_y + slope·(x − anchor_x)，这样族内映射与闭式求值逐位一致。
    """

    breakpoints: Tuple[float, ...]
    slopes: Tuple[float, ...]
    anchors: Tuple[Tuple[float, float], ...]
    continuous: bool = True
    saturation: Optional[Interval] = None
    clipping: bool = False

    def __post_init__(self) -> None:
        bp = self.breakpoints
        if len(bp) < 2 or any(b >= c for b, c in zip(bp, bp[1:])):
            raise InvalidParameterError(f"breakpoints must be strictly increasing, got {bp}")
        if len(self.slopes) != len(bp) - 1 or len(self.anchors) != len(bp) - 1:
            raise InvalidParameterError("segment count must equal breakpoint count - 1")

    @property
    def domain(self) -> Interval:
        return (self.breakpoints[0], self.breakpoints[-1])

    @property
    def intercepts(self) -> Tuple[float, ...]:
        return tuple(ay - s * ax for s, (ax, ay) in zip(self.slopes, self.anchors))

    @property
    def segment_count(self) -> int:
        return len(self.slopes)

    def segment_index(self, x: float) -> int:
        """包含 x 的段（断点归右侧段，超出定义域时取外侧段）"""
        i = bisect_right(self.breakpoints, x) - 1
        return min(max(i, 0), self.segment_count - 1)

    def segment_value(self, i: int, x: float) -> float:
        ax, ay = self.anchors[i]
        y = ay + self.slopes[i] * (x - ax)
        if self.saturation is not None:
            y = min(self.saturation[1], max(self.saturation[0], y))
        return y

    def values_at_breakpoints(self) -> List[float]:
        return [self.segment_value(self.segment_index(b), b) for b in self.breakpoints]


def _segments_for_slope(m: float) -> PiecewiseAffineMap:
    edge = 1.0 / abs(m)
    reach = 2.0 / abs(m)
    if edge >= 1.0:
        return PiecewiseAffineMap((-1.0, 1.0), (m,), ((0.0, 0.0),))
    return PiecewiseAffineMap(
        (-1.0, -edge, edge, 1.0),
        (-m, m, -m),
        ((-reach, 0.0), (0.0, 0.0), (reach, 0.0)),
    )


@lru_cache(maxsize=256)
def build_piecewise(kind: MapKind) -> PiecewiseAffineMap:
    """
    构建映射的断点列表表示

    Args:
        kind: 映射种类

    Returns:
        与闭式求值在定义域内相差不超过一个 ulp 的分段仿射映射
    """
    family = kind.family
    if family is MapFamily.TENT:
        return PiecewiseAffineMap((0.0, 0.5, 1.0), (2.0, -2.0), ((0.0, 0.0), (1.0, 0.0)))
    if family is MapFamily.BERNOULLI:
        return PiecewiseAffineMap((0.0, 0.5, 1.0), (2.0, 2.0), ((0.0, 0.0), (0.5, 0.0)),
                                  continuous=False)
    if family is MapFamily.MODIFIED_TENT:
        # 在原点处额外分段：输出符号在此翻转
        return PiecewiseAffineMap(
            (-1.0, -0.5, 0.0, 0.5, 1.0),
            (2.0, -2.0, -2.0, 2.0),
            ((-1.0, 0.0), (0.0, 0.0), (0.0, 0.0), (1.0, 0.0)),
        )
    if family is MapFamily.GENERALIZED:
        assert kind.m is not None
        return _segments_for_slope(kind.m)

    assert kind.base is not None and kind.nonideal is not None
    base = build_piecewise(kind.base)
    params = kind.nonideal
    gain = 1.0 + params.slope_error
    slopes = []
    anchors = []
    for i, left in enumerate(base.breakpoints[:-1]):
        # 以段左端点的取值为支点缩放斜率，断点位置不变
        left_value = base.segment_value(i, left)
        slopes.append(base.slopes[i] * gain)
        anchors.append((left, left_value + params.offset))
    return PiecewiseAffineMap(
        base.breakpoints,
        tuple(slopes),
        tuple(anchors),
        continuous=base.continuous and params.slope_error == 0.0,
        saturation=params.saturation,
        clipping=params.clips(base.domain),
    )


def eval_piecewise(pmap: PiecewiseAffineMap, x: float, extrapolate: bool = False) -> float:
    """
    分段仿射求值

    Args:
        pmap: 分段仿射映射
        x: 状态
        extrapolate: 允许定义域外求值（外侧线段仿射延伸）
    """
    if not extrapolate:
        _require(x, pmap.domain)
    return pmap.segment_value(pmap.segment_index(x), x)


def evaluate(kind: MapKind, x: float) -> float:
    """按映射种类分派的带检查求值"""
    family = kind.family
    if family is MapFamily.TENT:
        return eval_tent(x)
    if family is MapFamily.BERNOULLI:
        return eval_bernoulli(x)
    if family is MapFamily.MODIFIED_TENT:
        return eval_modified_tent(x)
    if family is MapFamily.GENERALIZED:
        assert kind.m is not None
        return eval_generalized(kind.m, x)
    return eval_piecewise(build_piecewise(kind), x)


def derivative_magnitude(kind: MapKind, x: float) -> float:
    """
    |M'(x)|：包含 x 的段的斜率绝对值，断点处取左侧段

    Args:
        kind: 映射种类
        x: 定义域内的状态
    """
    pmap = build_piecewise(kind)
    _require(x, pmap.domain)
    i = min(max(bisect_left(pmap.breakpoints, x) - 1, 0), pmap.segment_count - 1)
    return abs(pmap.slopes[i])


def slope_magnitudes(kind: MapKind, states: np.ndarray) -> np.ndarray:
    """derivative_magnitude 的向量化版本（不做定义域检查）"""
    pmap = build_piecewise(kind)
    bp = np.asarray(pmap.breakpoints)
    idx = np.clip(np.searchsorted(bp, states, side="left") - 1, 0, pmap.segment_count - 1)
    return np.abs(np.asarray(pmap.slopes))[idx]


# ===== 单步函数（无检查，外侧线段延伸） =====

def _tent_step(x: float) -> float:
    return 2.0 * x if x <= 0.5 else 2.0 * (1.0 - x)


def _bernoulli_step(x: float) -> float:
    return 2.0 * x if x < 0.5 else 2.0 * x - 1.0


def map_function(kind: MapKind) -> Callable[[float], float]:
    """返回用于迭代的标量单步函数"""
    family = kind.family
    if family is MapFamily.TENT:
        return _tent_step
    if family is MapFamily.BERNOULLI:
        return _bernoulli_step
    if family in (MapFamily.MODIFIED_TENT, MapFamily.GENERALIZED):
        m = kind.slope
        assert m is not None
        return lambda x: _generalized(m, x)
    pmap = build_piecewise(kind)
    return lambda x: pmap.segment_value(pmap.segment_index(x), x)


def generalized_array(m: Union[float, np.ndarray], x: np.ndarray) -> np.ndarray:
    """广义映射的向量化求值，m 可以是逐元素斜率（分岔扫描用）"""
    m = np.asarray(m, dtype=float)
    edge = 1.0 / np.abs(m)
    reach = 2.0 / np.abs(m)
    y = np.where(x <= -edge, -m * (x + reach), np.where(x >= edge, -m * (x - reach), m * x))
    confined = (np.abs(m) <= CONFINED_SLOPE_LIMIT) & (np.abs(x) <= 1.0)
    return np.where(confined, np.clip(y, -1.0, 1.0), y)


def array_map_function(kind: MapKind) -> Callable[[np.ndarray], np.ndarray]:
    """map_function 的向量化版本（常数预先算好），与标量结果逐位一致"""
    family = kind.family
    if family is MapFamily.TENT:
        return lambda x: np.where(x <= 0.5, 2.0 * x, 2.0 * (1.0 - x))
    if family is MapFamily.BERNOULLI:
        return lambda x: np.where(x < 0.5, 2.0 * x, 2.0 * x - 1.0)
    if family in (MapFamily.MODIFIED_TENT, MapFamily.GENERALIZED):
        m = kind.slope
        assert m is not None
        edge = 1.0 / abs(m)
        reach = 2.0 / abs(m)
        confined = abs(m) <= CONFINED_SLOPE_LIMIT

        def step(x: np.ndarray) -> np.ndarray:
            y = np.where(x <= -edge, -m * (x + reach), np.where(x >= edge, -m * (x - reach), m * x))
            if confined:
                y = np.where(np.abs(x) <= 1.0, np.clip(y, -1.0, 1.0), y)
            return y

        return step

    pmap = build_piecewise(kind)
    bp = np.asarray(pmap.breakpoints)
    anchor_x = np.asarray([a[0] for a in pmap.anchors])
    anchor_y = np.asarray([a[1] for a in pmap.anchors])
    slopes = np.asarray(pmap.slopes)
    last = pmap.segment_count - 1

    def piecewise_step(x: np.ndarray) -> np.ndarray:
        idx = np.clip(np.searchsorted(bp, x, side="right") - 1, 0, last)
        y = anchor_y[idx] + slopes[idx] * (x - anchor_x[idx])
        if pmap.saturation is not None:
            y = np.clip(y, pmap.saturation[0], pmap.saturation[1])
        return y

    return piecewise_step


def evaluate_array(kind: MapKind, x: np.ndarray) -> np.ndarray:
    """无检查的向量化求值"""
    return array_map_function(kind)(np.asarray(x, dtype=float))


# ===== 轨道迭代 =====

@dataclass(frozen=True)
class OrbitConfig:
    """
    轨道配置

    Args:
        x0: 初始状态
        n_steps: 迭代步数
        dither_amplitude: 每步均匀加性噪声的半宽，0 ≤ a < 1e-3
        rng_seed: 64 位噪声种子
        escape_policy: 逃逸处理策略
    """

    x0: float
    n_steps: int
    dither_amplitude: float = DEFAULT_DITHER
    rng_seed: int = 0
    escape_policy: EscapePolicy = EscapePolicy.HALT

    def __post_init__(self) -> None:
        if not math.isfinite(self.x0):
            raise InvalidParameterError(f"x0 must be finite, got {self.x0}")
        if self.n_steps < 1:
            raise InvalidParameterError(f"n_steps must be >= 1, got {self.n_steps}")
        if not 0.0 <= self.dither_amplitude < MAX_DITHER:
            raise InvalidParameterError(
                f"dither_amplitude must lie in [0, {MAX_DITHER}), got {self.dither_amplitude}"
            )
        if not 0 <= self.rng_seed < SEED_LIMIT:
            raise InvalidParameterError(f"rng_seed must be a 64-bit unsigned integer, got {self.rng_seed}")


@dataclass(frozen=True)
class OrbitResult:
    """
    轨道结果：states[k] 是第 k+1 步的状态

    escaped_at 与 absorbed_at_zero 都是 states 的下标。
    """

    states: np.ndarray
    escaped_at: Optional[int] = None
    absorbed_at_zero: Optional[int] = None
    kind: Optional[MapKind] = None
    config: Optional[OrbitConfig] = field(default=None, compare=False)

    @property
    def escaped(self) -> bool:
        return self.escaped_at is not None

    def __len__(self) -> int:
        return len(self.states)


def dither_generator(seed: int) -> np.random.Generator:
    """抖动噪声所用的确定性生成器"""
    return np.random.Generator(np.random.PCG64(seed))


def noise_chunks(rng: np.random.Generator, amplitude: float, n: int,
                 chunk: int = NOISE_CHUNK) -> Iterator[np.ndarray]:
    """分块生成 Uniform(-a, a) 噪声；分块大小不影响序列内容"""
    remaining = n
    while remaining > 0:
        size = min(chunk, remaining)
        yield rng.uniform(-amplitude, amplitude, size)
        remaining -= size


def check_start(kind: MapKind, x0: float) -> None:
    """初始状态须位于定义域内部（逃逸研究除外）"""
    lo, hi = kind.domain
    if not kind.escape_study and not lo < x0 < hi:
        raise DomainError(x0, kind.domain, "x0")


def iterate_orbit(kind: MapKind, cfg: OrbitConfig) -> OrbitResult:
    """
    迭代 x_{k} = M(x_{k-1}) + ε_k

    抖动后越界的值按越过的边界反射回定义域；未加噪声的映射值离开定义域即记为逃逸，
    逃逸值原样记录，HALT 策略下在该步停止。无噪声时记录首次精确落到 0 的步。

    Args:
        kind: 映射种类
        cfg: 轨道配置

    Returns:
        OrbitResult
    """
    check_start(kind, cfg.x0)
    lo, hi = kind.domain
    step = map_function(kind)
    amplitude = cfg.dither_amplitude
    halt = cfg.escape_policy is EscapePolicy.HALT

    if amplitude > 0.0:
        chunks = noise_chunks(dither_generator(cfg.rng_seed), amplitude, cfg.n_steps)
    else:
        chunks = iter([np.zeros(min(cfg.n_steps, NOISE_CHUNK))] * -(-cfg.n_steps // NOISE_CHUNK))

    states: List[float] = []
    escaped_at: Optional[int] = None
    absorbed_at: Optional[int] = None
    x = cfg.x0
    k = 0
    done = False
    for chunk in chunks:
        for eps in chunk.tolist():
            if k >= cfg.n_steps:
                break
            y = step(x)
            inside = lo <= y <= hi
            if not inside and escaped_at is None:
                escaped_at = k
            if inside:
                y += eps
                if y > hi:
                    y = 2.0 * hi - y
                elif y < lo:
                    y = 2.0 * lo - y
            states.append(y)
            if (not inside and halt) or not math.isfinite(y):
                done = True
                break
            if absorbed_at is None and amplitude == 0.0 and y == 0.0:
                absorbed_at = k
            x = y
            k += 1
        if done:
            break

    arr = np.asarray(states, dtype=float)
    arr.setflags(write=False)
    return OrbitResult(arr, escaped_at, absorbed_at, kind, cfg)
