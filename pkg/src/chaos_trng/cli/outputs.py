#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
输出格式 - 轨道 CSV、分岔图 CSV 与 PGM 灰度图

所有格式都只依赖输入数据，不含时间戳，相同输入逐字节相同。
"""

from typing import List

import numpy as np

from ..core.analysis import BifurcationDiagram, ColumnStatus
from ..core.errors import OutputError
from ..core.maps import OrbitResult


def format_real(x: float) -> str:
    """17 位有效数字的十进制表示"""
    return format(x, ".17g")


def format_orbit_csv(x0: float, orbit: OrbitResult) -> str:
    """
    轨道 CSV：表头 step,x，第 0 行是初值

    数值按 17 位有效数字输出，解析后与状态逐位相同；逃逸或吸收到 0 时追加一行注释。
    """
    lines: List[str] = ["step,x", f"0,{format_real(x0)}"]
    lines.extend(f"{k},{format_real(x)}" for k, x in enumerate(orbit.states.tolist(), start=1))
    if orbit.escaped_at is not None:
        lines.append(f"# escaped_at_step={orbit.escaped_at + 1}")
    if orbit.absorbed_at_zero is not None:
        lines.append(f"# absorbed_at_step={orbit.absorbed_at_zero + 1}")
    return "\n".join(lines) + "\n"


def format_bifurcation_csv(diagram: BifurcationDiagram) -> str:
    """长表 CSV：m,x_bin_center,count，只列出未逃逸列的非零计数"""
    lines = ["m,x_bin_center,count"]
    centers = diagram.x_centers.tolist()
    for i, m in enumerate(diagram.m_grid.tolist()):
        if diagram.status[i] is not ColumnStatus.OK:
            continue
        column = diagram.column(i)
        for row in np.flatnonzero(column).tolist():
            lines.append(f"{format_real(m)},{format_real(centers[row])},{int(column[row])}")
    return "\n".join(lines) + "\n"


def render_pgm(diagram: BifurcationDiagram, flagged_shade: int = 192) -> bytes:
    """
    8 位二进制 PGM（P5）：列对应 m，顶行对应 x = +1，越深表示访问越密

    每列按自身最大计数归一化；逃逸列和无效列整列填充 flagged_shade。
    """
    counts = diagram.density[::-1, :].astype(float)
    col_max = counts.max(axis=0)
    scale = np.where(col_max > 0, col_max, 1.0)
    pixels = 255.0 - np.rint(255.0 * counts / scale)
    for i, status in enumerate(diagram.status):
        if status is not ColumnStatus.OK:
            pixels[:, i] = flagged_shade
    height, width = pixels.shape
    header = f"P5\n{width} {height}\n255\n".encode("ascii")
    return header + pixels.astype(np.uint8).tobytes()


def write_text(path: str, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
    except OSError as e:
        raise OutputError(f"cannot write {path}: {e}") from e


def write_bytes(path: str, data: bytes) -> None:
    try:
        with open(path, "wb") as f:
            f.write(data)
    except OSError as e:
        raise OutputError(f"cannot write {path}: {e}") from e
