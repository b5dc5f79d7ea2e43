"""Serialization of scans, solves and histograms: CSV, plain PGM and JSON metadata."""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .inequalities import VIOLATION_TOL, ViolationMap

__all__ = [
    "SCAN_HEADER",
    "Channel",
    "ScanResult",
    "fmt",
    "scan_result",
    "scan_csv",
    "write_scan_csv",
    "pgm_pixels",
    "pgm_text",
    "write_pgm",
]

SCAN_HEADER = ("theta2_deg", "theta3_deg", "bell_margin", "wigner1_margin",
               "wigner2_margin", "feasible", "t_lo", "t_hi")

_VIOLATED, _BOUNDARY, _SATISFIED = 0, 128, 255


class Channel(str, enum.Enum):
    BELL = "bell"
    WIGNER1 = "wigner1"
    WIGNER2 = "wigner2"
    UNION_CHECK = "union_check"


def fmt(x) -> str:
    """12 significant digits; ``-0`` prints as ``0`` so reruns stay byte-identical."""
    x = float(x)
    if x == 0:
        x = 0.0
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.12g}"


@dataclass(frozen=True)
class ScanResult:
    metadata: dict
    rows: list[tuple]

    def __post_init__(self):
        for row in self.rows:
            if row[5] not in (0, 1):
                raise ValueError("feasible must be 0 or 1")
            if row[5] == 1 and not row[6] <= row[7] + 1e-12:
                raise ValueError("feasible rows need t_lo <= t_hi")


def scan_result(vm: ViolationMap, version: str) -> ScanResult:
    """Flatten a map in row-major order (``theta2`` outer, ``theta3`` inner)."""
    degrees = np.degrees(vm.thetas)
    feasible = vm.feasible
    rows = []
    for i in range(vm.size):
        for j in range(vm.size):
            rows.append((degrees[i], degrees[j], vm.bell_margin[i, j], vm.wigner1_margin[i, j],
                         vm.wigner2_margin[i, j], int(feasible[i, j]), vm.t_lo[i, j], vm.t_hi[i, j]))
    metadata = {
        "step_deg": float(np.degrees(vm.theta_step)),
        "grid_size": vm.size,
        "convention": vm.convention.value,
        "correlation": vm.correlation.value,
        "theta1_deg": 0.0,
        "version": version,
    }
    return ScanResult(metadata, rows)


def scan_csv(sr: ScanResult) -> str:
    lines = [",".join(SCAN_HEADER)]
    for row in sr.rows:
        cells = [fmt(v) for v in row]
        cells[5] = str(row[5])
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def write_scan_csv(sr: ScanResult, path) -> Path:
    """Write the CSV and a ``<path>.meta.json`` sidecar; returns the sidecar path."""
    path = Path(path)
    path.write_text(scan_csv(sr), encoding="utf-8")
    meta = path.with_name(path.name + ".meta.json")
    meta.write_text(json.dumps(sr.metadata, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return meta


def _shade(margin: np.ndarray, tol: float) -> np.ndarray:
    out = np.full(margin.shape, _SATISFIED, dtype=np.int64)
    out[margin < -tol] = _VIOLATED
    out[np.abs(margin) <= tol] = _BOUNDARY
    return out


def pgm_pixels(vm: ViolationMap, channel: Channel | str, tol: float = VIOLATION_TOL) -> np.ndarray:
    """Grey levels, rows indexed by ``theta2`` and columns by ``theta3``."""
    channel = Channel(channel)
    if channel is Channel.UNION_CHECK:
        return np.where(vm.union_disagreement(tol), _VIOLATED, _SATISFIED)
    margin = {
        Channel.BELL: vm.bell_margin,
        Channel.WIGNER1: vm.wigner1_margin,
        Channel.WIGNER2: vm.wigner2_margin,
    }[channel]
    return _shade(margin, tol)


def pgm_text(pixels: np.ndarray) -> str:
    height, width = pixels.shape
    lines = ["P2", f"{width} {height}", "255"]
    lines.extend(" ".join(str(int(v)) for v in row) for row in pixels)
    return "\n".join(lines) + "\n"


def write_pgm(vm: ViolationMap, channel: Channel | str, path) -> None:
    Path(path).write_text(pgm_text(pgm_pixels(vm, channel)), encoding="ascii")
