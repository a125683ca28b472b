"""Array geometry constructors, constraint checks and the geometry text format."""

from __future__ import annotations

import io
import math
import os
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .channel import ArrayGeometry, element_positions
from .exceptions import BadShape, InfeasibleSpacing

__all__ = [
    "RegionSpec",
    "Violation",
    "BENCHMARK_KINDS",
    "default_d_min",
    "subarray_offsets",
    "init_uniform_grid",
    "init_subregion_grid",
    "benchmark_geometry",
    "validate",
    "format_geometry",
    "parse_geometry",
    "save_geometry",
    "load_geometry",
]

BENCHMARK_KINDS = (
    "dense_upa",
    "sparse_upa",
    "h_sparse_upa",
    "v_sparse_upa",
    "h_sparse_ula",
    "v_sparse_ula",
)


@dataclass(frozen=True)
class RegionSpec:
    """Square moving region of side ``side_A`` with minimum center spacing ``d_min``."""

    side_A: float
    d_min: float = 0.0

    def __post_init__(self):
        if not self.side_A > 0:
            raise ValueError("side_A must be positive")
        if not self.d_min >= 0:
            raise ValueError("d_min must be non-negative")

    @property
    def half(self) -> float:
        return self.side_A / 2


class Violation(NamedTuple):
    kind: str  # "region" or "spacing"
    indices: tuple
    magnitude: float


def default_d_min(wavelength: float, nx: int = 1, ny: int = 1) -> float:
    return wavelength / 2 * max(nx, ny)


def subarray_offsets(nx: int, ny: int, wavelength: float) -> np.ndarray:
    """Element offsets of an ``nx`` x ``ny`` half-wavelength UPA centered on the origin.

    Elements are ordered with x varying fastest.
    """
    if nx < 1 or ny < 1:
        raise BadShape("subarray dimensions must be positive")
    d = wavelength / 2
    xs = (np.arange(nx) - (nx - 1) / 2) * d
    ys = (np.arange(ny) - (ny - 1) / 2) * d
    gx, gy = np.meshgrid(xs, ys)
    return np.column_stack([gx.ravel(), gy.ravel()])


def _centered_grid(M: int, side: float, d_min: float) -> np.ndarray:
    cols = math.isqrt(M - 1) + 1 if M > 1 else 1
    spacing = side / cols
    if M > 1 and spacing < d_min:
        raise InfeasibleSpacing(
            f"grid spacing {spacing:.6g} m is below d_min={d_min:.6g} m for M={M}")
    coords = (np.arange(cols) - (cols - 1) / 2) * spacing
    gx, gy = np.meshgrid(coords, coords)
    return np.column_stack([gx.ravel(), gy.ravel()])[:M]


def init_uniform_grid(M: int, region: RegionSpec, offsets=None) -> ArrayGeometry:
    """Spread ``M`` subarray centers on a centered ``ceil(sqrt(M))``-column grid."""
    return init_subregion_grid(M, region, 1.0, offsets)


def init_subregion_grid(M: int, region: RegionSpec, scale: float = 0.5,
                        offsets=None) -> ArrayGeometry:
    """Uniform grid restricted to a centered square of side ``scale * A``."""
    if M < 1:
        raise BadShape("M must be positive")
    if not 0 < scale <= 1:
        raise ValueError("scale must be in (0, 1]")
    centers = _centered_grid(M, scale * region.side_A, region.d_min)
    if offsets is None:
        offsets = np.zeros((1, 2))
    return ArrayGeometry(centers, offsets, region.half, region.d_min)


def benchmark_geometry(kind: str, MN: int, region: RegionSpec,
                       wavelength: float) -> ArrayGeometry:
    """Fixed-position benchmark arrays with ``MN`` single-element subarrays.

    UPA kinds are ``sqrt(MN)`` x ``sqrt(MN)`` with either half-wavelength or
    ``A / sqrt(MN)`` spacing per dimension; ULA kinds place ``MN`` elements at
    spacing ``A / MN`` along one axis. All arrays are centered on the origin.
    """
    A = region.side_A
    if kind in ("dense_upa", "sparse_upa", "h_sparse_upa", "v_sparse_upa"):
        n = math.isqrt(MN)
        if MN < 1 or n * n != MN:
            raise BadShape(f"{kind} needs a perfect-square element count, got {MN}")
        dense, sparse = wavelength / 2, A / n
        dx = sparse if kind in ("sparse_upa", "h_sparse_upa") else dense
        dy = sparse if kind in ("sparse_upa", "v_sparse_upa") else dense
        idx = np.arange(n) - (n - 1) / 2
        gx, gy = np.meshgrid(idx * dx, idx * dy)
        centers = np.column_stack([gx.ravel(), gy.ravel()])
    elif kind in ("h_sparse_ula", "v_sparse_ula"):
        if MN < 1:
            raise BadShape("MN must be positive")
        line = (np.arange(MN) - (MN - 1) / 2) * (A / MN)
        zeros = np.zeros(MN)
        centers = np.column_stack([line, zeros] if kind == "h_sparse_ula" else [zeros, line])
    else:
        raise BadShape(f"unknown benchmark kind {kind!r}")
    return ArrayGeometry(centers, np.zeros((1, 2)), region.half, 0.0)


def validate(geom: ArrayGeometry, region: RegionSpec | None = None) -> list[Violation]:
    """List region and spacing violations; empty when the geometry is feasible."""
    half = geom.region_half if region is None else region.half
    d_min = geom.d_min if region is None else region.d_min
    out = []
    excess = np.abs(geom.centers) - half
    for m, ax in zip(*np.nonzero(excess > 0)):
        out.append(Violation("region", (int(m), int(ax)), float(excess[m, ax])))
    if geom.M > 1 and d_min > 0:
        diff = geom.centers[:, None, :] - geom.centers[None, :, :]
        dist = np.hypot(diff[..., 0], diff[..., 1])
        i, j = np.triu_indices(geom.M, k=1)
        bad = dist[i, j] < d_min
        for a, b, d in zip(i[bad], j[bad], dist[i, j][bad]):
            out.append(Violation("spacing", (int(a), int(b)), float(d_min - d)))
    return out


def _fmt(v: float) -> str:
    return repr(float(v))


def format_geometry(geom: ArrayGeometry) -> str:
    """Render the element table ``m n x y`` (1-based indices) with a small header."""
    lines = [
        f"# region_half {_fmt(geom.region_half)}",
        f"# d_min {_fmt(geom.d_min)}",
    ]
    for n, (qx, qy) in enumerate(geom.offsets, start=1):
        lines.append(f"# offset {n} {_fmt(qx)} {_fmt(qy)}")
    lines.append("m n x y")
    pos = element_positions(geom)
    for e, (x, y, _) in enumerate(pos):
        m, n = divmod(e, geom.N)
        lines.append(f"{m + 1} {n + 1} {_fmt(x)} {_fmt(y)}")
    return "\n".join(lines) + "\n"


def parse_geometry(text: str) -> ArrayGeometry:
    """Inverse of :func:`format_geometry`.

    Header lines are optional. Without ``# offset`` lines the offsets are
    recovered relative to the mean position of each subarray's elements.
    """
    region_half, d_min = np.inf, 0.0
    offsets = {}
    rows = []
    for raw in io.StringIO(text):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if parts and parts[0] == "region_half":
                region_half = float(parts[1])
            elif parts and parts[0] == "d_min":
                d_min = float(parts[1])
            elif parts and parts[0] == "offset":
                offsets[int(parts[1])] = (float(parts[2]), float(parts[3]))
            continue
        parts = line.split()
        if parts[0] == "m":
            continue
        if len(parts) != 4:
            raise ValueError(f"bad geometry line: {line!r}")
        rows.append((int(parts[0]), int(parts[1]), float(parts[2]), float(parts[3])))
    if not rows:
        raise ValueError("geometry table is empty")
    rows.sort(key=lambda r: (r[0], r[1]))
    M = max(r[0] for r in rows)
    N = max(r[1] for r in rows)
    if len(rows) != M * N:
        raise BadShape(f"expected {M * N} element rows, found {len(rows)}")
    pos = np.array([[r[2], r[3]] for r in rows]).reshape(M, N, 2)
    if offsets:
        q = np.array([offsets[n] for n in range(1, N + 1)])
        centers = pos[:, 0, :] - q[0]
    else:
        centers = pos.mean(axis=1)
        q = pos[0] - centers[0]
    return ArrayGeometry(centers, q, region_half, d_min)


def save_geometry(geom: ArrayGeometry, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_geometry(geom))


def load_geometry(path: str | os.PathLike) -> ArrayGeometry:
    with open(path, encoding="utf-8") as fh:
        return parse_geometry(fh.read())
