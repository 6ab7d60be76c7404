"""Dense 2D grid primitives shared by every stage of the model.

All maps are float64 numpy arrays indexed ``[row, col]``. One geometric
convention is used throughout the package: ``x`` is the column axis
(rightward), ``y`` is the row axis (downward), and an angle ``a`` denotes
the unit direction ``(dx, dy) = (cos a, sin a)``. So ``a = 0`` points
right and ``a = pi/2`` points down the rows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage, signal

SQRT2 = math.sqrt(2.0)


def as_map(values, name: str = "map") -> np.ndarray:
    """Coerce to a finite 2D float64 array, raising ValueError otherwise."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty 2D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def correlate2d(input_map, kernel) -> np.ndarray:
    """Correlate a map with an odd-sized kernel, replicating edge values.

    Output matches the input dimensions. The kernel is anchored at its
    center cell, so ``out[r, c] = sum_{u,v} kernel[u, v] *
    padded[r + u, c + v]`` with the pad width equal to the kernel
    half-size on every border.
    """
    arr = as_map(input_map, "input")
    k = as_map(kernel, "kernel")
    kh, kw = k.shape
    if kh % 2 == 0 or kw % 2 == 0:
        raise ValueError(f"kernel dimensions must be odd, got {k.shape}")
    if kh >= arr.shape[0] or kw >= arr.shape[1]:
        raise ValueError(
            f"kernel {k.shape} must be smaller than input {arr.shape} in both axes"
        )
    padded = np.pad(arr, ((kh // 2, kh // 2), (kw // 2, kw // 2)), mode="edge")
    # correlation == convolution with the kernel flipped in both axes
    return signal.convolve(padded, k[::-1, ::-1], mode="valid", method="auto")


def _sample_coords(n_out: int, n_in: int) -> np.ndarray:
    # Corner-aligned mapping: output corners land on input corners. A
    # single-cell output samples the center of the source axis.
    if n_out == 1:
        return np.array([(n_in - 1) / 2.0])
    return np.arange(n_out) * ((n_in - 1) / (n_out - 1))


def resample(input_map, rows: int, cols: int) -> np.ndarray:
    """Bilinearly resample a map to ``rows x cols`` (corner-aligned)."""
    arr = as_map(input_map, "input")
    if rows < 1 or cols < 1:
        raise ValueError(f"target dimensions must be positive, got {rows}x{cols}")
    if (rows, cols) == arr.shape:
        return arr.copy()
    ry = _sample_coords(rows, arr.shape[0])
    cx = _sample_coords(cols, arr.shape[1])
    r0 = np.minimum(np.floor(ry).astype(int), arr.shape[0] - 1)
    c0 = np.minimum(np.floor(cx).astype(int), arr.shape[1] - 1)
    r1 = np.minimum(r0 + 1, arr.shape[0] - 1)
    c1 = np.minimum(c0 + 1, arr.shape[1] - 1)
    fy = (ry - r0)[:, None]
    fx = (cx - c0)[None, :]
    top = arr[np.ix_(r0, c0)] * (1 - fx) + arr[np.ix_(r0, c1)] * fx
    bot = arr[np.ix_(r1, c0)] * (1 - fx) + arr[np.ix_(r1, c1)] * fx
    return top * (1 - fy) + bot * fy


def rescale_to_range(input_map, upper: float = 1.0) -> np.ndarray:
    """Affinely rescale to [0, upper]; a flat map comes back all zeros."""
    arr = as_map(input_map, "input")
    if upper <= 0:
        raise ValueError(f"upper bound must be positive, got {upper}")
    lo = arr.min()
    hi = arr.max()
    if hi == lo:
        return np.zeros_like(arr)
    return (arr - lo) * (upper / (hi - lo))


@dataclass(frozen=True)
class NormalizationParams:
    """Controls the within-map competition normalization."""

    upper: float = 1.0
    local_max_window: int = 3
    plateau_tolerance: float = 1e-9

    def __post_init__(self):
        if self.upper <= 0:
            raise ValueError(f"upper must be positive, got {self.upper}")
        w = self.local_max_window
        if w < 3 or w % 2 == 0:
            raise ValueError(f"local_max_window must be odd and >= 3, got {w}")
        if not 0 <= self.plateau_tolerance < 1:
            raise ValueError(
                f"plateau_tolerance must be in [0, 1), got {self.plateau_tolerance}"
            )


def normalize_map(input_map, params: NormalizationParams = NormalizationParams()) -> np.ndarray:
    """Promote maps with one dominant peak over maps with many rivals.

    The map is rescaled to [0, upper]; strict local maxima (positive, and
    greater than every neighbor in the window, windows clipped at the
    border) are collected, the global maximum is dropped, and the map is
    multiplied by ``(upper - mean_of_remaining_maxima)^2``.
    """
    scaled = rescale_to_range(input_map, params.upper)
    w = params.local_max_window
    footprint = np.ones((w, w), dtype=bool)
    footprint[w // 2, w // 2] = False
    neighbor_max = ndimage.maximum_filter(
        scaled, footprint=footprint, mode="constant", cval=-np.inf
    )
    peaks = scaled[(scaled > neighbor_max) & (scaled > 0)]
    rivals = peaks[peaks < params.upper]
    mean_rival = rivals.mean() if rivals.size else 0.0
    return scaled * (params.upper - mean_rival) ** 2


def cross_scale_sum(levels, rows: int, cols: int) -> np.ndarray:
    """Resample every level to ``rows x cols`` and add them in order."""
    if not levels:
        raise ValueError("cross_scale_sum needs at least one level")
    total = np.zeros((rows, cols))
    for level in levels:
        total += resample(level, rows, cols)
    return total


@dataclass(frozen=True)
class Pyramid:
    """An image pyramid, level index 0 finest (the native map)."""

    levels: tuple
    factor: float

    def __post_init__(self):
        if not self.levels:
            raise ValueError("pyramid needs at least one level")
        if not (
            math.isclose(self.factor, SQRT2, rel_tol=1e-9)
            or math.isclose(self.factor, 2.0, rel_tol=1e-9)
        ):
            raise ValueError(f"pyramid factor must be sqrt(2) or 2, got {self.factor}")

    def __len__(self) -> int:
        return len(self.levels)

    def __getitem__(self, k: int) -> np.ndarray:
        return self.levels[k]

    def __iter__(self):
        return iter(self.levels)

    @property
    def dims(self):
        return [lvl.shape for lvl in self.levels]


def next_level_dims(rows: int, cols: int, factor: float):
    return math.ceil(rows / factor), math.ceil(cols / factor)


def build_pyramid(base, n_scales: int, factor: float = SQRT2) -> Pyramid:
    """Decompose a map into ``n_scales`` levels by repeated downsampling."""
    arr = as_map(base, "base")
    if n_scales < 1:
        raise ValueError(f"n_scales must be >= 1, got {n_scales}")
    levels = [arr]
    for _ in range(n_scales - 1):
        rows, cols = next_level_dims(*levels[-1].shape, factor)
        if rows < 1 or cols < 1:
            raise ValueError(
                f"pyramid level would collapse below 1x1 (n_scales={n_scales})"
            )
        levels.append(resample(levels[-1], rows, cols))
    return Pyramid(levels=tuple(levels), factor=factor)
