"""Feature channels: intensity, color opponency and orientation energy.

The thirteen sub-channel maps (intensity, four opponency pairs, eight
orientation energies) are what the ownership stage consumes, each
decomposed into a pyramid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .filters import GaborParams, complex_response
from .grid import Pyramid, build_pyramid, as_map

N_ORIENTATIONS = 8
ORIENTATIONS = tuple(i * math.pi / N_ORIENTATIONS for i in range(N_ORIENTATIONS))


@dataclass(frozen=True)
class RGBImage:
    r: np.ndarray
    g: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        r = as_map(self.r, "r")
        g = as_map(self.g, "g")
        b = as_map(self.b, "b")
        if not (r.shape == g.shape == b.shape):
            raise ValueError("r, g, b must share dimensions")
        for name, ch in (("r", r), ("g", g), ("b", b)):
            if ch.min() < 0 or ch.max() > 1:
                raise ValueError(f"channel {name} must lie in [0, 1]")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "b", b)

    @property
    def shape(self):
        return self.r.shape

    @classmethod
    def from_gray(cls, gray) -> "RGBImage":
        gray = as_map(gray, "gray")
        return cls(r=gray.copy(), g=gray.copy(), b=gray.copy())


class Opponency(NamedTuple):
    rg: np.ndarray
    gr: np.ndarray
    by: np.ndarray
    yb: np.ndarray


def compute_intensity(image: RGBImage) -> np.ndarray:
    return (image.r + image.g + image.b) / 3.0


def compute_color_opponency(image: RGBImage) -> Opponency:
    """Rectified double-opponency maps RG, GR, BY, YB.

    r, g, b are first normalized by intensity wherever intensity exceeds
    a tenth of its image-wide maximum (zero elsewhere, which decouples
    hue from brightness while muting the unstable dark pixels), then
    combined into rectified broadly-tuned R, G, B, Y responses and
    finally into the four opponency differences.
    """
    intensity = compute_intensity(image)
    cutoff = 0.1 * intensity.max()
    safe = intensity > cutoff
    denom = np.where(safe, intensity, 1.0)
    r = np.where(safe, image.r / denom, 0.0)
    g = np.where(safe, image.g / denom, 0.0)
    b = np.where(safe, image.b / denom, 0.0)
    zero = np.zeros_like(r)
    red = np.maximum(zero, r - (g + b) / 2)
    green = np.maximum(zero, g - (r + b) / 2)
    blue = np.maximum(zero, b - (r + g) / 2)
    yellow = np.maximum(zero, (r + g) / 2 - np.abs(r - g) / 2 - b)
    return Opponency(
        rg=np.maximum(zero, red - green),
        gr=np.maximum(zero, green - red),
        by=np.maximum(zero, blue - yellow),
        yb=np.maximum(zero, yellow - blue),
    )


def compute_orientation_channels(intensity, base: GaborParams | None = None):
    """Complex-cell energy of the intensity map at the eight orientations."""
    if base is None:
        base = GaborParams(theta=0.0)
    return tuple(
        complex_response(intensity, replace(base, theta=theta)) for theta in ORIENTATIONS
    )


@dataclass(frozen=True)
class ChannelSet:
    intensity: np.ndarray
    opponency: Opponency
    orientation: tuple

    def __post_init__(self):
        maps = [self.intensity, *self.opponency, *self.orientation]
        if len(self.orientation) != N_ORIENTATIONS:
            raise ValueError(f"expected {N_ORIENTATIONS} orientation maps")
        shape = maps[0].shape
        for m in maps:
            if m.shape != shape:
                raise ValueError("channel maps must share dimensions")
            if m.min() < 0:
                raise ValueError("channel maps must be non-negative")


def compute_channels(image: RGBImage, gabor: GaborParams | None = None) -> ChannelSet:
    intensity = compute_intensity(image)
    return ChannelSet(
        intensity=intensity,
        opponency=compute_color_opponency(image),
        orientation=compute_orientation_channels(intensity, gabor),
    )


@dataclass(frozen=True)
class ChannelPyramids:
    intensity: Pyramid
    opponency: tuple  # four Pyramids, RG GR BY YB order
    orientation: tuple  # eight Pyramids

    @property
    def n_scales(self) -> int:
        return len(self.intensity)

    @property
    def native_shape(self):
        return self.intensity[0].shape


def build_channel_pyramids(
    channels: ChannelSet, n_scales: int, factor: float
) -> ChannelPyramids:
    return ChannelPyramids(
        intensity=build_pyramid(channels.intensity, n_scales, factor),
        opponency=tuple(build_pyramid(m, n_scales, factor) for m in channels.opponency),
        orientation=tuple(
            build_pyramid(m, n_scales, factor) for m in channels.orientation
        ),
    )
