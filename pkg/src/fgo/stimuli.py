"""Synthetic stimuli with exact figure-ground ground truth.

Every generator returns a :class:`Stimulus`: a grayscale image in
[0, 1], a signed ground-truth map (+1 marks the figure-side boundary
chain, -1 the chain of scored boundary pixels beside it, 0 elsewhere)
and, where the geometry defines them, contour/segmentation label maps
and the true junction locations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

MIN_SIZE = 32
_BOX = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True)
class Stimulus:
    image: np.ndarray
    signed: np.ndarray
    contours: np.ndarray | None = None
    segments: np.ndarray | None = None
    junctions: tuple = ()

    @property
    def shape(self):
        return self.image.shape


def _check_size(size: int) -> None:
    if size < MIN_SIZE:
        raise ValueError(f"stimulus size must be at least {MIN_SIZE}, got {size}")


def _rim(mask: np.ndarray) -> np.ndarray:
    """Cells of the mask with at least one 8-neighbor outside it."""
    return mask & ~ndimage.binary_erosion(mask, structure=_BOX)


def _paint_boundary(signed: np.ndarray, minus: np.ndarray, plus: np.ndarray) -> None:
    """Mark a boundary chain (-1) and its figure-side twin (+1)."""
    if (signed[minus] != 0).any() or (signed[plus] != 0).any() or (minus & plus).any():
        raise ValueError("boundary chains overlap; geometry too tight")
    signed[minus] = -1
    signed[plus] = 1


def isolated_square(
    size: int = 64,
    first: int = 20,
    last: int = 43,
    background: float = 0.25,
    foreground: float = 0.75,
) -> Stimulus:
    """A uniform square figure on a uniform ground."""
    _check_size(size)
    if not 0 < first < last < size - 1 or last - first < 4:
        raise ValueError(f"square [{first}, {last}] does not fit in {size} px")
    image = np.full((size, size), float(background))
    mask = np.zeros((size, size), dtype=bool)
    mask[first : last + 1, first : last + 1] = True
    image[mask] = foreground
    signed = np.zeros((size, size), dtype=np.int64)
    inner = ndimage.binary_erosion(mask, structure=_BOX)
    _paint_boundary(signed, _rim(mask), _rim(inner))
    return Stimulus(image=image, signed=signed)


def overlapping_squares(
    size: int = 96,
    a_first: int = 20,
    a_last: int = 60,
    b_first: int = 36,
    b_last: int = 76,
    a_gray: float = 0.35,
    b_gray: float = 0.85,
    background: float = 0.10,
    gradient: float = 0.0,
    gradient_extent: float | None = None,
) -> Stimulus:
    """Square B partially occluding square A, forming two T-junctions.

    The occluder may carry a vertical shading gradient (strongest at its
    top edge, fading over ``gradient_extent`` rows). Contour labels: 1 =
    A's visible boundary, 2 = B's boundary against the background, 3 =
    B's boundary across A. Segment labels: 1 = visible part of A, 2 = B,
    3 = background.
    """
    _check_size(size)
    if not (0 < a_first < b_first <= a_last < b_last < size - 1):
        raise ValueError(
            "need 0 < a_first < b_first <= a_last < b_last < size-1 for an overlap"
        )
    if gradient < 0:
        raise ValueError(f"gradient must be non-negative, got {gradient}")

    a_mask = np.zeros((size, size), dtype=bool)
    a_mask[a_first : a_last + 1, a_first : a_last + 1] = True
    b_mask = np.zeros((size, size), dtype=bool)
    b_mask[b_first : b_last + 1, b_first : b_last + 1] = True
    a_visible = a_mask & ~b_mask

    image = np.full((size, size), float(background))
    image[a_visible] = a_gray
    rows = np.arange(size, dtype=float)[:, None]
    extent = (b_last - b_first) / 2.0 if gradient_extent is None else gradient_extent
    shade = b_gray + gradient * np.maximum(0.0, 1.0 - (rows - b_first) / extent)
    image = np.where(b_mask, shade, image)
    image = np.clip(image, 0.0, 1.0)

    signed = np.zeros((size, size), dtype=np.int64)
    _paint_boundary(signed, _rim(b_mask), _rim(ndimage.binary_erosion(b_mask, _BOX)))
    a_inner = ndimage.binary_erosion(a_mask, structure=_BOX)
    _paint_boundary(signed, _rim(a_mask) & ~b_mask, _rim(a_inner) & ~b_mask)

    contours = np.zeros((size, size), dtype=np.int64)
    contours[_rim(a_mask) & ~b_mask] = 1
    contours[_rim(b_mask) & ~a_mask] = 2
    contours[_rim(b_mask) & a_mask] = 3
    segments = np.full((size, size), 3, dtype=np.int64)
    segments[a_visible] = 1
    segments[b_mask] = 2

    return Stimulus(
        image=image,
        signed=signed,
        contours=contours,
        segments=segments,
        junctions=((b_first, a_last), (a_last, b_first)),
    )


def shaded_edge(
    size: int = 64,
    edge_row: int | None = None,
    base: float = 0.4,
    gradient: float = 0.5,
    extent: float = 16.0,
    figure: str = "above",
    ground: float | None = None,
    ramp: str = "toward",
    texture_amp: float = 0.0,
    texture_period: float = 6.0,
) -> Stimulus:
    """A horizontal boundary whose figure side carries shading/texture.

    With ``ramp="toward"`` the figure side brightens by ``gradient``
    right at the boundary and fades back to ``base`` over ``extent``
    rows; ``ramp="away"`` starts at ``base`` on the boundary and
    brightens with distance instead. ``texture_amp`` superposes
    horizontal stripes of the given period on the figure side. The
    ground side is flat at ``ground`` (defaults to ``base``, so the
    boundary contrast then comes entirely from the figure structure).
    With zero gradient and texture and matching levels the image is
    constant. Label maps mark the boundary contour (1) and the two
    half-plane segments (figure 1, ground 2).
    """
    _check_size(size)
    row = size // 2 if edge_row is None else edge_row
    if not 4 <= row <= size - 4:
        raise ValueError(f"edge row {row} too close to the border for {size} px")
    if figure not in ("above", "below"):
        raise ValueError(f"figure must be 'above' or 'below', got {figure!r}")
    if ramp not in ("toward", "away"):
        raise ValueError(f"ramp must be 'toward' or 'away', got {ramp!r}")
    if extent <= 0 or texture_period <= 0:
        raise ValueError("extent and texture_period must be positive")
    ground_level = base if ground is None else ground

    rows = np.arange(size, dtype=float)
    if figure == "above":
        depth = (row - 1) - rows
        fig_mask = rows < row
    else:
        depth = rows - row
        fig_mask = rows >= row
    if ramp == "toward":
        shade = base + gradient * np.maximum(0.0, 1.0 - depth / extent)
    else:
        shade = base + gradient * np.minimum(np.maximum(depth, 0.0) / extent, 1.0)
    shade = shade + texture_amp * np.sin(2.0 * np.pi * rows / texture_period)
    column = np.where(fig_mask, shade, ground_level)
    image = np.clip(np.repeat(column[:, None], size, axis=1), 0.0, 1.0)

    signed = np.zeros((size, size), dtype=np.int64)
    boundary = row - 1 if figure == "above" else row
    inside = row - 2 if figure == "above" else row + 1
    signed[boundary, :] = -1
    signed[inside, :] = 1
    contours = np.zeros((size, size), dtype=np.int64)
    contours[boundary, :] = 1
    segments = np.where(fig_mask, 1, 2).astype(np.int64)[:, None]
    segments = np.repeat(segments, size, axis=1)
    return Stimulus(image=image, signed=signed, contours=contours, segments=segments)


def annulus(
    size: int = 64,
    r_outer: float | None = None,
    r_inner: float | None = None,
    ring: float = 0.75,
    background: float = 0.25,
) -> Stimulus:
    """A bright ring figure; ground truth covers its outer boundary."""
    _check_size(size)
    r_out = 0.32 * size if r_outer is None else float(r_outer)
    r_in = r_out - 8.0 if r_inner is None else float(r_inner)
    if not 2.0 <= r_in <= r_out - 3.0 or r_out > (size - 2) / 2.0:
        raise ValueError(
            f"need 2 <= r_inner <= r_outer - 3 and r_outer <= (size-2)/2, "
            f"got inner {r_in}, outer {r_out}"
        )
    center = (size - 1) / 2.0
    rr, cc = np.mgrid[0:size, 0:size]
    dist = np.hypot(rr - center, cc - center)
    mask = (dist <= r_out) & (dist >= r_in)
    image = np.where(mask, float(ring), float(background))

    outside = dist > r_out
    minus = mask & ndimage.binary_dilation(outside, structure=_BOX)
    plus = mask & ~minus & ndimage.binary_dilation(minus, structure=_BOX)
    signed = np.zeros((size, size), dtype=np.int64)
    _paint_boundary(signed, minus, plus)
    return Stimulus(image=image, signed=signed)


def junction_label_maps(angles_deg, size: int = 41, ray_len: int = 14):
    """Contour/segment maps of rays meeting at the center.

    One contour id per ray; segment ids fill the angular sectors between
    consecutive rays. Useful for exercising the junction classifier on
    T, Y, arrow and plus configurations.
    """
    center = size // 2
    contours = np.zeros((size, size), dtype=np.int64)
    for cid, deg in enumerate(angles_deg, start=1):
        phi = math.radians(deg)
        for t in range(1, ray_len + 1):
            r = center + int(round(t * math.sin(phi)))
            c = center + int(round(t * math.cos(phi)))
            if 0 <= r < size and 0 <= c < size:
                contours[r, c] = cid
    segments = np.zeros((size, size), dtype=np.int64)
    rr, cc = np.mgrid[0:size, 0:size]
    ang = np.degrees(np.arctan2(rr - center, cc - center)) % 360.0
    bounds = sorted(a % 360.0 for a in angles_deg)
    segments[:] = len(bounds)
    for rid in range(len(bounds) - 1):
        segments[(ang >= bounds[rid]) & (ang < bounds[rid + 1])] = rid + 1
    return contours, segments


GENERATORS = {
    "isolated-square": isolated_square,
    "overlapping-squares": overlapping_squares,
    "shaded-edge": shaded_edge,
    "annulus": annulus,
}


def generate(kind: str, **params) -> Stimulus:
    """Dispatch to a stimulus generator by its dashed name."""
    try:
        maker = GENERATORS[kind]
    except KeyError:
        known = ", ".join(sorted(GENERATORS))
        raise ValueError(f"unknown stimulus kind {kind!r} (known: {known})") from None
    return maker(**params)
