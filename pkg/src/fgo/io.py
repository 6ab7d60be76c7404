"""Readers and writers for the small set of on-disk formats.

Float maps travel as ``FM1`` text (header ``FM1 <rows> <cols>`` followed
by whitespace-separated reals), label maps as ``LM1`` with integers, and
signed ground-truth maps reuse the LM1 container with values -1/0/+1.
Images come in as PPM (P6 or P3) and visualizations go out as PGM (P5).
"""

from __future__ import annotations

import numpy as np


def write_fm1(path, values) -> None:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"FM1 maps must be 2D, got shape {arr.shape}")
    with open(path, "w") as fh:
        fh.write(f"FM1 {arr.shape[0]} {arr.shape[1]}\n")
        for row in arr:
            fh.write(" ".join(f"{v:.17g}" for v in row))
            fh.write("\n")


def read_fm1(path) -> np.ndarray:
    with open(path) as fh:
        tokens = fh.read().split()
    if len(tokens) < 3 or tokens[0] != "FM1":
        raise ValueError(f"{path}: not an FM1 file")
    rows, cols = int(tokens[1]), int(tokens[2])
    data = tokens[3:]
    if len(data) != rows * cols:
        raise ValueError(f"{path}: expected {rows * cols} values, found {len(data)}")
    arr = np.array([float(t) for t in data]).reshape(rows, cols)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{path}: non-finite values")
    return arr


def write_lm1(path, values) -> None:
    arr = np.asarray(values)
    if arr.ndim != 2 or not np.issubdtype(arr.dtype, np.integer):
        raise ValueError("LM1 maps must be 2D integer arrays")
    with open(path, "w") as fh:
        fh.write(f"LM1 {arr.shape[0]} {arr.shape[1]}\n")
        for row in arr:
            fh.write(" ".join(str(int(v)) for v in row))
            fh.write("\n")


def read_lm1(path, allow_negative: bool = False) -> np.ndarray:
    with open(path) as fh:
        tokens = fh.read().split()
    if len(tokens) < 3 or tokens[0] != "LM1":
        raise ValueError(f"{path}: not an LM1 file")
    rows, cols = int(tokens[1]), int(tokens[2])
    data = tokens[3:]
    if len(data) != rows * cols:
        raise ValueError(f"{path}: expected {rows * cols} values, found {len(data)}")
    arr = np.array([int(t) for t in data], dtype=np.int64).reshape(rows, cols)
    if not allow_negative and arr.min() < 0:
        raise ValueError(f"{path}: negative labels not allowed here")
    return arr


def read_signed_map(path) -> np.ndarray:
    """LM1-style map restricted to values -1, 0 and +1."""
    arr = read_lm1(path, allow_negative=True)
    if not np.isin(arr, (-1, 0, 1)).all():
        raise ValueError(f"{path}: signed maps may only hold -1, 0, +1")
    return arr


def _pnm_tokens(blob: bytes, count: int):
    """First ``count`` header tokens of a PNM file, skipping # comments.

    Returns the tokens and the offset one byte past the final token's
    trailing whitespace (where P6 raster data begins).
    """
    tokens = []
    i = 0
    while len(tokens) < count:
        if i >= len(blob):
            raise ValueError("truncated PNM header")
        ch = blob[i : i + 1]
        if ch.isspace():
            i += 1
        elif ch == b"#":
            while i < len(blob) and blob[i : i + 1] != b"\n":
                i += 1
        else:
            j = i
            while j < len(blob) and not blob[j : j + 1].isspace():
                j += 1
            tokens.append(blob[i:j].decode("ascii"))
            i = j
    return tokens, i + 1


def read_ppm(path):
    """Read a P6 or P3 PPM into (r, g, b) float64 maps scaled to [0, 1]."""
    with open(path, "rb") as fh:
        blob = fh.read()
    magic = blob[:2].decode("ascii", errors="replace")
    if magic not in ("P6", "P3"):
        raise ValueError(f"{path}: unsupported PPM magic {magic!r}")
    (_, w, h, maxval), offset = _pnm_tokens(blob, 4)
    width, height, maxval = int(w), int(h), int(maxval)
    if width < 1 or height < 1 or not 0 < maxval < 256:
        raise ValueError(f"{path}: bad PPM header ({width}x{height}, maxval {maxval})")
    n = width * height * 3
    if magic == "P6":
        raster = np.frombuffer(blob, dtype=np.uint8, count=n, offset=offset)
        if raster.size < n:
            raise ValueError(f"{path}: truncated PPM raster")
    else:
        tokens = blob[offset - 1 :].split()
        if len(tokens) < n:
            raise ValueError(f"{path}: truncated PPM raster")
        raster = np.array([int(t) for t in tokens[:n]], dtype=np.int64)
        if raster.min() < 0 or raster.max() > maxval:
            raise ValueError(f"{path}: sample out of range")
    rgb = raster.reshape(height, width, 3).astype(np.float64) / maxval
    return rgb[:, :, 0], rgb[:, :, 1], rgb[:, :, 2]


def write_ppm(path, r, g, b) -> None:
    """Write three [0, 1] maps as a binary P6 PPM."""
    stack = np.stack([np.asarray(c, dtype=np.float64) for c in (r, g, b)], axis=-1)
    if stack.ndim != 3 or stack.shape[2] != 3:
        raise ValueError("write_ppm expects three 2D maps")
    if stack.min() < 0 or stack.max() > 1:
        raise ValueError("PPM channel values must lie in [0, 1]")
    data = np.rint(stack * 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P6\n{stack.shape[1]} {stack.shape[0]}\n255\n".encode("ascii"))
        fh.write(data.tobytes())


def write_pgm(path, gray) -> None:
    """Write a uint8 map as a binary P5 PGM."""
    arr = np.asarray(gray)
    if arr.ndim != 2:
        raise ValueError("write_pgm expects a 2D map")
    data = arr.astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{arr.shape[1]} {arr.shape[0]}\n255\n".encode("ascii"))
        fh.write(data.tobytes())


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:2] != b"P5":
        raise ValueError(f"{path}: unsupported PGM magic")
    (_, w, h, maxval), offset = _pnm_tokens(blob, 4)
    width, height = int(w), int(h)
    raster = np.frombuffer(blob, dtype=np.uint8, count=width * height, offset=offset)
    if raster.size < width * height:
        raise ValueError(f"{path}: truncated PGM raster")
    return raster.reshape(height, width).copy()
