"""Per-imagette texture description.

Gray levels are quantized to q bins (level = floor(pixel * q / 256)), then
symmetric normalized co-occurrence matrices are counted at a fixed pixel
distance along the four directions 0/45/90/135 degrees, with the
displacement convention (drow, dcol):

    0 -> (0, +d)    45 -> (-d, +d)    90 -> (-d, 0)    135 -> (-d, -d)

Six features are computed per matrix and averaged over the directions:

* homogeneity   sum p / (1 + |i - j|)
* contrast      sum (i - j)^2 p
* entropy       -sum p ln p              (0 ln 0 = 0)
* correlation   sum (i - mu_i)(j - mu_j) p / (s_i s_j), 0 when any s = 0
* directivity   sum_i p(i, i)
* uniformity    sum p^2
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import ClassVar, Iterable, Sequence

import numpy as np

from .serial import fmt17

__all__ = [
    "Imagette",
    "FeatureVector",
    "quantize",
    "cooccurrence",
    "haralick_features",
    "haralick6",
    "imagette_features",
    "read_pgm",
    "write_pgm",
    "write_features_csv",
    "read_features_csv",
    "VALID_Q",
    "ANGLES",
]

VALID_Q = (4, 8, 16, 32)
ANGLES = (0, 45, 90, 135)
_STEP = {0: (0, 1), 45: (-1, 1), 90: (-1, 0), 135: (-1, -1)}


@dataclass(frozen=True)
class FeatureVector:
    homogeneity: float
    contrast: float
    entropy: float
    correlation: float
    directivity: float
    uniformity: float

    FIELDS: ClassVar[tuple[str, ...]] = (
        "homogeneity",
        "contrast",
        "entropy",
        "correlation",
        "directivity",
        "uniformity",
    )

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, f) for f in self.FIELDS], dtype=float)

    @classmethod
    def from_array(cls, values) -> "FeatureVector":
        values = [float(v) for v in values]
        if len(values) != len(cls.FIELDS):
            raise ValueError(f"expected {len(cls.FIELDS)} values")
        return cls(*values)


@dataclass
class Imagette:
    """A square 8-bit gray tile, the unit of classification."""

    pixels: np.ndarray
    id: str
    label: str | None = None

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2 or px.shape[0] != px.shape[1]:
            raise ValueError("imagette pixels must form a square 2D grid")
        if px.dtype != np.uint8:
            if not np.issubdtype(px.dtype, np.integer):
                raise ValueError("imagette pixels must be 8-bit integers")
            if px.min() < 0 or px.max() > 255:
                raise ValueError("imagette pixels must lie in 0..255")
            px = px.astype(np.uint8)
        self.pixels = px

    @property
    def side(self) -> int:
        return self.pixels.shape[0]


def quantize(pixels: np.ndarray, q: int) -> np.ndarray:
    """Map 8-bit gray values onto q levels: floor(pixel * q / 256)."""
    if q not in VALID_Q:
        raise ValueError(f"q must be one of {VALID_Q}")
    return (np.asarray(pixels, dtype=np.int64) * q) // 256


def cooccurrence(grid: np.ndarray, q: int, distance: int = 2, angle: int = 0) -> np.ndarray:
    """Symmetric normalized co-occurrence matrix of a quantized grid."""
    grid = np.asarray(grid, dtype=np.int64)
    if angle not in _STEP:
        raise ValueError(f"angle must be one of {ANGLES}")
    if distance < 1:
        raise ValueError("distance must be positive")
    if distance >= min(grid.shape):
        raise ValueError("distance larger than the image side")
    if grid.min() < 0 or grid.max() >= q:
        raise ValueError(f"grid levels must lie in 0..{q - 1}")
    dr, dc = (s * distance for s in _STEP[angle])
    h, w = grid.shape
    r0, r1 = max(0, -dr), min(h, h - dr)
    c0, c1 = max(0, -dc), min(w, w - dc)
    a = grid[r0:r1, c0:c1]
    b = grid[r0 + dr : r1 + dr, c0 + dc : c1 + dc]
    counts = np.bincount((a * q + b).ravel(), minlength=q * q).astype(float)
    mat = counts.reshape(q, q)
    mat = mat + mat.T
    total = mat.sum()
    if total == 0:
        raise ValueError("no pixel pair in range")
    return mat / total


def haralick_features(p: np.ndarray) -> FeatureVector:
    """The six features of one normalized co-occurrence matrix."""
    p = np.asarray(p, dtype=float)
    q = p.shape[0]
    idx = np.arange(q, dtype=float)
    i = idx[:, None]
    j = idx[None, :]
    homogeneity = float((p / (1.0 + np.abs(i - j))).sum())
    contrast = float(((i - j) ** 2 * p).sum())
    positive = p[p > 0]
    entropy = float(-(positive * np.log(positive)).sum())
    pi = p.sum(axis=1)
    pj = p.sum(axis=0)
    mu_i = float((idx * pi).sum())
    mu_j = float((idx * pj).sum())
    var_i = float(((idx - mu_i) ** 2 * pi).sum())
    var_j = float(((idx - mu_j) ** 2 * pj).sum())
    denom = math.sqrt(var_i) * math.sqrt(var_j)
    if denom > 0.0:
        correlation = float((((i - mu_i) * (j - mu_j) * p).sum()) / denom)
    else:
        correlation = 0.0
    directivity = float(np.trace(p))
    uniformity = float((p * p).sum())
    return FeatureVector(homogeneity, contrast, entropy, correlation, directivity, uniformity)


def haralick6(mats: Sequence[np.ndarray]) -> FeatureVector:
    """Arithmetic mean of the six features over the four direction matrices."""
    mats = list(mats)
    if len(mats) != 4:
        raise ValueError("expected the four direction matrices")
    shape = np.asarray(mats[0]).shape
    for m in mats[1:]:
        if np.asarray(m).shape != shape:
            raise ValueError("direction matrices have mismatched sizes")
    vecs = [haralick_features(m).as_array() for m in mats]
    return FeatureVector.from_array(np.mean(vecs, axis=0))


def imagette_features(img: Imagette, q: int = 16, distance: int = 2) -> FeatureVector:
    """Quantize, count the four direction matrices, and average the features."""
    grid = quantize(img.pixels, q)
    mats = [cooccurrence(grid, q, distance, angle) for angle in ANGLES]
    return haralick6(mats)


# -- binary PGM (P5), 8-bit ---------------------------------------------


def write_pgm(path, pixels: np.ndarray) -> None:
    pixels = np.asarray(pixels)
    if pixels.dtype != np.uint8 or pixels.ndim != 2:
        raise ValueError("PGM output needs a 2D uint8 array")
    h, w = pixels.shape
    header = f"P5\n{w} {h}\n255\n".encode("ascii")
    Path(path).write_bytes(header + pixels.tobytes())


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if not data.startswith(b"P5"):
        raise ValueError(f"{path}: not a binary PGM (P5) file")
    fields = []
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError(f"{path}: truncated PGM header")
        fields.append(int(data[start:pos]))
    pos += 1  # the single whitespace byte before the raster
    w, h, maxval = fields
    if maxval != 255:
        raise ValueError(f"{path}: only 8-bit PGM (maxval 255) is supported")
    raster = data[pos : pos + w * h]
    if len(raster) != w * h:
        raise ValueError(f"{path}: truncated PGM raster")
    return np.frombuffer(raster, dtype=np.uint8).reshape(h, w).copy()


# -- feature CSV ---------------------------------------------------------

_FEATURES_HEADER = "id,label," + ",".join(FeatureVector.FIELDS)


def write_features_csv(path, rows: Iterable[tuple[str, str | None, FeatureVector]]) -> None:
    """Rows of ``id,label,<six features>`` with 17-significant-digit reals."""
    lines = [_FEATURES_HEADER]
    for obs_id, label, fv in rows:
        cells = [obs_id, label or ""]
        cells.extend(fmt17(getattr(fv, f)) for f in FeatureVector.FIELDS)
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_features_csv(path) -> list[tuple[str, str | None, FeatureVector]]:
    text = Path(path).read_text(encoding="ascii")
    lines = [ln for ln in text.splitlines() if ln]
    if not lines or lines[0] != _FEATURES_HEADER:
        raise ValueError(f"{path}: bad features CSV header")
    out = []
    for ln in lines[1:]:
        cells = ln.split(",")
        if len(cells) != 2 + len(FeatureVector.FIELDS):
            raise ValueError(f"{path}: bad features CSV row {ln!r}")
        fv = FeatureVector.from_array([float(c) for c in cells[2:]])
        out.append((cells[0], cells[1] or None, fv))
    return out
