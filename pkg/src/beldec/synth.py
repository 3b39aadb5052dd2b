"""Deterministic synthetic texture imagettes.

Four generator families stand in for real seabed tiles: three learned
classes (fine bright "sand", darker smooth "silt", blobby high-contrast
"rock") and an unlearned oriented-ripple class ("ride").  Noise textures are
band-limited Gaussian fields with a class-specific correlation length, mean
and spread; the ripple is a sinusoid of fixed period plus optional noise.
Two-texture imagettes splice the left half of one class onto the right half
of another.

Everything is driven by one seeded generator consumed in a fixed order, so
a dataset is a pure function of its spec.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.ndimage import gaussian_filter

from .texture import Imagette

__all__ = [
    "TextureParams",
    "DatasetSpec",
    "GeneratedDataset",
    "render_texture",
    "render_split",
    "generate_dataset",
    "DEFAULT_TEXTURES",
]

TEXTURE_KINDS = ("noise", "ripple")


@dataclass(frozen=True)
class TextureParams:
    """One texture generator.

    kind "noise": correlated Gaussian field; ``std`` is the gray-level
    spread and ``corr_len`` the smoothing length in pixels.
    kind "ripple": ``amplitude`` * sine of the given period/orientation with
    a random phase, plus white noise of ``std``.
    """

    kind: str
    mean: float
    std: float
    corr_len: float = 2.0
    amplitude: float = 0.0
    period: float = 6.0
    orientation_deg: float = 0.0

    def __post_init__(self):
        if self.kind not in TEXTURE_KINDS:
            raise ValueError(f"kind must be one of {TEXTURE_KINDS}")
        if self.kind == "ripple" and self.amplitude <= 0.0:
            raise ValueError("a ripple texture needs a positive amplitude")


DEFAULT_TEXTURES: dict[str, TextureParams] = {
    "rock": TextureParams("noise", mean=128.0, std=52.0, corr_len=5.0),
    "sand": TextureParams("noise", mean=152.0, std=30.0, corr_len=1.4),
    "silt": TextureParams("noise", mean=118.0, std=26.0, corr_len=1.9),
    "ride": TextureParams(
        "ripple", mean=138.0, std=12.0, amplitude=42.0, period=6.0, orientation_deg=0.0
    ),
}


def render_texture(rng: np.random.Generator, params: TextureParams, side: int) -> np.ndarray:
    """One side x side uint8 tile of the texture."""
    if params.kind == "noise":
        white = rng.standard_normal((side, side))
        fld = gaussian_filter(white, sigma=params.corr_len, mode="wrap")
        sd = fld.std()
        fld = fld / sd if sd > 0 else fld * 0.0
        field = params.mean + params.std * fld
    else:
        phase = rng.uniform(0.0, 2.0 * math.pi)
        theta = math.radians(params.orientation_deg)
        rr, cc = np.indices((side, side), dtype=float)
        coord = cc * math.cos(theta) + rr * math.sin(theta)
        field = params.mean + params.amplitude * np.sin(
            2.0 * math.pi * coord / params.period + phase
        )
        if params.std > 0.0:
            field = field + params.std * rng.standard_normal((side, side))
    return np.clip(np.rint(field), 0, 255).astype(np.uint8)


def render_split(
    rng: np.random.Generator, left: TextureParams, right: TextureParams, side: int
) -> np.ndarray:
    """Two-texture tile: left half columns of one class, right of another."""
    a = render_texture(rng, left, side)
    b = render_texture(rng, right, side)
    out = a.copy()
    out[:, side // 2 :] = b[:, side // 2 :]
    return out


@dataclass(frozen=True)
class DatasetSpec:
    seed: int
    learned: tuple[str, ...]
    unlearned: str
    textures: Mapping[str, TextureParams]
    side: int = 32
    train_per_class: int = 200
    test_per_class: int = 100
    hetero_pairs: tuple[tuple[str, str], ...] = ()
    hetero_per_pair: int = 60

    def __post_init__(self):
        if self.unlearned in self.learned:
            raise ValueError("the unlearned class must not be trained on")
        names = set(self.learned) | {self.unlearned}
        for a, b in self.hetero_pairs:
            names.update((a, b))
        missing = sorted(names - set(self.textures))
        if missing:
            raise ValueError(f"no texture generator for: {missing}")
        if self.side < 4 or self.side % 2:
            raise ValueError("side must be an even number of pixels, at least 4")
        if min(self.train_per_class, self.test_per_class) < 1:
            raise ValueError("per-class counts must be positive")
        if self.hetero_pairs and self.hetero_per_pair < 1:
            raise ValueError("hetero_per_pair must be positive")


@dataclass
class GeneratedDataset:
    train: list[Imagette] = field(default_factory=list)
    test: list[Imagette] = field(default_factory=list)
    hetero: list[Imagette] = field(default_factory=list)

    def split(self, name: str) -> list[Imagette]:
        return getattr(self, name)


def generate_dataset(spec: DatasetSpec) -> GeneratedDataset:
    """Render every imagette of the spec, deterministically in the seed.

    Training covers the learned classes only; the test split adds the
    unlearned class; the hetero split holds the two-texture pairs.
    """
    rng = np.random.default_rng(spec.seed)
    ds = GeneratedDataset()
    for label in spec.learned:
        params = spec.textures[label]
        for k in range(spec.train_per_class):
            px = render_texture(rng, params, spec.side)
            ds.train.append(Imagette(px, id=f"train_{label}_{k:04d}", label=label))
    for label in (*spec.learned, spec.unlearned):
        params = spec.textures[label]
        for k in range(spec.test_per_class):
            px = render_texture(rng, params, spec.side)
            ds.test.append(Imagette(px, id=f"test_{label}_{k:04d}", label=label))
    for a, b in spec.hetero_pairs:
        label = f"{a}+{b}"
        for k in range(spec.hetero_per_pair):
            px = render_split(rng, spec.textures[a], spec.textures[b], spec.side)
            ds.hetero.append(Imagette(px, id=f"het_{a}+{b}_{k:04d}", label=label))
    return ds
