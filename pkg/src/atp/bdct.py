"""Block discrete cosine transform (orthonormal DCT-II on non-overlapping N x N blocks).

Coefficients are written back into the spatial slot of the block they came
from, so a coefficient tensor has exactly the shape of its image.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.fft import dctn, idctn


@dataclass(frozen=True)
class BlockSpec:
    N: int = 16

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("block size must be at least 2")

    def check(self, shape) -> None:
        h, w = shape[:2]
        if h % self.N or w % self.N:
            raise ValueError(f"image size {h}x{w} is not divisible by block size {self.N}")


def _spec(spec) -> BlockSpec:
    if spec is None:
        return BlockSpec()
    if isinstance(spec, int):
        return BlockSpec(spec)
    return spec


def _blocks(x: np.ndarray, n: int) -> np.ndarray:
    # (H, W, C) -> (H/n, n, W/n, n, C); axes 1 and 3 run inside a block
    h, w, c = x.shape
    return x.reshape(h // n, n, w // n, n, c)


def bdct_forward(img: np.ndarray, spec: BlockSpec | int | None = None) -> np.ndarray:
    """Forward BDCT of an (H, W, C) or (H, W) array."""
    spec = _spec(spec)
    x = np.asarray(img, dtype=np.float64)
    squeeze = x.ndim == 2
    if squeeze:
        x = x[:, :, None]
    spec.check(x.shape)
    out = dctn(_blocks(x, spec.N), type=2, axes=(1, 3), norm="ortho").reshape(x.shape)
    return out[:, :, 0] if squeeze else out


def bdct_inverse(coeffs: np.ndarray, spec: BlockSpec | int | None = None) -> np.ndarray:
    """Inverse BDCT. The output is not clamped."""
    spec = _spec(spec)
    x = np.asarray(coeffs, dtype=np.float64)
    squeeze = x.ndim == 2
    if squeeze:
        x = x[:, :, None]
    spec.check(x.shape)
    out = idctn(_blocks(x, spec.N), type=2, axes=(1, 3), norm="ortho").reshape(x.shape)
    return out[:, :, 0] if squeeze else out


def block_frequency_index(shape, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-position (u, v) frequency indices within the block layout of ``shape``."""
    h, w = shape[:2]
    u = np.tile(np.arange(n), h // n)
    v = np.tile(np.arange(n), w // n)
    return np.broadcast_to(u[:, None], (h, w)), np.broadcast_to(v[None, :], (h, w))


def pad_to_multiple(img: np.ndarray, n: int) -> np.ndarray:
    """Reflect-pad the bottom/right edges so height and width are multiples of ``n``."""
    h, w = img.shape[:2]
    ph, pw = -h % n, -w % n
    if not (ph or pw):
        return img
    pad = [(0, ph), (0, pw)] + [(0, 0)] * (img.ndim - 2)
    return np.pad(img, pad, mode="symmetric")
