"""Deterministic synthetic test images.

Each image mixes a 1/f (natural-image-like) random field, a smooth colour
gradient and a few hard-edged shapes, kept away from 0 and 1 so that
perturbations are rarely clipped.
"""
from __future__ import annotations

import numpy as np


def _pink_field(rng, h, w, beta=2.0):
    fy = np.fft.fftfreq(h)[:, None]
    fx = np.fft.rfftfreq(w)[None, :]
    f = np.sqrt(fx**2 + fy**2)
    f[0, 0] = 1.0
    spec = (rng.normal(size=f.shape) + 1j * rng.normal(size=f.shape)) / f ** (beta / 2)
    spec[0, 0] = 0.0
    field = np.fft.irfft2(spec, s=(h, w))
    return field / (field.std() + 1e-12)


def synthetic_image(seed: int, size: int = 128, channels: int = 3) -> np.ndarray:
    rng = np.random.default_rng(seed)
    h = w = size
    yy, xx = np.mgrid[0:h, 0:w] / size
    lum = 0.12 * _pink_field(rng, h, w)
    lum += 0.15 * (rng.uniform(-1, 1) * xx + rng.uniform(-1, 1) * yy)
    for _ in range(rng.integers(2, 6)):
        cy, cx, r = rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0.05, 0.3)
        inside = (yy - cy) ** 2 + (xx - cx) ** 2 < r**2
        lum += rng.uniform(-0.15, 0.15) * inside
    img = np.empty((h, w, channels))
    base = rng.uniform(0.35, 0.65, size=channels)
    for c in range(channels):
        img[:, :, c] = base[c] + lum + 0.04 * _pink_field(rng, h, w)
    return np.clip(img, 0.05, 0.95)


def synthetic_corpus(n: int, size: int = 128, channels: int = 3, seed: int = 0) -> list:
    return [synthetic_image(seed * 100003 + i, size, channels) for i in range(n)]
