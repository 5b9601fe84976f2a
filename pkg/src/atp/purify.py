"""Purification attacks a forger may apply to strip protection perturbations.

Every attack returns an 8-bit-quantized image: the attacker's output is an
image file, so the last step is always the byte boundary.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .bdct import bdct_forward, bdct_inverse
from .imageio import PixelCodec, as_image, decode_image, encode_image, quantize8
from .masking import AtpKey, derive_mask


@dataclass(frozen=True)
class Resize:
    """Bilinear downsample by ``factor`` then bilinear upsample to the original size."""

    factor: int = 2

    def __post_init__(self):
        if int(self.factor) != self.factor or self.factor < 1:
            raise ValueError("resize factor must be a positive integer")

    def apply(self, img, **_):
        h, w, _c = img.shape
        if self.factor == 1:
            return img
        small = ndimage.zoom(img, (1 / self.factor, 1 / self.factor, 1), order=1,
                             mode="nearest", grid_mode=True)
        zoom = (h / small.shape[0], w / small.shape[1], 1)
        return ndimage.zoom(small, zoom, order=1, mode="nearest", grid_mode=True)


@dataclass(frozen=True)
class Jpeg:
    quality: int = 50

    def __post_init__(self):
        if not 1 <= int(self.quality) <= 100:
            raise ValueError("JPEG quality must be in 1..100")

    def encode(self, img) -> bytes:
        return encode_image(img, PixelCodec("jpeg", int(self.quality)))

    def apply(self, img, **_):
        return decode_image(self.encode(img))


@dataclass(frozen=True)
class GaussianBlur:
    """3x3 Gaussian kernel, reflected borders."""

    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    def kernel(self) -> np.ndarray:
        t = np.exp(-np.arange(-1, 2) ** 2 / (2 * self.sigma**2))
        k = np.outer(t, t)
        return k / k.sum()

    def apply(self, img, **_):
        k = self.kernel()
        return np.stack([ndimage.correlate(img[:, :, c], k, mode="reflect")
                         for c in range(img.shape[2])], axis=2)


@dataclass(frozen=True)
class GaussianNoise:
    std: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.std < 0:
            raise ValueError("noise std must be non-negative")

    def apply(self, img, **_):
        if self.std == 0:
            return img
        rng = np.random.default_rng(self.seed)
        return img + rng.normal(0.0, self.std, size=img.shape)


@dataclass(frozen=True)
class FreqRound:
    """Round BDCT coefficients to multiples of ``step``.

    ``region`` is ``"all"`` or ``"mask-complement"``; the latter only rounds
    coefficients outside the authorization mask and needs the key (or an
    explicit mask). ``block`` is the attacker's block size.
    """

    step: float = 0.02
    region: str = "all"
    block: int = 16

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("rounding step must be positive")
        if self.region not in ("all", "mask-complement"):
            raise ValueError(f"unknown region {self.region!r}")

    def apply(self, img, key: AtpKey | None = None, mask=None):
        c = bdct_forward(img, self.block)
        rounded = self.step * np.floor(c / self.step + 0.5)
        if self.region == "all":
            c = rounded
        else:
            if mask is None:
                if key is None:
                    raise ValueError("mask-complement rounding needs the key or a mask")
                mask = derive_mask(key, img.shape)
            c = np.where(np.asarray(mask, dtype=bool), c, rounded)
        return bdct_inverse(c, self.block)


PurifySpec = Resize | Jpeg | GaussianBlur | GaussianNoise | FreqRound

KINDS = {
    "resize": Resize,
    "jpeg": Jpeg,
    "blur": GaussianBlur,
    "noise": GaussianNoise,
    "freq-round": FreqRound,
}


def purify(img: np.ndarray, spec: PurifySpec, key: AtpKey | None = None, mask=None) -> np.ndarray:
    """Apply one purification and return the attacker's 8-bit result."""
    img = as_image(img)
    return quantize8(spec.apply(img, key=key, mask=mask))


# Attacker rounding step for the adaptive settings: 4x the default protection
# radius, coarse enough to erase a +-epsilon perturbation. Steps that are small
# multiples of delta partly realign with the QIM lattice and understate the attack.
ADAPTIVE_STEP = 0.2


@dataclass(frozen=True)
class AttackerGuess:
    """What an adaptive attacker knows: the mask (or not) and the block size they use."""

    N: int
    mask: np.ndarray | None = None


def adaptive_attack(img: np.ndarray, setting: int, true_key: AtpKey,
                    attacker_guess: AttackerGuess, step: float | None = None) -> np.ndarray:
    """Frequency rounding by an attacker with partial (1, 2) or full (3) knowledge.

    1: correct mask, wrong block size; rounds the mask complement at ``guess.N``.
    2: correct block size, no mask; rounds every coefficient.
    3: correct mask and block size; rounds only the protection region.

    ``step`` defaults to :data:`ADAPTIVE_STEP`.
    """
    img = as_image(img)
    q = ADAPTIVE_STEP if step is None else step
    g = attacker_guess
    has_mask = g.mask is not None
    if has_mask and np.asarray(g.mask).shape != img.shape:
        raise ValueError("guessed mask does not match the image shape")
    if setting == 1:
        if not has_mask or g.N == true_key.N:
            raise ValueError("setting 1 needs the mask and a wrong block size")
        return purify(img, FreqRound(q, "mask-complement", g.N), mask=g.mask)
    if setting == 2:
        if has_mask or g.N != true_key.N:
            raise ValueError("setting 2 needs the right block size and no mask")
        return purify(img, FreqRound(q, "all", g.N))
    if setting == 3:
        if not has_mask or g.N != true_key.N:
            raise ValueError("setting 3 needs the mask and the right block size")
        return purify(img, FreqRound(q, "mask-complement", g.N), mask=g.mask)
    raise ValueError(f"unknown adaptive attack setting {setting!r}")
