"""Pixel-domain image handling.

Images are float arrays of shape (H, W, C) with values in [0, 1]. The 8-bit
boundary (PNG/JPEG files) is modelled in memory by :func:`quantize8`.
"""
from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image


class ImageDecodeError(ValueError):
    """Raised when bytes or a file cannot be decoded to an 8-bit image."""


@dataclass(frozen=True)
class PixelCodec:
    """File format used at the 8-bit boundary.

    ``format`` is ``"png"`` (lossless) or ``"jpeg"`` with ``quality`` in 1..100.
    """

    format: str = "png"
    quality: int = 95

    def __post_init__(self):
        if self.format not in ("png", "jpeg"):
            raise ValueError(f"unknown codec format {self.format!r}")
        if self.format == "jpeg" and not 1 <= self.quality <= 100:
            raise ValueError("JPEG quality must be in 1..100")


PNG = PixelCodec("png")


def as_image(arr) -> np.ndarray:
    """Return ``arr`` as a float64 (H, W, C) array; 2-D input gains a channel axis."""
    img = np.asarray(arr, dtype=np.float64)
    if img.ndim == 2:
        img = img[:, :, None]
    if img.ndim != 3 or img.shape[2] not in (1, 3):
        raise ValueError(f"expected (H, W, 1|3) image, got shape {img.shape}")
    return img


def to_bytes8(img: np.ndarray) -> np.ndarray:
    # round half away from zero; values are clamped first so floor(x + .5) suffices
    return np.floor(np.clip(img, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def quantize8(img: np.ndarray) -> np.ndarray:
    """Snap values to the 8-bit grid ``round(v * 255) / 255`` after clamping to [0, 1]."""
    return to_bytes8(as_image(img)) / 255.0


def _from_pil(pil: Image.Image) -> np.ndarray:
    if pil.mode in ("I;16", "I;16B", "I;16L", "I", "F"):
        raise ImageDecodeError(f"unsupported bit depth (mode {pil.mode})")
    if pil.mode == "L":
        data = np.asarray(pil, dtype=np.uint8)[:, :, None]
    else:
        data = np.asarray(pil.convert("RGB"), dtype=np.uint8)
    return data.astype(np.float64) / 255.0


def decode_image(data: bytes) -> np.ndarray:
    """Decode PNG/JPEG bytes into a [0, 1] image tensor."""
    try:
        with Image.open(io.BytesIO(data)) as pil:
            pil.load()
            return _from_pil(pil)
    except ImageDecodeError:
        raise
    except Exception as exc:  # PIL raises a zoo of exception types
        raise ImageDecodeError(f"cannot decode image: {exc}") from exc


def load_image(path) -> np.ndarray:
    """Load an 8-bit RGB or grayscale file; values are exactly ``byte / 255``."""
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise ImageDecodeError(f"cannot read {path}: {exc}") from exc
    return decode_image(data)


def _to_pil(img: np.ndarray) -> Image.Image:
    b = to_bytes8(as_image(img))
    if b.shape[2] == 1:
        return Image.fromarray(b[:, :, 0], mode="L")
    return Image.fromarray(b, mode="RGB")


def encode_image(img: np.ndarray, codec: PixelCodec = PNG) -> bytes:
    """Quantize to 8 bits and encode. JPEG uses 4:2:0 chroma subsampling."""
    buf = io.BytesIO()
    pil = _to_pil(img)
    if codec.format == "png":
        pil.save(buf, format="PNG", optimize=False, compress_level=6)
    else:
        pil.save(buf, format="JPEG", quality=codec.quality, subsampling=2, optimize=False)
    return buf.getvalue()


def save_image(img: np.ndarray, codec: PixelCodec, path) -> None:
    Path(path).write_bytes(encode_image(img, codec))


def codec_identifiers() -> dict:
    """Versions of the codec stack, recorded in run manifests."""
    from PIL import features

    return {
        "pillow": Image.__version__,
        "libjpeg": features.version("jpg"),
        "zlib": features.version("zlib"),
    }
