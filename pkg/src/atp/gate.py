"""Service-provider verification gate and protection success rate."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .auth import EmbeddingPlan, as_message, bit_error, extract, message_to_hex, plan_embedding
from .bdct import bdct_forward, pad_to_multiple
from .imageio import as_image
from .masking import AtpKey, derive_mask

DEFAULT_THRESHOLD = 3 / 32
# CLIP-IQAC cut-off below which a generated image counts as degraded
QUALITY_THRESHOLD = 0.1318359375
SCHEMA = "atp.verify/1"


@dataclass(frozen=True)
class VerifyReport:
    bit_error: float
    threshold: float
    authorized: bool
    message_extracted: np.ndarray | None = field(default=None, compare=False)
    reason: str | None = None

    def to_json(self) -> dict:
        d = {
            "bit_error": self.bit_error,
            "threshold": self.threshold,
            "authorized": self.authorized,
            "message_hex": None if self.message_extracted is None else message_to_hex(self.message_extracted),
        }
        if self.reason is not None:
            d["reason"] = self.reason
        return d


@dataclass(frozen=True)
class RequestVerdict:
    images: list
    accepted: bool

    def to_json(self) -> dict:
        return {
            "schema": SCHEMA,
            "accepted": self.accepted,
            "images": [r.to_json() for r in self.images],
        }


def rejected(reason: str, threshold: float = DEFAULT_THRESHOLD) -> VerifyReport:
    """Report for input that could not be checked; unauthorized by policy."""
    return VerifyReport(1.0, threshold, False, None, reason)


@lru_cache(maxsize=64)
def _plan(key: AtpKey, shape: tuple) -> EmbeddingPlan:
    plan = plan_embedding(key, derive_mask(key, shape))
    plan.positions.setflags(write=False)
    plan.dither.setflags(write=False)
    return plan


def _check_threshold(threshold):
    if not 0.0 <= threshold < 1.0:
        raise ValueError("threshold must lie in [0, 1)")


def verify_image(img, key: AtpKey, expected, threshold: float = DEFAULT_THRESHOLD,
                 pad: bool = False) -> VerifyReport:
    """Extract the message from ``img`` and compare it with ``expected``.

    Malformed input (wrong layout, size not divisible by the block size
    unless ``pad``) is reported as unauthorized instead of raising.
    """
    _check_threshold(threshold)
    expected = as_message(expected, key.L)
    try:
        img = as_image(img)
    except ValueError as exc:
        return rejected(str(exc), threshold)
    if pad:
        img = pad_to_multiple(img, key.N)
    h, w = img.shape[:2]
    if h % key.N or w % key.N:
        return rejected(f"image size {h}x{w} is not divisible by block size {key.N}", threshold)
    try:
        plan = _plan(key, img.shape)
    except ValueError as exc:
        return rejected(str(exc), threshold)
    got = extract(bdct_forward(img, key.N), plan, key)
    err = bit_error(got, expected)
    return VerifyReport(err, threshold, err <= threshold, got)


def verify_request(imgs, key: AtpKey, expected, threshold: float = DEFAULT_THRESHOLD,
                   pad: bool = False) -> RequestVerdict:
    """Accept a generation request only if every submitted image is authorized.

    Entries of ``imgs`` that are already :class:`VerifyReport` objects (for
    example, decode failures) are passed through unchanged.
    """
    imgs = list(imgs)
    if not imgs:
        raise ValueError("a request needs at least one image")
    reports = [
        im if isinstance(im, VerifyReport) else verify_image(im, key, expected, threshold, pad)
        for im in imgs
    ]
    return RequestVerdict(reports, all(r.authorized for r in reports))


def psr(verdicts, quality_scores=None, quality_threshold: float = QUALITY_THRESHOLD) -> float:
    """Fraction of requests that were rejected or, if scores are given, produced degraded output."""
    verdicts = list(verdicts)
    if quality_scores is not None and len(quality_scores) != len(verdicts):
        raise ValueError("one quality score per request is required")
    if not verdicts:
        raise ValueError("no requests to score")
    protected = 0
    for i, v in enumerate(verdicts):
        if not v.accepted or (quality_scores is not None and quality_scores[i] < quality_threshold):
            protected += 1
    return protected / len(verdicts)
