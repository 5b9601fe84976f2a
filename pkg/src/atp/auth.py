"""Authorization perturbation: a keyed, dithered QIM embedder on masked coefficients.

Every masked coefficient carries one vote for one message bit. Embedding
snaps the coefficient onto one of two interleaved lattices of step ``delta``;
extraction classifies each coefficient by its nearest lattice and takes a
majority vote per bit. Unmasked coefficients are never read or written.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .masking import AtpKey, prf_uint64


@dataclass(frozen=True)
class EmbeddingPlan:
    """Assignment of masked coefficient positions to message bits.

    Attributes:
        shape: coefficient tensor shape the plan was built for.
        positions: (L, R) flat indices into the coefficient tensor.
        dither: (L, R) lattice offsets in units of ``delta``, each 0 or 0.5.
        fingerprint: fingerprint of the key the plan belongs to.
    """

    shape: tuple
    positions: np.ndarray
    dither: np.ndarray
    fingerprint: str

    @property
    def redundancy(self) -> int:
        return self.positions.shape[1]

    @property
    def length(self) -> int:
        return self.positions.shape[0]


def plan_embedding(key: AtpKey, mask: np.ndarray) -> EmbeddingPlan:
    """Keyed shuffle of the mask's 1-positions, split into ``key.L`` equal groups.

    The ``n_masked mod L`` leftover positions stay unembedded.
    """
    mask = np.asarray(mask)
    masked = np.flatnonzero(mask)
    L = key.L
    if masked.size < L:
        raise ValueError(f"mask has {masked.size} positions, fewer than L={L}")
    r = masked.size // L
    order = np.argsort(prf_uint64(key.secret, "shuffle", mask.shape, masked.size), kind="stable")
    positions = masked[order[: r * L]].reshape(L, r)
    dither_bits = prf_uint64(key.secret, "dither", mask.shape, mask.size) & np.uint64(1)
    dither = 0.5 * dither_bits[positions].astype(np.float64)
    return EmbeddingPlan(tuple(mask.shape), positions, dither, key.fingerprint)


def _check(coeffs: np.ndarray, plan: EmbeddingPlan, key: AtpKey) -> None:
    if tuple(coeffs.shape) != plan.shape:
        raise ValueError(f"coefficient shape {coeffs.shape} does not match plan {plan.shape}")
    if plan.fingerprint != key.fingerprint:
        raise ValueError("embedding plan was built for a different key")


def _round(x):
    return np.floor(x + 0.5)


def embed(coeffs: np.ndarray, msg, plan: EmbeddingPlan, key: AtpKey) -> np.ndarray:
    """Write ``msg`` into the planned coefficients; everything else is copied bit-exactly."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    _check(coeffs, plan, key)
    bits = as_message(msg, plan.length)
    delta = key.delta
    d = np.mod(plan.dither + 0.5 * bits[:, None], 1.0)
    out = coeffs.copy()
    flat = out.reshape(-1)
    c = flat[plan.positions]
    flat[plan.positions] = delta * (_round(c / delta - d) + d)
    return out


def decode_votes(coeffs: np.ndarray, plan: EmbeddingPlan, key: AtpKey) -> np.ndarray:
    """Per-coefficient bit decisions, shape (L, R)."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    _check(coeffs, plan, key)
    x = coeffs.reshape(-1)[plan.positions] / key.delta
    dist = []
    for b in (0.0, 0.5):
        y = x - np.mod(plan.dither + b, 1.0)
        dist.append(np.abs(y - _round(y)))
    return (dist[1] < dist[0]).astype(np.uint8)


def extract(coeffs: np.ndarray, plan: EmbeddingPlan, key: AtpKey) -> np.ndarray:
    """Majority vote over each bit's group; ties decode as 0."""
    votes = decode_votes(coeffs, plan, key)
    ones = votes.sum(axis=1, dtype=np.int64)
    return (2 * ones > votes.shape[1]).astype(np.uint8)


def bit_error(a, b) -> float:
    a = np.asarray(a, dtype=np.uint8).ravel()
    b = np.asarray(b, dtype=np.uint8).ravel()
    if a.shape != b.shape:
        raise ValueError(f"message length mismatch: {a.size} vs {b.size}")
    return float(np.count_nonzero(a != b)) / a.size


def as_message(msg, length: int | None = None) -> np.ndarray:
    """Coerce a bit sequence or hex string to a uint8 bit array."""
    if isinstance(msg, str):
        msg = message_from_hex(msg)
    bits = np.asarray(msg, dtype=np.int64).ravel()
    if np.any((bits != 0) & (bits != 1)):
        raise ValueError("message bits must be 0 or 1")
    if length is not None and bits.size != length:
        raise ValueError(f"message has {bits.size} bits, expected {length}")
    return bits.astype(np.uint8)


def message_from_hex(text: str) -> np.ndarray:
    """MSB-first bits of a hex string, e.g. ``'deadbeef'`` -> 32 bits."""
    text = text.strip().lower().removeprefix("0x")
    try:
        raw = bytes.fromhex(text)
    except ValueError as exc:
        raise ValueError(f"not a hex message: {text!r}") from exc
    return np.unpackbits(np.frombuffer(raw, dtype=np.uint8))


def message_to_hex(bits) -> str:
    bits = as_message(bits)
    if bits.size % 8:
        bits = np.concatenate([bits, np.zeros(8 - bits.size % 8, np.uint8)])
    return np.packbits(bits).tobytes().hex()


def random_message(rng: np.random.Generator, length: int = 32) -> np.ndarray:
    return rng.integers(0, 2, size=length, dtype=np.uint8)
