"""Secret keys, keyed Bernoulli masks and mask-guided blending.

All key-dependent randomness comes from SHAKE-256 keyed by the 32-byte secret
and a domain label, so masks, shuffles and dithers are reproducible from the
key alone and unpredictable without it.
"""
from __future__ import annotations

import hashlib
import json
import secrets
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

SECRET_BYTES = 32


@dataclass(frozen=True)
class AtpKey:
    """Secret material plus the public hyper-parameters it is used with.

    Attributes:
        secret: 32 random bytes.
        p: fraction of coefficients reserved for the authorization message.
        N: BDCT block size.
        L: message length in bits.
        delta: QIM lattice step in [0, 1] coefficient units.
    """

    secret: bytes = field(repr=False)
    p: float = 0.5
    N: int = 16
    L: int = 32
    delta: float = 0.02

    def __post_init__(self):
        if len(self.secret) != SECRET_BYTES:
            raise ValueError(f"secret must be {SECRET_BYTES} bytes")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("mask ratio p must lie in [0, 1]")
        if self.N < 2 or self.L < 1 or not self.delta > 0:
            raise ValueError("need N >= 2, L >= 1 and delta > 0")

    @classmethod
    def generate(cls, **params) -> "AtpKey":
        return cls(secrets.token_bytes(SECRET_BYTES), **params)

    @classmethod
    def from_seed(cls, seed: int, **params) -> "AtpKey":
        """Deterministic key for tests and reproducible experiments."""
        secret = hashlib.sha256(f"atp-test-key:{seed}".encode()).digest()
        return cls(secret, **params)

    def with_params(self, **params) -> "AtpKey":
        return replace(self, **params)

    @property
    def fingerprint(self) -> str:
        return hashlib.sha256(b"atp/fingerprint" + self.secret).hexdigest()[:16]

    def params(self) -> dict:
        d = asdict(self)
        del d["secret"]
        return d


def save_key(key: AtpKey, path) -> None:
    """Write the hex-encoded secret to ``path`` and parameters to ``path + '.json'``."""
    path = Path(path)
    path.write_text(key.secret.hex() + "\n")
    Path(str(path) + ".json").write_text(json.dumps(key.params(), indent=2) + "\n")


def load_key(path) -> AtpKey:
    """Read a key file (raw 32 bytes or 64 hex chars) and its optional JSON sidecar."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) == SECRET_BYTES:
        secret = raw
    else:
        try:
            secret = bytes.fromhex(raw.decode("ascii").strip())
        except (UnicodeDecodeError, ValueError) as exc:
            raise ValueError(f"{path}: not a hex or raw 32-byte secret") from exc
    sidecar = Path(str(path) + ".json")
    params = json.loads(sidecar.read_text()) if sidecar.exists() else {}
    unknown = set(params) - {"p", "N", "L", "delta"}
    if unknown:
        raise ValueError(f"{sidecar}: unknown key parameters {sorted(unknown)}")
    return AtpKey(secret, **params)


def prf_uint64(secret: bytes, label: str, shape, count: int) -> np.ndarray:
    """``count`` pseudorandom 64-bit words bound to (secret, label, shape)."""
    tag = f"atp/v1|{label}|{'x'.join(str(int(s)) for s in shape)}|".encode()
    stream = hashlib.shake_256(tag + secret).digest(8 * count)
    return np.frombuffer(stream, dtype="<u8")


def prf_uniform(secret: bytes, label: str, shape) -> np.ndarray:
    """Uniform [0, 1) floats of the given shape with 53-bit resolution."""
    n = int(np.prod(shape))
    words = prf_uint64(secret, label, shape, n)
    return ((words >> np.uint64(11)).astype(np.float64) * 2.0**-53).reshape(shape)


def derive_mask(key: AtpKey, shape) -> np.ndarray:
    """Bernoulli(key.p) mask over coefficient positions; 1 marks the authorization region."""
    shape = tuple(int(s) for s in shape)
    return (prf_uniform(key.secret, "mask", shape) < key.p).astype(np.uint8)


def complement(mask: np.ndarray) -> np.ndarray:
    return (1 - np.asarray(mask)).astype(np.uint8)


def blend(coeffs_auth: np.ndarray, coeffs_prot: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """``M * auth + (1 - M) * prot``, selecting entries rather than mixing them."""
    coeffs_auth = np.asarray(coeffs_auth)
    coeffs_prot = np.asarray(coeffs_prot)
    mask = np.asarray(mask)
    if not coeffs_auth.shape == coeffs_prot.shape == mask.shape:
        raise ValueError(
            f"shape mismatch: {coeffs_auth.shape}, {coeffs_prot.shape}, {mask.shape}"
        )
    return np.where(mask.astype(bool), coeffs_auth, coeffs_prot)
