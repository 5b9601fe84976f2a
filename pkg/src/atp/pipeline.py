"""End-to-end protection: BDCT -> embed on M -> improved PGD on 1-M -> blend -> inverse."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .auth import as_message, embed, plan_embedding
from .bdct import BlockSpec, bdct_forward, bdct_inverse
from .imageio import as_image
from .masking import AtpKey, blend, complement, derive_mask
from .pgd import PgdConfig, improved_fd_pgd, surrogate_objective


@dataclass
class ProtectResult:
    """``image`` is the unclamped float-path output; ``quantized()`` is what gets saved."""

    image: np.ndarray
    mask: np.ndarray
    trace: list = field(default_factory=list)

    def clamped(self) -> np.ndarray:
        return np.clip(self.image, 0.0, 1.0)


def protect(img, key: AtpKey, message, epsilon: float = 0.05, alpha: float = 0.005,
            steps: int = 50, seed: int = 0, objective=None,
            record_trace: bool = False) -> ProtectResult:
    """Embed ``message`` in the authorization region and run protection PGD on the rest.

    ``objective`` defaults to the seeded surrogate objective with the clean
    image as reference.
    """
    img = as_image(img)
    spec = BlockSpec(key.N)
    spec.check(img.shape)
    bits = as_message(message, key.L)
    mask = derive_mask(key, img.shape)
    plan = plan_embedding(key, mask)
    c_auth = embed(bdct_forward(img, spec), bits, plan, key)
    if objective is None:
        objective = surrogate_objective(img, seed)
    cfg = PgdConfig(epsilon, alpha, steps, mask=complement(mask))
    trace = [] if record_trace else None
    per = improved_fd_pgd(bdct_inverse(c_auth, spec), objective, cfg, spec, trace=trace)
    out = bdct_inverse(blend(c_auth, bdct_forward(per, spec), mask), spec)
    return ProtectResult(out, mask, trace or [])
