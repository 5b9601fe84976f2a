"""Diagnostics: change rates, spectral variance maps, sensitivity sweeps,
the mask-containment simulation and mask-ratio / block-size sweeps."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .auth import random_message
from .bdct import BlockSpec, bdct_forward, bdct_inverse, block_frequency_index
from .gate import verify_image
from .imageio import as_image, quantize8, to_bytes8
from .masking import AtpKey
from .pgd import FunctionObjective, PgdConfig, baseline_fd_pgd, improved_fd_pgd
from .pipeline import protect
from .purify import KINDS, purify

FREQ_TOL = 1e-6
CONTAINMENT_TOL = 1e-9


@dataclass(frozen=True)
class ChangeRateReport:
    domain: str
    rate: float
    tolerance: float
    changed: int
    total: int


def change_rate(before, after, domain: str = "pixel", spec=16, tol: float = FREQ_TOL) -> ChangeRateReport:
    """Fraction of entries that differ between two images.

    Pixel domain compares 8-bit values exactly; frequency domain compares
    BDCT coefficients with absolute tolerance ``tol``.
    """
    before, after = as_image(before), as_image(after)
    if before.shape != after.shape:
        raise ValueError(f"shape mismatch: {before.shape} vs {after.shape}")
    if domain == "pixel":
        changed = np.count_nonzero(to_bytes8(before) != to_bytes8(after))
        tol = 0.0
    elif domain == "frequency":
        d = bdct_forward(after, spec) - bdct_forward(before, spec)
        changed = np.count_nonzero(np.abs(d) > tol)
    else:
        raise ValueError(f"unknown domain {domain!r}")
    return ChangeRateReport(domain, changed / before.size, tol, int(changed), before.size)


def spectral_variance_map(pairs, spec=16) -> np.ndarray:
    """N x N map of the variance of coefficient differences at each in-block frequency.

    Variance is pooled over every block, channel and image pair, then
    normalized so the largest cell is 1 (an all-zero map stays zero).
    """
    pairs = list(pairs)
    if not pairs:
        raise ValueError("need at least one (before, after) pair")
    n = spec if isinstance(spec, int) else spec.N
    cells = []
    for before, after in pairs:
        before, after = as_image(before), as_image(after)
        if before.shape != after.shape:
            raise ValueError(f"shape mismatch: {before.shape} vs {after.shape}")
        d = bdct_forward(after, n) - bdct_forward(before, n)
        h, w, c = d.shape
        cells.append(d.reshape(h // n, n, w // n, n, c).transpose(1, 3, 0, 2, 4).reshape(n, n, -1))
    var = np.concatenate(cells, axis=2).var(axis=2)
    top = var.max()
    return var / top if top > 0 else var


def band_means(vmap: np.ndarray) -> tuple[float, float]:
    """Mean of the map over the lowest and highest quartile of cells ranked by u + v."""
    n = vmap.shape[0]
    u, v = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    order = np.argsort((u + v).ravel(), kind="stable")
    q = order.size // 4
    flat = vmap.ravel()
    return float(flat[order[:q]].mean()), float(flat[order[-q:]].mean())


@dataclass(frozen=True)
class SensitivityCurve:
    kind: str
    grid: tuple
    bit_error: tuple


def sensitivity_sweep(corpus, key: AtpKey, kind: str, grid, expected, **fixed) -> SensitivityCurve:
    """Mean bit-error of protected images after each purification strength in ``grid``.

    ``expected`` is one message or a list with one message per image. ``fixed``
    holds extra constructor arguments for the purification (e.g. noise seed).
    """
    if kind not in KINDS:
        raise ValueError(f"unknown purification {kind!r}")
    corpus = list(corpus)
    if isinstance(expected, (list, tuple)) and len(expected) == len(corpus):
        msgs = list(expected)
    else:
        msgs = [expected] * len(corpus)
    grid = tuple(grid)
    means = []
    for value in grid:
        spec = KINDS[kind](value, **fixed)
        errs = [verify_image(purify(img, spec, key=key), key, m).bit_error
                for img, m in zip(corpus, msgs)]
        means.append(float(np.mean(errs)))
    return SensitivityCurve(kind, grid, tuple(means))


@dataclass(frozen=True)
class ContainmentReport:
    size: int
    region: int
    block: int
    seed: int
    improved_exterior_max: float
    baseline_exterior_max: float
    improved_coverage: float
    baseline_coverage: float

    def to_json(self) -> dict:
        return dict(self.__dict__)


def pgd_containment_sim(size: int = 512, region: int = 128, seed: int = 0,
                        block: int | None = None) -> ContainmentReport:
    """One step of both PGD variants under a gradient confined to the top-left
    ``region`` x ``region`` coefficients (step 1, radius 1).

    ``block`` defaults to ``size``, i.e. a single whole-image DCT. Coverage is
    the fraction of coefficients that moved by more than the containment
    tolerance.
    """
    block = size if block is None else block
    if region < 1 or region > size:
        raise ValueError("region must lie in [1, size]")
    rng = np.random.default_rng(seed)
    img = rng.uniform(0.0, 1.0, size=(size, size, 1))
    inside = np.zeros((size, size, 1))
    inside[:region, :region] = 1.0
    g_freq = inside * rng.standard_normal((size, size, 1))
    g = bdct_inverse(g_freq, block)
    obj = FunctionObjective(lambda x: float(np.sum(g * x)), lambda x: g)
    cfg = PgdConfig(epsilon=1.0, alpha=1.0, steps=1, mask=inside)
    c0 = bdct_forward(img, block)
    outside = inside == 0
    stats = []
    for algo in (improved_fd_pgd, baseline_fd_pgd):
        d = np.abs(bdct_forward(algo(img, obj, cfg, block), block) - c0)
        ext = float(d[outside].max()) if outside.any() else 0.0
        stats.append((ext, float(np.mean(d > CONTAINMENT_TOL))))
    return ContainmentReport(size, region, block, seed, stats[0][0], stats[1][0],
                             stats[0][1], stats[1][1])


def ratio_block_sweep(corpus, key: AtpKey, p_grid, n_grid, seed: int = 0, **pgd) -> list[dict]:
    """Protect -> 8-bit round trip -> verify for every (p, N); mean bit-error per cell.

    ``pgd`` is forwarded to :func:`atp.pipeline.protect` (epsilon, alpha, steps).
    """
    corpus = [as_image(c) for c in corpus]
    p_grid, n_grid = list(p_grid), list(n_grid)
    for p in p_grid:
        if not 0.0 < p < 1.0:
            raise ValueError(f"mask ratio {p} outside (0, 1)")
    for n in n_grid:
        for img in corpus:
            BlockSpec(n).check(img.shape)
    rows = []
    rng = np.random.default_rng(seed)
    for p in p_grid:
        for n in n_grid:
            k = key.with_params(p=p, N=n)
            errs = []
            for i, img in enumerate(corpus):
                msg = random_message(rng, k.L)
                out = quantize8(protect(img, k, msg, seed=seed + i, **pgd).image)
                errs.append(verify_image(out, k, msg).bit_error)
            rows.append({"p": p, "N": n, "bit_error": float(np.mean(errs))})
    return rows


def frequency_indices(n: int) -> tuple[np.ndarray, np.ndarray]:
    return block_frequency_index((n, n), n)
