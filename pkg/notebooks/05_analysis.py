"""
Where purification changes things
=================================

Change rates in the pixel and frequency domains, the per-frequency variance
of the change, and a sweep of the mask ratio p against block size N.
"""

import numpy as np

from atp.analysis import band_means, change_rate, ratio_block_sweep, spectral_variance_map
from atp.corpus import synthetic_corpus
from atp.imageio import quantize8
from atp.masking import AtpKey
from atp.pipeline import protect
from atp.purify import Jpeg, Resize, purify

key = AtpKey.from_seed(7)
corpus = synthetic_corpus(6, 128, seed=9)
prot = [quantize8(protect(x, key, "c0ffee42", steps=10).image) for x in corpus]

for spec in (Resize(4), Jpeg(50)):
    pur = [purify(x, spec) for x in prot]
    fr = np.mean([change_rate(a, b, "frequency").rate for a, b in zip(prot, pur)])
    px = np.mean([change_rate(a, b, "pixel").rate for a, b in zip(prot, pur)])
    print("%-28s frequency %.4f  pixel %.4f" % (spec, fr, px))

vmap = spectral_variance_map([(x, purify(x, Resize(4))) for x in prot], 16)
low, high = band_means(vmap)
print("Resize 4x variance map: low band %.3f  high band %.3f" % (low, high))
print(np.round(vmap[:6, :6], 2))

rows = ratio_block_sweep(corpus[:2], key, p_grid=[0.3, 0.5], n_grid=[8, 16], steps=5)
for r in rows:
    print("p=%.1f N=%2d bit error %.4f" % (r["p"], r["N"], r["bit_error"]))
