"""
Block DCT basics
================

Images live in [0, 1] as (H, W, C) float arrays. The block DCT cuts every
channel into N x N tiles and applies an orthonormal DCT-II to each one.
"""

import numpy as np

from atp.bdct import bdct_forward, bdct_inverse, block_frequency_index, pad_to_multiple
from atp.corpus import synthetic_image

img = synthetic_image(0, size=128)
print("image", img.shape, img.dtype, img.min().round(3), img.max().round(3))

# forward and back: the transform is orthonormal, so nothing is lost
c = bdct_forward(img, 16)
back = bdct_inverse(c, 16)
print("round-trip error", np.abs(back - img).max())
print("energy  pixels %.6f  coeffs %.6f" % (np.sum(img**2), np.sum(c**2)))

# each coefficient knows which in-block frequency (u, v) it belongs to
u, v = block_frequency_index(img.shape, 16)
dc = c[(u == 0) & (v == 0)]
print("DC coefficients per block and channel:", dc.size, " mean", dc.mean().round(3))

# most of the energy sits in the low frequencies
low = np.sum(c[(u + v) < 4] ** 2) / np.sum(c**2)
print("share of energy with u+v < 4: %.4f" % low)

# sizes that are not a multiple of N get a symmetric pad on the bottom/right
odd = img[:100, :90]
print("padded", odd.shape, "->", pad_to_multiple(odd, 16).shape)
