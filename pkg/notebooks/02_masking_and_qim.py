"""
Keyed mask and QIM authorization
=================================

A 32-byte secret drives everything: the Bernoulli(p) mask that splits the
coefficients, the shuffle that spreads each message bit over R positions and
the dithers of the quantizer.
"""

import numpy as np

from atp.auth import bit_error, embed, extract, message_from_hex, message_to_hex, plan_embedding
from atp.bdct import bdct_forward, bdct_inverse
from atp.corpus import synthetic_image
from atp.masking import AtpKey, complement, derive_mask

key = AtpKey.from_seed(7)           # deterministic key for demos; AtpKey.generate() for real use
print(key, "fingerprint", key.fingerprint)

img = synthetic_image(3, size=128)
mask = derive_mask(key, img.shape)
print("mask ones: %.3f (p = %.2f)" % (mask.mean(), key.p))
print("complement is disjoint:", not np.any(mask & complement(mask)))

plan = plan_embedding(key, mask)
print("message length", plan.length, " votes per bit", plan.redundancy)

msg = message_from_hex("c0ffee42")
c_auth = embed(bdct_forward(img, key.N), msg, plan, key)
signed = bdct_inverse(c_auth, key.N)
print("pixel change from embedding: max %.4f" % np.abs(signed - img).max())

got = extract(bdct_forward(signed, key.N), plan, key)
print("extracted", message_to_hex(got), " bit error", bit_error(got, msg))

# a different key reads noise
other = AtpKey.from_seed(8)
other_plan = plan_embedding(other, derive_mask(other, img.shape))
print("wrong key bit error %.3f" % bit_error(extract(bdct_forward(signed, 16), other_plan, other), msg))
