"""
Purification breaks the authorization
=====================================

A protected image verifies. Any of the usual purifications (resize, JPEG,
blur, noise) scrambles the fragile QIM bits, so the gate refuses the request.
"""

from atp.corpus import synthetic_corpus
from atp.gate import verify_image, verify_request
from atp.imageio import PNG, decode_image, encode_image
from atp.masking import AtpKey, derive_mask
from atp.pipeline import protect
from atp.purify import AttackerGuess, GaussianBlur, GaussianNoise, Jpeg, Resize, adaptive_attack, purify

key = AtpKey.from_seed(7)
msg = "c0ffee42"
imgs = [decode_image(encode_image(protect(x, key, msg, steps=20).clamped(), PNG))
        for x in synthetic_corpus(4, 128, seed=5)]

print("clean request accepted:", verify_request(imgs, key, msg).accepted)

for spec in (Resize(2), Resize(4), Jpeg(90), Jpeg(50), GaussianBlur(1.0), GaussianNoise(0.01, seed=0)):
    rep = verify_image(purify(imgs[0], spec), key, msg)
    print("%-40s bit error %.3f  authorized %s" % (spec, rep.bit_error, rep.authorized))

# one bad image is enough to refuse the whole request
bad = [purify(imgs[0], Jpeg(90))] + imgs[1:]
print("request with one JPEG image accepted:", verify_request(bad, key, msg).accepted)

# adaptive attacker who only re-quantizes the region they believe is free:
# wrong block size, no mask, then the true key material
mask = derive_mask(key, imgs[0].shape)
for setting, guess in ((1, AttackerGuess(8, mask)), (2, AttackerGuess(16)), (3, AttackerGuess(16, mask))):
    rep = verify_image(adaptive_attack(imgs[0], setting, key, guess), key, msg)
    print("adaptive setting %d  bit error %.3f" % (setting, rep.bit_error))
