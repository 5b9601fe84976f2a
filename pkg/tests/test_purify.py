import numpy as np
import pytest

from atp.bdct import bdct_forward
from atp.imageio import quantize8
from atp.masking import AtpKey, derive_mask
from atp.purify import (ADAPTIVE_STEP, AttackerGuess, FreqRound, GaussianBlur, GaussianNoise, Jpeg,
                        Resize, adaptive_attack, purify)


@pytest.fixture
def img(image64):
    return quantize8(image64)


def test_noise_zero_is_identity(img):
    assert np.array_equal(purify(img, GaussianNoise(0.0)), img)


def test_resize_one_is_identity(img):
    assert np.array_equal(purify(img, Resize(1)), img)


def test_resize_two_is_box_average_then_bilinear(img):
    out = Resize(2).apply(img)
    assert out.shape == img.shape
    # half-pixel aligned 2x bilinear decimation averages each 2x2 cell
    small = img.reshape(32, 2, 32, 2, 3).mean(axis=(1, 3))
    assert np.allclose(out[1:-1:2, 1:-1:2], 0.75 * 0.75 * small[:-1, :-1] + 0.75 * 0.25 * (small[1:, :-1] + small[:-1, 1:]) + 0.0625 * small[1:, 1:], atol=1e-12)


def test_blur_kernel_and_constant_image():
    k = GaussianBlur(1.0).kernel()
    t = np.exp(-0.5)
    assert k.shape == (3, 3)
    assert k[1, 1] == pytest.approx(1 / (1 + 2 * t) ** 2)
    flat = np.full((8, 8, 3), 0.4)
    assert np.allclose(GaussianBlur(1.0).apply(flat), 0.4)


def test_jpeg_changes_and_is_deterministic(img):
    a = purify(img, Jpeg(50))
    assert not np.array_equal(a, img)
    assert np.array_equal(a, purify(img, Jpeg(50)))
    assert np.abs(a - img).mean() < 0.05


def test_noise_is_seeded_and_clamped(img):
    a = purify(img, GaussianNoise(0.5, seed=3))
    assert np.array_equal(a, purify(img, GaussianNoise(0.5, seed=3)))
    assert a.min() >= 0 and a.max() <= 1
    assert not np.array_equal(a, purify(img, GaussianNoise(0.5, seed=4)))


def test_freq_round_all_lands_on_grid(rng):
    img = rng.uniform(0.3, 0.7, size=(32, 32, 1))
    out = FreqRound(0.5, "all", 16).apply(img)
    c = bdct_forward(out, 16) / 0.5
    assert np.allclose(c, np.round(c), atol=1e-9)


def test_freq_round_mask_complement_keeps_auth(rng):
    key = AtpKey.from_seed(1)
    img = rng.uniform(0.3, 0.7, size=(32, 32, 3))
    out = FreqRound(0.1, "mask-complement", 16).apply(img, key=key)
    m = derive_mask(key, img.shape).astype(bool)
    d = bdct_forward(out, 16) - bdct_forward(img, 16)
    assert np.max(np.abs(d[m])) < 1e-12
    assert np.max(np.abs(d[~m])) > 0.01
    with pytest.raises(ValueError):
        purify(img, FreqRound(0.1, "mask-complement"))


def test_parameter_validation():
    for bad in (lambda: Jpeg(0), lambda: Resize(0), lambda: GaussianBlur(0), lambda: GaussianNoise(-1),
                lambda: FreqRound(0), lambda: FreqRound(0.1, "some")):
        with pytest.raises(ValueError):
            bad()


def test_adaptive_guess_consistency(img):
    key = AtpKey.from_seed(1)
    mask = derive_mask(key, img.shape)
    with pytest.raises(ValueError):
        adaptive_attack(img, 1, key, AttackerGuess(16, mask))
    with pytest.raises(ValueError):
        adaptive_attack(img, 2, key, AttackerGuess(16, mask))
    with pytest.raises(ValueError):
        adaptive_attack(img, 3, key, AttackerGuess(8, mask))
    with pytest.raises(ValueError):
        adaptive_attack(img, 4, key, AttackerGuess(16))
    out = adaptive_attack(img, 3, key, AttackerGuess(16, mask))
    d = bdct_forward(out, 16) - bdct_forward(img, 16)
    # only 8-bit requantization noise reaches the authorization coefficients
    assert np.abs(d[mask == 1]).max() < 0.05
    assert ADAPTIVE_STEP == 0.2
