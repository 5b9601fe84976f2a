import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from PIL import Image

from atp.imageio import PNG, ImageDecodeError, PixelCodec, decode_image, load_image, quantize8, save_image


def _write_png(path, arr, mode):
    Image.fromarray(np.asarray(arr, dtype=np.uint8), mode=mode).save(path)


@pytest.mark.parametrize("byte,expected", [(255, 1.0), (0, 0.0)])
def test_load_saturation_and_zero(tmp_path, byte, expected):
    p = tmp_path / "a.png"
    _write_png(p, np.full((2, 2, 3), byte), "RGB")
    img = load_image(p)
    assert img.shape == (2, 2, 3)
    assert np.all(img == expected)


def test_load_mid_grey(tmp_path):
    p = tmp_path / "g.png"
    _write_png(p, [[128]], "L")
    img = load_image(p)
    assert img.shape == (1, 1, 1)
    assert img[0, 0, 0] == 128 / 255
    assert img[0, 0, 0] == pytest.approx(0.50196, abs=1e-5)


def test_load_rejects_garbage_and_16bit(tmp_path):
    p = tmp_path / "junk.png"
    p.write_bytes(b"not an image")
    with pytest.raises(ImageDecodeError):
        load_image(p)
    q = tmp_path / "deep.png"
    Image.fromarray(np.full((2, 2), 40000, dtype=np.uint16)).save(q)
    with pytest.raises(ImageDecodeError):
        load_image(q)
    with pytest.raises(ImageDecodeError):
        load_image(tmp_path / "missing.png")


def test_save_png_bytes(tmp_path):
    p = tmp_path / "h.png"
    save_image(np.full((4, 4, 3), 0.5), PNG, p)
    assert np.all(np.asarray(Image.open(p)) == 128)
    save_image(np.ones((4, 4, 1)), PNG, p)
    assert np.all(np.asarray(Image.open(p)) == 255)


def test_png_round_trip_equals_quantize8(tmp_path, rng):
    img = rng.uniform(-0.2, 1.2, size=(16, 8, 3))
    p = tmp_path / "r.png"
    save_image(img, PNG, p)
    assert np.array_equal(load_image(p), quantize8(img))


def test_quantize8_examples():
    v = 128 / 255
    assert quantize8(np.full((1, 1), v))[0, 0, 0] == v
    assert quantize8(np.full((1, 1), 0.004))[0, 0, 0] == 1 / 255
    assert quantize8(np.full((1, 1), -0.1))[0, 0, 0] == 0.0
    # half-way values round away from zero
    assert quantize8(np.full((1, 1), 0.5 / 255))[0, 0, 0] == 1 / 255


def test_jpeg_codec_validation():
    with pytest.raises(ValueError):
        PixelCodec("jpeg", 0)
    with pytest.raises(ValueError):
        PixelCodec("gif")


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (3, 5, 3), elements=st.floats(-2, 2, allow_nan=False)))
def test_quantize8_properties(x):
    q = quantize8(x)
    assert np.array_equal(quantize8(q), q)
    inside = (x >= 0) & (x <= 1)
    assert np.all(np.abs(q - x)[inside] <= 1 / 510 + 1e-12)
    assert q.min() >= 0 and q.max() <= 1


def test_decode_jpeg_bytes(rng):
    from atp.imageio import encode_image

    img = rng.uniform(0, 1, size=(16, 16, 3))
    out = decode_image(encode_image(img, PixelCodec("jpeg", 90)))
    assert out.shape == img.shape
