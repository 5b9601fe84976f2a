import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from atp.bdct import BlockSpec, bdct_forward, bdct_inverse, pad_to_multiple


def dct_block_bruteforce(block):
    """Direct double sum, orthonormal DCT-II."""
    n = block.shape[0]
    alpha = np.full(n, np.sqrt(2 / n))
    alpha[0] = np.sqrt(1 / n)
    out = np.zeros((n, n))
    for u in range(n):
        for v in range(n):
            s = 0.0
            for i in range(n):
                for j in range(n):
                    s += (block[i, j] * np.cos(np.pi * (2 * i + 1) * u / (2 * n))
                          * np.cos(np.pi * (2 * j + 1) * v / (2 * n)))
            out[u, v] = alpha[u] * alpha[v] * s
    return out


def test_matches_bruteforce_oracle(rng):
    img = rng.uniform(0, 1, size=(32, 32, 1))
    c = bdct_forward(img, 16)
    for bi in (0, 16):
        for bj in (0, 16):
            ref = dct_block_bruteforce(img[bi:bi + 16, bj:bj + 16, 0])
            assert np.max(np.abs(c[bi:bi + 16, bj:bj + 16, 0] - ref)) < 1e-9


def test_constant_block():
    c = bdct_forward(np.full((16, 16, 1), 0.5), 16)
    assert c[0, 0, 0] == pytest.approx(8.0, abs=1e-12)
    c[0, 0, 0] = 0
    assert np.max(np.abs(c)) < 1e-12


def test_zero_in_zero_out():
    assert not np.any(bdct_forward(np.zeros((32, 32, 3)), 16))
    assert not np.any(bdct_inverse(np.zeros((32, 32, 3)), 16))


def test_parseval_random_32(rng):
    img = rng.uniform(0, 1, size=(32, 32, 3))
    c = bdct_forward(img, 16)
    assert abs(np.sum(c**2) - np.sum(img**2)) / np.sum(img**2) < 1e-9


def test_inverse_of_dc_impulse():
    c = np.zeros((32, 32, 1))
    c[16, 0, 0] = 16.0
    img = bdct_inverse(c, 16)
    assert np.allclose(img[16:32, 0:16], 1.0, atol=1e-12)
    assert np.max(np.abs(img[:16])) < 1e-12 and np.max(np.abs(img[16:, 16:])) < 1e-12


def test_inverse_not_clamped():
    c = np.zeros((16, 16, 1))
    c[0, 0, 0] = 32.0
    assert np.allclose(bdct_inverse(c, 16), 2.0)


def test_dimension_errors():
    with pytest.raises(ValueError):
        bdct_forward(np.zeros((20, 32, 1)), 16)
    with pytest.raises(ValueError):
        bdct_inverse(np.zeros((32, 20, 1)), 16)
    with pytest.raises(ValueError):
        BlockSpec(1)


def test_2d_input_keeps_shape(rng):
    img = rng.uniform(size=(16, 32))
    assert bdct_forward(img, 8).shape == (16, 32)


def test_locality_and_dense_basis(rng):
    img = rng.uniform(size=(48, 48, 1))
    bumped = img.copy()
    bumped[20, 30, 0] += 0.3
    d = np.abs(bdct_forward(bumped, 16) - bdct_forward(img, 16))[:, :, 0]
    changed = d > 1e-12
    assert changed[16:32, 16:32].all()
    changed[16:32, 16:32] = False
    assert not changed.any()
    c = np.zeros((48, 48, 1))
    c[16 + 5, 32 + 9, 0] = 1.0
    pix = np.abs(bdct_inverse(c, 16))[:, :, 0]
    assert (pix[16:32, 32:48] > 0).all()
    pix[16:32, 32:48] = 0
    assert not pix.any()


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([2, 4, 8, 16]), st.integers(1, 3), st.integers(1, 3), st.integers(0, 2**32 - 1),
       st.floats(-3, 3), st.floats(-3, 3))
def test_round_trip_and_linearity(n, bh, bw, seed, a, b):
    r = np.random.default_rng(seed)
    x = r.normal(size=(n * bh, n * bw, 3))
    y = r.normal(size=x.shape)
    assert np.max(np.abs(bdct_inverse(bdct_forward(x, n), n) - x)) < 1e-6
    lhs = bdct_forward(a * x + b * y, n)
    rhs = a * bdct_forward(x, n) + b * bdct_forward(y, n)
    assert np.max(np.abs(lhs - rhs)) < 1e-9
    nx = np.linalg.norm(x)
    assert abs(np.linalg.norm(bdct_forward(x, n)) - nx) <= 1e-6 * nx


def test_pad_to_multiple():
    img = np.arange(5 * 7 * 1, dtype=float).reshape(5, 7, 1)
    p = pad_to_multiple(img, 4)
    assert p.shape == (8, 8, 1)
    assert np.array_equal(p[:5, :7], img)
    assert pad_to_multiple(p, 4) is p
