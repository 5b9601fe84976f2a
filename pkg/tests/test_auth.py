import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from atp.auth import (as_message, bit_error, decode_votes, embed, extract, message_from_hex,
                      message_to_hex, plan_embedding)
from atp.bdct import bdct_forward, bdct_inverse
from atp.imageio import quantize8
from atp.masking import AtpKey, derive_mask


def _single_plan(key, bit_dither):
    """Plan over a 1-coefficient tensor with a forced dither, L = 1."""
    k = key.with_params(L=1)
    plan = plan_embedding(k, np.ones((1, 1, 1), np.uint8))
    return k, type(plan)(plan.shape, plan.positions, np.full((1, 1), bit_dither), plan.fingerprint)


def test_qim_worked_examples(key):
    k, plan = _single_plan(key, 0.0)
    c = np.full((1, 1, 1), 0.037)
    assert embed(c, [0], plan, k)[0, 0, 0] == pytest.approx(0.04, abs=1e-15)
    assert embed(c, [1], plan, k)[0, 0, 0] == pytest.approx(0.03, abs=1e-15)


def test_plan_sizes(key):
    shape = (512, 512, 3)
    mask = derive_mask(key, shape)
    plan = plan_embedding(key, mask)
    count = int(mask.sum())
    assert plan.positions.shape == (32, count // 32)
    # 3 sigma of the binomial count, divided among 32 bits
    assert abs(plan.redundancy - 12288) <= 3 * np.sqrt(786432 * 0.25) / 32
    flat = plan.positions.ravel()
    assert len(np.unique(flat)) == flat.size
    assert mask.reshape(-1)[flat].all()
    assert set(np.unique(plan.dither)) == {0.0, 0.5}


def test_plan_single_bit(key):
    mask = derive_mask(key, (32, 32, 3))
    plan = plan_embedding(key.with_params(L=1), mask)
    assert plan.positions.shape == (1, int(mask.sum()))


def test_plan_too_few_positions(key):
    with pytest.raises(ValueError):
        plan_embedding(key, np.zeros((4, 4, 1), np.uint8))


def test_plans_differ_between_keys(key):
    shape = (64, 64, 3)
    mask = derive_mask(key, shape)
    a = plan_embedding(key, mask)
    b = plan_embedding(AtpKey.from_seed(8), mask)
    r = a.redundancy
    overlaps = [len(np.intersect1d(a.positions[i], b.positions[i])) for i in range(32)]
    # independent shuffles of the same positions: E|overlap| = R / L
    assert abs(np.mean(overlaps) - r / 32) < 1.5
    assert not np.array_equal(a.positions, b.positions)


@pytest.fixture(scope="module")
def setup():
    key = AtpKey.from_seed(7)
    shape = (64, 64, 3)
    mask = derive_mask(key, shape)
    return key, mask, plan_embedding(key, mask)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 2**32 - 1))
def test_embed_extract_exact_and_masked_only(setup, seed_c, seed_m):
    key, mask, plan = setup
    r = np.random.default_rng(seed_c)
    c = r.normal(0, 2, size=mask.shape)
    m = np.random.default_rng(seed_m).integers(0, 2, 32)
    out = embed(c, m, plan, key)
    assert np.array_equal(out[mask == 0], c[mask == 0])
    assert np.max(np.abs(out - c)) <= key.delta / 2 + 1e-12
    assert bit_error(extract(out, plan, key), m) == 0.0
    assert np.all(decode_votes(out, plan, key) == m[:, None])


def test_small_shift_survives(setup, rng):
    key, mask, plan = setup
    m = rng.integers(0, 2, 32)
    out = embed(rng.normal(size=mask.shape), m, plan, key)
    noisy = out + rng.uniform(-key.delta / 8, key.delta / 8, size=out.shape)
    assert np.all(decode_votes(noisy, plan, key) == m[:, None])


def test_large_noise_gives_chance(setup, rng):
    key, mask, plan = setup
    errs = []
    for _ in range(50):
        m = rng.integers(0, 2, 32)
        out = embed(rng.normal(size=mask.shape), m, plan, key)
        noisy = out + rng.uniform(-10 * key.delta, 10 * key.delta, size=out.shape)
        errs.append(bit_error(extract(noisy, plan, key), m))
    # 1600 fair bits: sd 0.0125
    assert abs(np.mean(errs) - 0.5) < 0.05


def test_survives_8bit_round_trip(rng):
    key = AtpKey.from_seed(11)
    for seed in range(5):
        img = np.random.default_rng(seed).uniform(0.1, 0.9, size=(64, 64, 3))
        mask = derive_mask(key, img.shape)
        plan = plan_embedding(key, mask)
        m = rng.integers(0, 2, 32)
        stego = quantize8(bdct_inverse(embed(bdct_forward(img, 16), m, plan, key), 16))
        assert bit_error(extract(bdct_forward(stego, 16), plan, key), m) == 0.0


def test_tie_breaks_to_zero(key):
    k = key.with_params(L=1)
    plan = plan_embedding(k, np.ones((2, 1, 1), np.uint8))
    c = np.zeros((2, 1, 1))
    c.reshape(-1)[plan.positions[0, 0]] = 0.0
    # one vote each way: put the second coefficient on the opposite lattice
    d = plan.dither[0]
    flat = c.reshape(-1)
    flat[plan.positions[0, 0]] = k.delta * d[0]
    flat[plan.positions[0, 1]] = k.delta * ((d[1] + 0.5) % 1.0)
    votes = decode_votes(c, plan, k)
    assert sorted(votes[0].tolist()) == [0, 1]
    assert extract(c, plan, k)[0] == 0


def test_plan_key_mismatch(setup):
    key, mask, plan = setup
    with pytest.raises(ValueError):
        embed(np.zeros(mask.shape), np.zeros(32), plan, AtpKey.from_seed(123))
    with pytest.raises(ValueError):
        extract(np.zeros((8, 8, 3)), plan, key)
    with pytest.raises(ValueError):
        embed(np.zeros(mask.shape), np.zeros(31), plan, key)


def test_bit_error_values():
    a = np.zeros(32, np.uint8)
    assert bit_error(a, a) == 0.0
    assert bit_error(a, 1 - a) == 1.0
    b = a.copy()
    b[5] = 1
    assert bit_error(a, b) == 0.03125
    with pytest.raises(ValueError):
        bit_error(a, a[:31])


def test_hex_messages():
    bits = message_from_hex("deadbeef")
    assert bits.size == 32 and bits[:4].tolist() == [1, 1, 0, 1]
    assert message_to_hex(bits) == "deadbeef"
    assert np.array_equal(as_message("0x0000000f", 32)[-4:], [1, 1, 1, 1])
    with pytest.raises(ValueError):
        message_from_hex("xyz")
    with pytest.raises(ValueError):
        as_message([0, 2])
