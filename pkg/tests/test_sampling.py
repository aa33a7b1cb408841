import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import chisquare

from app.exceptions import CodecError
from app.models.params import PRODUCTION, TOY
from app.services.ring_arith import inf_norm, mod_pm
from app.services.sampling import (
    DOMAIN_MASK,
    decode_seed,
    encode_seed,
    expand_a,
    expand_mask,
    hash_h,
    require_seed,
    sample_eta,
    sample_eta_vec,
    sample_in_ball,
    xof_stream,
)

SEED = bytes(range(32))


def test_hash_h_known_digest():
    assert hash_h(b"").hex().startswith("a7ffc6f8")
    assert len(hash_h(b"abc")) == 32


def test_hash_h_single_bit_changes_digest(rng):
    for _ in range(200):
        data = bytearray(rng.integers(0, 256, size=48, dtype=np.uint8).tobytes())
        flipped = bytearray(data)
        flipped[int(rng.integers(0, 48))] ^= 1 << int(rng.integers(0, 8))
        assert hash_h(bytes(data)) != hash_h(bytes(flipped))


def test_xof_is_deterministic_and_domain_separated():
    assert xof_stream(SEED, 0, 7).read(64) == xof_stream(SEED, 0, 7).read(64)
    assert xof_stream(SEED, 0, 7).read(64) != xof_stream(SEED, 1, 7).read(64)
    assert xof_stream(SEED, 0, 7).read(64) != xof_stream(SEED, 0, 8).read(64)


def test_xof_reads_continue_the_stream():
    stream = xof_stream(SEED, 0, 7)
    assert stream.read(32) + stream.read(32) == xof_stream(SEED, 0, 7).read(64)


def test_xof_rejects_wide_nonce():
    with pytest.raises(ValueError):
        xof_stream(SEED, 0, 1 << 16)


def test_require_seed():
    assert require_seed(bytearray(SEED)) == SEED
    with pytest.raises(CodecError):
        require_seed(b"short")


class TestExpandA:
    def test_shape_range_determinism(self):
        a = expand_a(SEED, PRODUCTION)
        assert a.shape == (4, 4, 256)
        assert a.min() >= 0 and a.max() < PRODUCTION.q
        assert np.array_equal(a, expand_a(SEED, PRODUCTION))

    def test_seed_sensitivity(self):
        other = hash_h(SEED)
        assert not np.array_equal(expand_a(SEED, PRODUCTION), expand_a(other, PRODUCTION))

    def test_entries_look_uniform(self):
        a = expand_a(SEED, PRODUCTION).reshape(-1)
        # 4096 draws: the mean of a uniform [0, q) sample sits near q/2
        assert abs(a.mean() - PRODUCTION.q / 2) < 0.05 * PRODUCTION.q


class TestMask:
    def test_bound(self):
        for i in range(20):
            y = expand_mask(hash_h(SEED + bytes([i])), PRODUCTION)
            assert y.shape == (PRODUCTION.l, PRODUCTION.n)
            assert inf_norm(y, PRODUCTION.q) <= PRODUCTION.gamma1 - 1

    def test_covers_both_signs(self):
        y = expand_mask(SEED, TOY)
        centered = np.where(y > TOY.q // 2, y - TOY.q, y)
        assert np.abs(centered).max() <= TOY.gamma1 - 1

    def test_stream_uses_mask_domain(self):
        assert xof_stream(SEED, DOMAIN_MASK, 0).read(8) != xof_stream(SEED, 0, 0).read(8)

    @pytest.mark.parametrize("draws", [100, pytest.param(1000, marks=pytest.mark.slow)])
    def test_uniform_over_production_range(self, draws):
        bound = PRODUCTION.gamma1 - 1
        values = np.concatenate([
            mod_pm(expand_mask(hash_h(b"mask" + i.to_bytes(4, "little")), PRODUCTION), PRODUCTION.q).reshape(-1)
            for i in range(draws)
        ])
        # 2*gamma1 - 1 = 511 * 513, so the range splits into equal bins
        counts, _ = np.histogram(values, bins=511, range=(-bound, bound + 1))
        assert chisquare(counts).pvalue > 1e-4

    def test_uniform_over_toy_range(self):
        bound = TOY.gamma1 - 1
        values = np.concatenate([
            mod_pm(expand_mask(hash_h(b"toy-mask" + i.to_bytes(4, "little")), TOY), TOY.q).reshape(-1)
            for i in range(4000)
        ])
        counts = np.bincount(values + bound, minlength=2 * bound + 1)
        assert len(counts) == 2 * TOY.gamma1 - 1
        assert chisquare(counts).pvalue > 1e-4


class TestEta:
    def test_bound_and_spread(self):
        s = sample_eta_vec(SEED, 0, 8, PRODUCTION)
        centered = np.where(s > PRODUCTION.q // 2, s - PRODUCTION.q, s)
        assert np.abs(centered).max() <= PRODUCTION.eta
        assert set(np.unique(centered).tolist()) == set(range(-PRODUCTION.eta, PRODUCTION.eta + 1))

    def test_nonce_separation(self):
        assert not np.array_equal(sample_eta(SEED, 0, PRODUCTION), sample_eta(SEED, 1, PRODUCTION))

    @pytest.mark.parametrize("polys", [400, pytest.param(4000, marks=pytest.mark.slow)])
    def test_uniform_over_eleven_values(self, polys):
        values = np.concatenate([
            mod_pm(sample_eta(hash_h(b"eta" + i.to_bytes(4, "little")), 0, PRODUCTION), PRODUCTION.q)
            for i in range(polys)
        ])
        counts = np.bincount(values + PRODUCTION.eta, minlength=2 * PRODUCTION.eta + 1)
        assert len(counts) == 11
        assert chisquare(counts).pvalue > 1e-4


class TestSampleInBall:
    @pytest.mark.parametrize("params", [TOY, PRODUCTION], ids=["toy", "production"])
    def test_weight(self, params):
        for i in range(200):
            c = sample_in_ball(hash_h(bytes([i % 256, i // 256])), params)
            centered = np.where(c > params.q // 2, c - params.q, c)
            assert np.count_nonzero(centered) == params.tau
            assert set(np.unique(centered[centered != 0]).tolist()) <= {-1, 1}

    def test_deterministic(self):
        assert np.array_equal(sample_in_ball(SEED, PRODUCTION), sample_in_ball(SEED, PRODUCTION))

    def test_toy_scan(self):
        for i in range(10_000):
            c = mod_pm(sample_in_ball(hash_h(i.to_bytes(4, "little")), TOY), TOY.q)
            assert np.count_nonzero(c) == TOY.tau
            assert np.all(np.abs(c) <= 1)

    def test_challenge_times_secret_is_short(self, production):
        from app.services.ring_arith import get_ring

        ring = get_ring(production)
        for i in range(50):
            c = sample_in_ball(hash_h(b"c" + bytes([i])), production)
            s = sample_eta_vec(hash_h(b"s" + bytes([i])), 0, production.l, production)
            assert ring.inf_norm(ring.scale(c, s)) <= production.beta


class TestSeedEncoding:
    @settings(max_examples=50, deadline=None)
    @given(st.binary(min_size=32, max_size=32))
    def test_round_trip_production(self, seed):
        encoded = encode_seed(seed, PRODUCTION)
        assert encoded.shape == (1, 256)
        assert decode_seed(encoded, PRODUCTION) == seed

    def test_round_trip_toy_uses_chunks(self):
        encoded = encode_seed(SEED, TOY)
        assert encoded.shape == (32, 8)
        assert decode_seed(encoded, TOY) == SEED

    def test_toy_threshold_exhaustive(self):
        # a coefficient decodes to 1 iff its centered value exceeds q/4 in magnitude
        for r in range(TOY.q):
            encoded = np.zeros((TOY.seed_chunks, TOY.n), dtype=np.int64)
            encoded[0, 0] = r
            bit = decode_seed(encoded, TOY)[0] & 1
            assert bit == (65 <= r <= 192)

    def test_toy_noise_tolerance(self):
        seed = bytes([0b10]) + bytes(31)
        for noise in range(-63, 64):
            encoded = encode_seed(seed, TOY)
            encoded[0, :2] += noise
            assert decode_seed(encoded, TOY) == seed

    def test_survives_bounded_noise(self, rng):
        bound = 51205
        for _ in range(500):
            seed = rng.integers(0, 256, size=32, dtype=np.uint8).tobytes()
            noise = rng.integers(-bound, bound + 1, size=(1, PRODUCTION.n))
            assert decode_seed(encode_seed(seed, PRODUCTION) + noise, PRODUCTION) == seed
