import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from app.exceptions import CodecError
from app.models.params import PRODUCTION, TOY
from app.models.scheme import MultiSignature
from app.services import codec
from app.services.codec import WireKind
from tests.conftest import make_seed


class TestBitPacking:
    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 24).flatmap(
        lambda bits: st.tuples(st.just(bits), st.lists(st.integers(0, (1 << bits) - 1), min_size=1, max_size=64))
    ))
    def test_matches_reference_packer(self, case):
        bits, values = case
        packed = codec.pack_bits(values, bits)
        assert packed == codec.pack_bits_reference(values, bits)
        assert codec.unpack_bits(packed, bits, len(values)).tolist() == values

    @pytest.mark.parametrize("bits", [7, 18, 24])
    def test_poly_round_trip(self, rng, bits):
        params = PRODUCTION
        bound = min(params.q, 1 << bits)
        polys = rng.integers(0, bound, size=(20, params.n), dtype=np.int64)
        for p in polys:
            data = codec.pack_poly(p, bits, params)
            assert len(data) == params.poly_bytes(bits)
            assert np.array_equal(codec.unpack_poly(data, bits, params)[0], p)

    def test_out_of_range_rejected(self):
        with pytest.raises(CodecError):
            codec.pack_bits([8], 3)
        with pytest.raises(CodecError):
            codec.pack_bits([-1], 3)

    def test_nonzero_padding_rejected(self):
        with pytest.raises(CodecError):
            codec.unpack_bits(bytes([0xFF]), 3, 2)

    def test_truncated_rejected(self):
        with pytest.raises(CodecError):
            codec.unpack_bits(b"\x00", 24, 1)


class TestSizes:
    def test_production_table(self):
        assert PRODUCTION.size_table() == {
            "pk": 3104,
            "sk": 1056,
            "share": 6176,
            "sig": 5408,
            "zc": 2336,
            "apk": 3072,
            "w1": 896,
        }

    def test_encoded_objects_have_table_sizes(self, production_round, production_keys):
        keys, message, outboxes, nonces = production_round
        pk, sk = production_keys[0]
        assert len(codec.encode_pk(pk, PRODUCTION)) == 3104
        assert len(codec.pack_coeffs(pk.b, PRODUCTION)) == 3072
        assert len(codec.encode_sk(sk, PRODUCTION)) == 1056
        assert len(codec.encode_share(outboxes[1][2], PRODUCTION)) == 6176
        assert len(codec.pack_w1(nonces[1].w1, PRODUCTION)) == 896


class TestObjects:
    def test_pk_sk_round_trip(self, production_keys):
        for pk, sk in production_keys:
            assert codec.decode_pk(codec.encode_pk(pk, PRODUCTION), PRODUCTION) == pk
            assert codec.decode_sk(codec.encode_sk(sk, PRODUCTION), PRODUCTION) == sk

    def test_share_round_trip(self, production_round):
        _, _, outboxes, _ = production_round
        share = outboxes[2][1]
        assert codec.decode_share(codec.encode_share(share, PRODUCTION), PRODUCTION) == share

    def test_params_round_trip(self):
        for params in (PRODUCTION, TOY):
            assert codec.decode_params(codec.encode_params(params)) == params

    def test_truncated_and_trailing_rejected(self, production_keys):
        data = codec.encode_pk(production_keys[0][0], PRODUCTION)
        with pytest.raises(CodecError, match="truncated"):
            codec.decode_pk(data[:-1], PRODUCTION)
        with pytest.raises(CodecError, match="trailing"):
            codec.decode_pk(data + b"\x00", PRODUCTION)

    def test_non_canonical_coefficient_rejected(self, production_keys):
        # 24-bit field holding a value >= q
        data = bytearray(codec.encode_pk(production_keys[0][0], PRODUCTION))
        data[32:35] = (PRODUCTION.q + 5).to_bytes(3, "little")
        with pytest.raises(CodecError):
            codec.decode_pk(bytes(data), PRODUCTION)

    def test_oversized_z_rejected(self):
        z = np.zeros((PRODUCTION.l, PRODUCTION.n), dtype=np.int64)
        z[0, 0] = PRODUCTION.gamma1
        sig = MultiSignature(z=z, c=bytes(32), b=np.zeros((PRODUCTION.k, PRODUCTION.n), dtype=np.int64))
        with pytest.raises(CodecError):
            codec.encode_sig(sig, PRODUCTION)


class TestWire:
    def test_header(self, production_keys):
        wire = codec.wire_encode(production_keys[0][0], PRODUCTION)
        assert wire[:4] == b"RZMS"
        assert wire[4] == codec.VERSION
        assert wire[5] == WireKind.PK
        assert len(wire) == codec.HEADER_LEN + 3104

    def test_round_trip_and_hex(self, production_keys):
        pk = production_keys[1][0]
        wire = codec.wire_encode(pk, PRODUCTION)
        assert codec.wire_decode(codec.from_hex(codec.to_hex(wire)), PRODUCTION, WireKind.PK) == pk

    @pytest.mark.parametrize("position,value", [(0, ord("X")), (4, 2), (5, 9)])
    def test_bad_header_rejected(self, production_keys, position, value):
        wire = bytearray(codec.wire_encode(production_keys[0][0], PRODUCTION))
        wire[position] = value
        with pytest.raises(CodecError):
            codec.wire_decode(bytes(wire), PRODUCTION)

    def test_kind_mismatch_rejected(self, production_keys):
        wire = codec.wire_encode(production_keys[0][1], PRODUCTION)
        with pytest.raises(CodecError, match="expected pk"):
            codec.wire_decode(wire, PRODUCTION, WireKind.PK)

    def test_unknown_type_rejected(self):
        with pytest.raises(CodecError):
            codec.wire_encode(object(), PRODUCTION)

    def test_bad_hex(self):
        with pytest.raises(CodecError):
            codec.from_hex("zz")

    def test_params_object(self):
        wire = codec.wire_encode(TOY, TOY)
        assert codec.wire_decode(wire, TOY, WireKind.PARAMS) == TOY

    def test_toy_share_round_trip(self, toy_keys):
        from app.services import mscheme

        pk1, sk1 = toy_keys[0]
        pk2, _ = toy_keys[1]
        shares, _ = mscheme.sign_share(sk1, pk1, {2: pk2}, b"toy", make_seed("toy/codec"), TOY)
        wire = codec.wire_encode(shares[2], TOY)
        assert len(wire) == codec.HEADER_LEN + TOY.share_bytes
        assert codec.wire_decode(wire, TOY, WireKind.SHARE) == shares[2]
