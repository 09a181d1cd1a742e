import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_pmf
from securesc.bitstream import Bitstream
from securesc.errors import NoStages, Truncated, UncodedSymbol
from securesc.prefix_codes import build_huffman, canonical_code
from securesc.realtime_codec import (
    StageRecord,
    decode_parsed,
    decode_stage_parsed,
    decode_stream_unparsed,
    encode_parsed,
    encode_stage_parsed,
    encode_stage_unparsed,
    encode_unparsed,
    encoder_rate,
)
from securesc.secure_stream import KeyStream, PrivateRandom, measured_key_rate

ABC = canonical_code((1, 2, 2))  # a:0 b:10 c:11


def tape(*bits):
    return KeyStream.from_bits(bits)


def pads(*bits):
    return PrivateRandom.from_bits(bits)


def test_parsed_encode_examples():
    assert encode_stage_parsed(1, ABC, tape(1, 0), pads()) == 0b00
    assert encode_stage_parsed(0, ABC, tape(1), pads(0)) == 0b10
    binary = canonical_code((1, 1))
    for x, k in itertools.product((0, 1), repeat=2):
        pr = pads()
        assert encode_stage_parsed(x, binary, tape(k), pr) == x ^ k
        assert pr.consumed == 0


def test_parsed_decode_examples():
    ks = tape(1, 0, 1)
    assert decode_stage_parsed(0b10, ABC, ks) == 0
    assert ks.consumed == 1
    ks = tape(1, 0)
    assert decode_stage_parsed(0b00, ABC, ks) == 1
    assert ks.consumed == 2


@pytest.mark.parametrize("p", [(0.5, 0.25, 0.25), (0.4, 0.3, 0.2, 0.1), (0.05, 0.05, 0.1, 0.2, 0.6)])
def test_parsed_exhaustive_roundtrip(p):
    code = build_huffman(p)
    lm = code.l_max
    for x in code.coded_symbols:
        l = code.lengths[x]
        for key in itertools.product((0, 1), repeat=lm):
            for pad in itertools.product((0, 1), repeat=lm - l):
                alice = KeyStream.from_bits(key)
                block = encode_stage_parsed(x, code, alice, PrivateRandom.from_bits(pad))
                assert block < 1 << lm
                bob = KeyStream.from_bits(key)
                assert decode_stage_parsed(block, code, bob) == x
                assert alice.consumed == bob.consumed == l


def test_uncoded_symbol():
    code = build_huffman((0.5, 0.0, 0.5))
    with pytest.raises(UncodedSymbol):
        encode_stage_parsed(1, code, KeyStream(0), PrivateRandom(0))
    with pytest.raises(UncodedSymbol):
        encode_stage_unparsed(1, code, KeyStream(0))


def test_unparsed_examples():
    assert encode_stage_unparsed(0, ABC, tape(1)) == (1, 1)
    xs = [0, 1, 2, 2, 0]
    stream, records = encode_unparsed(xs, ABC, KeyStream(0))
    assert len(stream) == sum(ABC.lengths[x] for x in xs)
    assert decode_stream_unparsed(Bitstream(), ABC, KeyStream(0)) == []


def test_unparsed_roundtrip_and_truncation():
    rng = np.random.default_rng(0)
    p = (0.5, 0.25, 0.25)
    code = build_huffman(p)
    xs = rng.choice(3, size=10**4, p=p).tolist()
    stream, _ = encode_unparsed(xs, code, KeyStream(4))
    assert decode_stream_unparsed(stream, code, KeyStream(4)) == xs

    stream, _ = encode_unparsed([0, 1, 2], code, KeyStream(4))
    cut = Bitstream(stream.bits[:-1], None)
    with pytest.raises(Truncated) as exc:
        decode_stream_unparsed(cut, code, KeyStream(4))
    assert exc.value.symbols == [0, 1]
    assert exc.value.residual == 1


def test_rates_lln():
    p = (0.5, 0.25, 0.25)
    code = build_huffman(p)
    xs = np.random.default_rng(1).choice(3, size=10**5, p=p)
    ks = KeyStream(2)
    stream, records = encode_unparsed(xs, code, ks)
    assert abs(len(stream) / len(xs) - 1.5) <= 0.01
    assert abs(encoder_rate(records) - 1.5) <= 0.01
    ks = KeyStream(2)
    stream, records = encode_parsed(xs, code, ks, PrivateRandom(2))
    assert encoder_rate(records) == code.l_max
    assert abs(measured_key_rate(ks, len(xs)) - 1.5) <= 0.01


def test_encoder_rate_edge_cases():
    assert encoder_rate([StageRecord(1, 0, 2, 2, 0)]) == 2.0
    with pytest.raises(NoStages):
        encoder_rate([])


def test_parsed_rate_independent_of_sequence():
    code = build_huffman((0.7, 0.2, 0.1))
    for xs in ([0] * 50, [2] * 50, [0, 1, 2] * 20):
        stream, records = encode_parsed(xs, code, KeyStream(0), PrivateRandom(0))
        assert len(stream) == len(xs) * code.l_max
        assert stream.boundaries == list(range(0, len(stream), code.l_max))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 8), st.integers(0, 400), st.integers(0, 2**63))
def test_lossless_and_synchronized(seed, k, n, key_seed):
    rng = np.random.default_rng(seed)
    p = random_pmf(rng, k, 0.3)
    code = build_huffman(p)
    xs = rng.choice(k, size=n, p=p).tolist()

    alice, bob = KeyStream(key_seed), KeyStream(key_seed)
    stream, _ = encode_parsed(xs, code, alice, PrivateRandom(key_seed))
    assert decode_parsed(stream.unparsed_view(), code, bob) == xs
    assert alice.m == bob.m and alice.stage_log == bob.stage_log

    alice, bob = KeyStream(key_seed), KeyStream(key_seed)
    stream, _ = encode_unparsed(xs, code, alice)
    assert decode_stream_unparsed(stream.unparsed_view(), code, bob) == xs
    assert alice.m == bob.m and alice.stage_log == bob.stage_log
