"""Real-time one-time-pad codecs for a memoryless source.

Two constructions are provided.

Parsed model (the eavesdropper sees stage boundaries)
    Every stage emits exactly ``l_max`` bits: the Huffman codeword of the
    current symbol XORed with ``l(x)`` fresh key bits, followed by
    ``l_max - l(x)`` private random pad bits.  Only ``l(x)`` key bits are
    spent per stage, so the key rate equals the Huffman length while the
    encoder rate is ``l_max``.

Unparsed model (the eavesdropper sees only the concatenated bits)
    Every stage emits the Huffman codeword XORed with ``l(x)`` key bits and
    nothing else.  Key rate and encoder rate both equal the Huffman length.

In both cases the decoder XORs incoming bits with key bits one at a time
until a codeword is recognized, so Alice and Bob consume identical key
prefixes without any side channel.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .bitstream import Bitstream, BitReader
from .errors import NoStages, Truncated
from .prefix_codes import PrefixCode
from .secure_stream import KeyStream, PrivateRandom


@dataclass(frozen=True)
class StageRecord:
    t: int
    symbol: int
    bits_emitted: int
    key_bits: int
    pad_bits: int


def encode_stage_parsed(x: int, code: PrefixCode, ks: KeyStream, pr: PrivateRandom) -> int:
    """One ``l_max``-bit block for symbol ``x``, returned MSB-first as an int."""
    word, length = code.codeword(x)
    pad = code.l_max - length
    enc = word ^ ks.take_int(length)
    ks.end_stage()
    return (enc << pad) | pr.take_int(pad)


def decode_stage_parsed(block: int, code: PrefixCode, ks: KeyStream) -> int:
    """Recover the symbol from an ``l_max``-bit block; trailing pad bits are ignored."""
    lm = code.l_max
    value = 0
    for length in range(1, lm + 1):
        bit = (block >> (lm - length)) & 1
        value = (value << 1) | (bit ^ ks.take_int(1))
        x = code.lookup(length, value)
        if x is not None:
            ks.end_stage()
            return x
    raise ValueError("block does not contain a codeword (incomplete code or desynchronized key)")


def encode_stage_unparsed(x: int, code: PrefixCode, ks: KeyStream) -> tuple[int, int]:
    """Encrypted codeword for ``x`` as ``(value, nbits)``; no padding."""
    word, length = code.codeword(x)
    enc = word ^ ks.take_int(length)
    ks.end_stage()
    return enc, length


def encode_parsed(
    symbols: Iterable[int], code: PrefixCode, ks: KeyStream, pr: PrivateRandom
) -> tuple[Bitstream, list[StageRecord]]:
    stream = Bitstream()
    records = []
    lm = code.l_max
    for t, x in enumerate(symbols, start=1):
        k0, p0 = ks.consumed, pr.consumed
        stream.begin_stage()
        stream.append(encode_stage_parsed(int(x), code, ks, pr), lm)
        records.append(StageRecord(t, int(x), lm, ks.consumed - k0, pr.consumed - p0))
    return stream, records


def decode_parsed(stream: Bitstream, code: PrefixCode, ks: KeyStream) -> list[int]:
    """Decode consecutive ``l_max``-bit blocks.  Block framing is implied by ``l_max``."""
    lm = code.l_max
    if len(stream) % lm:
        raise Truncated(
            f"{len(stream)} bits is not a whole number of {lm}-bit blocks",
            residual=len(stream) % lm,
        )
    reader = stream.reader()
    return [decode_stage_parsed(reader.read(lm), code, ks) for _ in range(len(stream) // lm)]


def encode_unparsed(
    symbols: Iterable[int], code: PrefixCode, ks: KeyStream
) -> tuple[Bitstream, list[StageRecord]]:
    stream = Bitstream()
    records = []
    for t, x in enumerate(symbols, start=1):
        stream.begin_stage()
        value, nbits = encode_stage_unparsed(int(x), code, ks)
        stream.append(value, nbits)
        records.append(StageRecord(t, int(x), nbits, nbits, 0))
    return stream, records


def decode_stream_unparsed(stream: Bitstream, code: PrefixCode, ks: KeyStream) -> list[int]:
    """Decode an unparsed stream using the key for parsing.

    Raises :class:`Truncated` (carrying the decoded prefix) if the stream
    ends inside a codeword.
    """
    reader: BitReader = stream.reader()
    out: list[int] = []
    lm = code.l_max
    while reader.remaining:
        value = 0
        for length in range(1, lm + 1):
            if not reader.remaining:
                raise Truncated(
                    f"stream ends {length - 1} bits into a codeword", out, residual=length - 1
                )
            value = (value << 1) | (reader.read_bit() ^ ks.take_int(1))
            x = code.lookup(length, value)
            if x is not None:
                ks.end_stage()
                out.append(x)
                break
        else:
            raise ValueError("no codeword within l_max bits (incomplete code or desynchronized key)")
    return out


def encoder_rate(records: list[StageRecord]) -> float:
    """Emitted bits per stage, ``l_{B_n} / n``."""
    if not records:
        raise NoStages("no stages recorded")
    return sum(r.bits_emitted for r in records) / len(records)


def key_rate(records: list[StageRecord]) -> float:
    if not records:
        raise NoStages("no stages recorded")
    return sum(r.key_bits for r in records) / len(records)
