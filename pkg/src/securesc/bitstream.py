"""Packed bit sequences, a read cursor, and the on-disk bitstream format.

File layout (big-endian)::

    magic    4 bytes  b"SCSC"
    version  u8       1
    model    u8       0 = parsed, 1 = unparsed
    l_max    u8
    nbits    u64      payload bits, excluding byte padding
    payload  ceil(nbits / 8) bytes, MSB-first, zero-padded

Stage boundaries are never part of the payload.  For the parsed model they
can be exported separately as ``stage,start`` CSV.
"""

from __future__ import annotations

import csv
import io
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError

MAGIC = b"SCSC"
VERSION = 1
MODELS = {"parsed": 0, "unparsed": 1}
_HEADER = struct.Struct(">4sBBBQ")


@dataclass
class Bitstream:
    """Bits (one per byte in ``bits``) plus optional stage start offsets."""

    bits: bytearray = field(default_factory=bytearray)
    boundaries: list[int] | None = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.bits)

    def append(self, value: int, nbits: int) -> None:
        """Append the low ``nbits`` of ``value``, most significant first."""
        self.bits.extend((value >> (nbits - 1 - i)) & 1 for i in range(nbits))

    def begin_stage(self) -> None:
        if self.boundaries is not None:
            self.boundaries.append(len(self.bits))

    def unparsed_view(self) -> "Bitstream":
        """Copy with the stage-boundary index withheld."""
        return Bitstream(bytearray(self.bits), None)

    def to_bytes(self) -> bytes:
        return np.packbits(np.frombuffer(bytes(self.bits), dtype=np.uint8)).tobytes()

    @classmethod
    def from_bytes(cls, payload: bytes, nbits: int) -> "Bitstream":
        bits = np.unpackbits(np.frombuffer(payload, dtype=np.uint8))[:nbits]
        return cls(bytearray(bits.tobytes()), None)

    def reader(self, start: int = 0) -> "BitReader":
        return BitReader(self.bits, start)

    def boundaries_csv(self) -> str:
        if self.boundaries is None:
            raise ValueError("stage boundaries are not available for this stream")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["stage", "start"])
        for t, start in enumerate(self.boundaries, start=1):
            w.writerow([t, start])
        return buf.getvalue()


class BitReader:
    """Forward cursor over a bit sequence."""

    def __init__(self, bits, pos: int = 0):
        self._bits = bits
        self.pos = pos

    @property
    def remaining(self) -> int:
        return len(self._bits) - self.pos

    def read_bit(self) -> int:
        if self.pos >= len(self._bits):
            raise EOFError("read past end of bitstream")
        b = self._bits[self.pos]
        self.pos += 1
        return b

    def read(self, nbits: int) -> int:
        v = 0
        for _ in range(nbits):
            v = (v << 1) | self.read_bit()
        return v


def pack_file(stream: Bitstream, model: str, l_max: int) -> bytes:
    if model not in MODELS:
        raise ValueError(f"model must be one of {sorted(MODELS)}")
    header = _HEADER.pack(MAGIC, VERSION, MODELS[model], l_max, len(stream))
    return header + stream.to_bytes()


def unpack_file(data: bytes) -> tuple[Bitstream, str, int]:
    """Parse a bitstream file; returns ``(stream, model, l_max)``."""
    if len(data) < _HEADER.size:
        raise FormatError("file shorter than header")
    magic, version, model, l_max, nbits = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"unsupported version {version}")
    names = {v: k for k, v in MODELS.items()}
    if model not in names:
        raise FormatError(f"unknown model byte {model}")
    payload = data[_HEADER.size:]
    if len(payload) != (nbits + 7) // 8:
        raise FormatError(f"payload has {len(payload)} bytes, header says {nbits} bits")
    return Bitstream.from_bytes(payload, nbits), names[model], l_max
