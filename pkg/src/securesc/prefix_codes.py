"""Canonical Huffman codes and Huffman lengths.

Codes are built only over the positive-probability support.  Ties are
broken deterministically so that the same distribution always yields the
same bit patterns:

* leaves are created in order of (probability descending, index ascending);
* each merge takes the two lightest nodes, earliest-created first;
* codewords are assigned canonically by (length, symbol index).

Codewords are stored as integers read MSB-first.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import EmptySupport, Truncated, UncodedSymbol


@dataclass(frozen=True)
class PrefixCode:
    """Binary prefix code over symbols ``0..size-1``.

    ``lengths[x] == 0`` marks a symbol without a codeword.
    """

    lengths: tuple[int, ...]
    codewords: tuple[int, ...]
    _table: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        table = {
            (l, c): x for x, (l, c) in enumerate(zip(self.lengths, self.codewords)) if l > 0
        }
        object.__setattr__(self, "_table", table)

    @property
    def size(self) -> int:
        return len(self.lengths)

    @property
    def l_max(self) -> int:
        return max(self.lengths)

    @property
    def coded_symbols(self) -> list[int]:
        return [x for x, l in enumerate(self.lengths) if l > 0]

    def codeword(self, x: int) -> tuple[int, int]:
        """``(pattern, length)`` for symbol ``x``."""
        if x < 0 or x >= self.size or self.lengths[x] == 0:
            raise UncodedSymbol(f"symbol {x} has no codeword")
        return self.codewords[x], self.lengths[x]

    def bits(self, x: int) -> str:
        c, l = self.codeword(x)
        return format(c, f"0{l}b")

    def lookup(self, length: int, value: int) -> int | None:
        """Symbol whose codeword is ``value`` on ``length`` bits, if any."""
        return self._table.get((length, value))

    def kraft_numerator(self) -> int:
        """``sum 2^(l_max - l(x))``; equals ``2^l_max`` iff Kraft-complete."""
        lm = self.l_max
        return sum(1 << (lm - l) for l in self.lengths if l > 0)

    def is_complete(self) -> bool:
        return self.kraft_numerator() == 1 << self.l_max

    def to_json(self) -> str:
        rows = [
            {"symbol": x, "length": l, "codeword": format(c, f"0{l}b")}
            for x, (l, c) in enumerate(zip(self.lengths, self.codewords))
            if l > 0
        ]
        return json.dumps({"size": self.size, "codewords": rows}, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "PrefixCode":
        doc = json.loads(text)
        lengths = [0] * doc["size"]
        words = [0] * doc["size"]
        for row in doc["codewords"]:
            if len(row["codeword"]) != row["length"]:
                raise ValueError(f"codeword length mismatch for symbol {row['symbol']}")
            lengths[row["symbol"]] = row["length"]
            words[row["symbol"]] = int(row["codeword"], 2)
        return cls(tuple(lengths), tuple(words))


def huffman_lengths(p) -> tuple[int, ...]:
    """Optimal codeword lengths for ``p`` (0 for zero-probability symbols)."""
    p = np.asarray(p, dtype=np.float64)
    support = [x for x in range(p.shape[0]) if p[x] > 0]
    if not support:
        raise EmptySupport("distribution has no positive entries")
    lengths = [0] * p.shape[0]
    if len(support) == 1:
        # lengths are positive integers, so a sure symbol still costs one bit
        lengths[support[0]] = 1
        return tuple(lengths)

    order = sorted(support, key=lambda x: (-p[x], x))
    heap = []
    members: list[list[int]] = []
    for x in order:
        heap.append((float(p[x]), len(members)))
        members.append([x])
    heapq.heapify(heap)
    while len(heap) > 1:
        w1, a = heapq.heappop(heap)
        w2, b = heapq.heappop(heap)
        for x in members[a]:
            lengths[x] += 1
        for x in members[b]:
            lengths[x] += 1
        heapq.heappush(heap, (w1 + w2, len(members)))
        members.append(members[a] + members[b])
    return tuple(lengths)


def canonical_code(lengths: Iterable[int]) -> PrefixCode:
    """Assign canonical codewords to a Kraft-satisfying length vector."""
    lengths = tuple(int(l) for l in lengths)
    words = [0] * len(lengths)
    code = 0
    prev = 0
    for x in sorted((x for x, l in enumerate(lengths) if l > 0), key=lambda x: (lengths[x], x)):
        code <<= lengths[x] - prev
        words[x] = code
        prev = lengths[x]
        code += 1
    if code > 1 << prev:
        raise ValueError("lengths violate Kraft's inequality")
    return PrefixCode(lengths, tuple(words))


def build_huffman(p) -> PrefixCode:
    return canonical_code(huffman_lengths(p))


def expected_length(p, code: PrefixCode) -> float:
    p = np.asarray(p, dtype=np.float64)
    return float(np.dot(p, np.asarray(code.lengths, dtype=np.float64)))


def huffman_length(p) -> float:
    """``L(p)``: minimum expected length over instantaneous codes."""
    return expected_length(p, build_huffman(p))


def conditional_huffman_length(joint) -> float:
    """``L(X|Y) = sum_y P(y) L(X|Y=y)`` for a joint indexed ``[x, y]``."""
    joint = np.asarray(joint, dtype=np.float64)
    total = 0.0
    for y in range(joint.shape[1]):
        py = joint[:, y].sum()
        if py > 0:
            total += py * huffman_length(joint[:, y] / py)
    return total


@dataclass(frozen=True)
class LengthPmf:
    """``pmf[l]`` is the probability that the codeword has ``l`` bits."""

    pmf: np.ndarray

    @property
    def l_max(self) -> int:
        return self.pmf.shape[0] - 1

    @property
    def mean(self) -> float:
        return float(np.dot(np.arange(self.pmf.shape[0]), self.pmf))


def length_pmf(p, code: PrefixCode) -> LengthPmf:
    p = np.asarray(p, dtype=np.float64)
    pmf = np.zeros(code.l_max + 1)
    for x, l in enumerate(code.lengths):
        if p[x] > 0:
            if l == 0:
                raise UncodedSymbol(f"symbol {x} has probability {p[x]} but no codeword")
            pmf[l] += p[x]
    return LengthPmf(pmf)


def decode_one(reader, code: PrefixCode) -> tuple[int, int]:
    """Read one codeword from ``reader`` and return ``(symbol, bits consumed)``.

    ``reader`` needs ``read_bit()`` and ``remaining``; see
    :class:`securesc.bitstream.BitReader`.
    """
    value = 0
    for length in range(1, code.l_max + 1):
        if reader.remaining == 0:
            raise Truncated(f"stream ended after {length - 1} bits of a codeword", residual=length - 1)
        value = (value << 1) | reader.read_bit()
        x = code.lookup(length, value)
        if x is not None:
            return x, length
    raise ValueError(f"bits {value:0{code.l_max}b} are not a codeword (incomplete code)")
