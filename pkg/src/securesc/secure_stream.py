"""Shared key and private randomness with per-stage consumption accounting.

Both streams are driven by a counter-based generator (Philox) seeded from a
master seed plus a role label, so the key, the encoder's private
randomness and the source sampler never share a bit stream.  The bits are
test plumbing; the exact oracles in :mod:`securesc.eavesdrop_analysis`
treat key bits as ideal i.i.d. uniform.
"""

from __future__ import annotations

import csv
import io
import zlib

import numpy as np

from .errors import NoStages

_CHUNK_BYTES = 4096


def role_generator(seed: int, role: str) -> np.random.Generator:
    """Independent generator for ``role`` derived from one master seed."""
    tag = zlib.crc32(role.encode("utf-8"))
    ss = np.random.SeedSequence([int(seed) & (2**64 - 1), tag])
    return np.random.Generator(np.random.Philox(ss))


class BitSource:
    """Sequential uniform bit supply.

    Bits are produced in fixed-size chunks, so the sequence seen by a
    consumer does not depend on how it slices its requests.
    """

    role = "bits"

    def __init__(self, seed: int | None = 0, *, tape=None):
        self.seed = seed
        self._rng = None if tape is not None else role_generator(seed, self.role)
        self._buf: list[int] = [] if tape is None else [int(b) & 1 for b in tape]
        self._pos = 0
        self._finite = tape is not None
        self.consumed = 0

    @classmethod
    def from_bits(cls, bits, **kwargs):
        """A finite stream replaying ``bits``; raises ``EOFError`` when exhausted."""
        return cls(None, tape=bits, **kwargs)

    def _ensure(self, count: int) -> None:
        while len(self._buf) - self._pos < count:
            if self._finite:
                raise EOFError(f"{type(self).__name__} tape exhausted")
            chunk = self._rng.integers(0, 256, _CHUNK_BYTES, dtype=np.uint8)
            self._buf = self._buf[self._pos:] + np.unpackbits(chunk).tolist()
            self._pos = 0

    def take(self, count: int) -> list[int]:
        if count < 0:
            raise ValueError("count must be >= 0")
        self._ensure(count)
        out = self._buf[self._pos:self._pos + count]
        self._pos += count
        self.consumed += count
        return out

    def take_int(self, count: int) -> int:
        """Next ``count`` bits as an MSB-first integer."""
        v = 0
        for b in self.take(count):
            v = (v << 1) | b
        return v


class KeyStream(BitSource):
    """The shared one-time-pad key ``u_1, u_2, ...``.

    ``m`` is the running index ``m_t`` (bits used so far) and ``stage_log``
    holds ``l_{K_t} = m_t - m_{t-1}`` for every closed stage.
    """

    role = "key"

    def __init__(self, seed: int | None = 0, *, tape=None):
        super().__init__(seed, tape=tape)
        self.stage_log: list[int] = []
        self._stage_start = 0

    @property
    def m(self) -> int:
        return self.consumed

    def next_key_bits(self, count: int) -> np.ndarray:
        return np.array(self.take(count), dtype=np.uint8)

    def end_stage(self) -> int:
        """Close the current stage and log its key consumption."""
        used = self.consumed - self._stage_start
        self.stage_log.append(used)
        self._stage_start = self.consumed
        return used

    def cumulative(self) -> list[int]:
        return np.cumsum(self.stage_log, dtype=np.int64).tolist()

    def log_csv(self) -> str:
        """Per-stage log as CSV: ``stage,l_K_t,m_t``."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["stage", "l_K_t", "m_t"])
        for t, (lk, m) in enumerate(zip(self.stage_log, self.cumulative()), start=1):
            writer.writerow([t, lk, m])
        return buf.getvalue()


class PrivateRandom(BitSource):
    """The encoder's private randomness ``V_t``, never shared."""

    role = "private"

    def private_bits(self, count: int) -> np.ndarray:
        return np.array(self.take(count), dtype=np.uint8)


def measured_key_rate(ks: KeyStream, n: int | None = None) -> float:
    """Average key bits per stage over the first ``n`` logged stages."""
    log = ks.stage_log if n is None else ks.stage_log[:n]
    if not log or (n is not None and n < 1):
        raise NoStages("no stages logged")
    if n is not None and len(log) < n:
        raise NoStages(f"only {len(log)} stages logged, asked for {n}")
    return sum(log) / len(log)
