"""Exact and Monte Carlo leakage oracles.

The exact oracles marginalize over the ideal uniform key law rather than a
particular pseudorandom tape:

* :func:`parsed_block_leakage` enumerates every (symbol, key, pad)
  combination fed through an actual stage encoder;
* :func:`unparsed_leakage` uses the fact that OTP-encrypted bits are
  independent of the source given their number, so only the total length
  ``l_{B_n}`` can leak, and its law is an ``n``-fold convolution;
* :func:`exact_equivocation` enumerates all source and side-information
  sequences for keyed block schemes.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .errors import TooLarge
from .prefix_codes import LengthPmf, PrefixCode, length_pmf
from .realtime_codec import encode_stage_parsed, encode_stage_unparsed
from .secure_stream import KeyStream, PrivateRandom, role_generator
from .source_model import SourceSpec, entropy, mutual_information

EQUIVOCATION_GUARD = 2**24


@dataclass(frozen=True)
class LeakageReport:
    model: str
    n: int
    mi_bits: float
    max_tv: float
    method: str = "exact"
    trials: int = 0
    stderr: float = 0.0

    def as_row(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class LengthDistribution:
    """``pmf[l] = P(l_{B_n} = l)``."""

    n: int
    pmf: np.ndarray

    @property
    def mean(self) -> float:
        return float(np.dot(np.arange(self.pmf.shape[0]), self.pmf))


def _report_from_joint(joint: np.ndarray, model: str, n: int, **kw) -> LeakageReport:
    px = joint.sum(axis=1)
    po = joint.sum(axis=0)
    pos = po > 0
    post = joint[:, pos] / po[pos]
    tv = float(np.abs(post - px[:, None]).max()) if pos.any() else 0.0
    return LeakageReport(model, n, mutual_information(joint), tv, **kw)


# ---------------------------------------------------------------- parsed model

StageEncoder = Callable[[int, PrefixCode, KeyStream, PrivateRandom], tuple[int, int]]


def parsed_encoder(x, code, ks, pr):
    return encode_stage_parsed(x, code, ks, pr), code.l_max


def encoder_without_xor(x, code, ks, pr):
    """Sabotage control: codeword sent in the clear, still padded."""
    word, length = code.codeword(x)
    pad = code.l_max - length
    return (word << pad) | pr.take_int(pad), code.l_max


def encoder_without_padding(x, code, ks, pr):
    """Sabotage control: encrypted codeword sent without padding."""
    value, nbits = encode_stage_unparsed(x, code, ks)
    return value, nbits


def parsed_block_joint(p, code: PrefixCode, encoder: StageEncoder = parsed_encoder):
    """Exact joint law of (symbol, observed block).

    Returns ``(joint, observations)`` where observations are
    ``(value, nbits)`` pairs.  Every stage encoder is driven with all
    ``2^l_max`` key tapes and all ``2^l_max`` pad tapes, each equally
    likely; encoders that consume fewer bits simply leave the tail unused.
    """
    p = np.asarray(p, dtype=np.float64)
    lm = code.l_max
    tapes = list(itertools.product((0, 1), repeat=lm))
    weight = 1.0 / (len(tapes) ** 2)
    index: dict[tuple[int, int], int] = {}
    cells: list[tuple[int, int, float]] = []
    for x in range(p.shape[0]):
        if p[x] <= 0:
            continue
        for key in tapes:
            for pad in tapes:
                obs = encoder(x, code, KeyStream.from_bits(key), PrivateRandom.from_bits(pad))
                j = index.setdefault(obs, len(index))
                cells.append((x, j, p[x] * weight))
    joint = np.zeros((p.shape[0], len(index)))
    for x, j, w in cells:
        joint[x, j] += w
    obs = sorted(index, key=index.get)
    return joint, obs


def parsed_block_leakage(p, code: PrefixCode, encoder: StageEncoder = parsed_encoder) -> LeakageReport:
    joint, _ = parsed_block_joint(p, code, encoder)
    return _report_from_joint(joint, "parsed", 1)


# -------------------------------------------------------------- unparsed model

def total_length_distribution(lp: LengthPmf, n: int) -> LengthDistribution:
    """Law of the total bit count after ``n`` stages (exact convolution)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    return LengthDistribution(n, _convolve_power(lp.pmf, n))


def _convolve_power(pmf: np.ndarray, n: int) -> np.ndarray:
    # square-and-multiply keeps the number of convolutions O(log n)
    result = np.array([1.0])
    base = np.asarray(pmf, dtype=np.float64)
    while n:
        if n & 1:
            result = np.convolve(result, base)
        n >>= 1
        if n:
            base = np.convolve(base, base)
    return result


def length_symbol_joint(p, code: PrefixCode, n: int) -> np.ndarray:
    """``P(x_t, l_{B_n})`` indexed ``[x, l]``.

    The other ``n - 1`` stages contribute an independent ``(n-1)``-fold
    convolution regardless of which stage ``t`` is examined.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    p = np.asarray(p, dtype=np.float64)
    rest = _convolve_power(length_pmf(p, code).pmf, n - 1)
    joint = np.zeros((p.shape[0], rest.shape[0] + code.l_max))
    for x, l in enumerate(code.lengths):
        if p[x] > 0:
            joint[x, l:l + rest.shape[0]] += p[x] * rest
    return joint


def unparsed_leakage(p, code: PrefixCode, n: int) -> LeakageReport:
    """Exact ``I(X_t; B_n)``, which equals ``I(X_t; l_{B_n})`` under the OTP."""
    return _report_from_joint(length_symbol_joint(p, code, n), "unparsed", n)


def mi_estimate(xs: np.ndarray, obs: np.ndarray) -> tuple[float, float]:
    """Bias-corrected plug-in MI (bits) and its delta-method standard error."""
    N = xs.shape[0]
    _, xi = np.unique(xs, return_inverse=True)
    _, oi = np.unique(obs, return_inverse=True)
    counts = np.zeros((xi.max() + 1, oi.max() + 1))
    np.add.at(counts, (xi, oi), 1.0)
    pj = counts / N
    px = pj.sum(axis=1, keepdims=True)
    po = pj.sum(axis=0, keepdims=True)
    nz = pj > 0
    ratio = np.zeros_like(pj)
    ratio[nz] = np.log2(pj[nz] / (px @ po)[nz])
    mi = float((pj * ratio).sum())
    second = float((pj * ratio**2).sum())
    se = math.sqrt(max(second - mi**2, 0.0) / N)
    # Miller-Madow correction applied to the three entropy terms
    kx, ko, kj = int((px > 0).sum()), int((po > 0).sum()), int(nz.sum())
    mi -= (kj - kx - ko + 1) / (2 * N * math.log(2))
    return max(mi, 0.0), se


def empirical_posterior(p, code: PrefixCode, n: int, trials: int, seed: int, t: int = 1) -> LeakageReport:
    """Monte Carlo estimate of ``I(X_t; l_{B_n})`` from simulated bitstreams.

    Each trial draws ``n`` source symbols and runs them through the
    unparsed encoder on fresh key bits, recording the stage-``t`` symbol and
    the total number of emitted bits.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 1 <= t <= n:
        raise ValueError("t must lie in 1..n")
    p = np.asarray(p, dtype=np.float64)
    rng = role_generator(seed, "source")
    xs = rng.choice(p.shape[0], size=(trials, n), p=p)
    ks = KeyStream(seed)
    totals = np.empty(trials, dtype=np.int64)
    for i in range(trials):
        totals[i] = sum(encode_stage_unparsed(int(x), code, ks)[1] for x in xs[i])
    target = xs[:, t - 1]
    mi, se = mi_estimate(target, totals)
    joint_counts = np.zeros((p.shape[0], totals.max() + 1))
    np.add.at(joint_counts, (target, totals), 1.0)
    rep = _report_from_joint(joint_counts / trials, "unparsed", n)
    return LeakageReport("unparsed", n, mi, rep.max_tv, "mc", trials, se)


# ------------------------------------------------------------- block schemes

@dataclass(frozen=True)
class KeyedBlockScheme:
    """Deterministic block message, leading bits masked by a one-time pad.

    ``message[i]`` is the ``message_bits``-bit word sent for the ``i``-th
    source sequence (sequences indexed in base ``|X|``, first symbol most
    significant).  The first ``key_bits`` bits of the word are XORed with a
    uniform key, the rest travel in the clear.
    """

    message: np.ndarray
    message_bits: int
    key_bits: int

    def __post_init__(self):
        if not 0 <= self.key_bits <= self.message_bits:
            raise ValueError("key_bits must lie in 0..message_bits")

    def encode(self, key: int) -> np.ndarray:
        return np.asarray(self.message, dtype=np.int64) ^ (key << (self.message_bits - self.key_bits))

    def observation_law(self, px_seq: np.ndarray, enumerate_keys: bool | None = None) -> np.ndarray:
        """``P(x^n, z)`` as a dense ``[x^n, z]`` array over the reachable ``z`` only.

        With ``enumerate_keys`` false the masked bits are dropped: under a
        uniform key they are uniform and independent of everything else, so
        every conditional entropy involving ``Z`` is unchanged.  By default
        keys are enumerated whenever that fits :data:`EQUIVOCATION_GUARD`.
        """
        nkeys = 1 << self.key_bits
        if enumerate_keys is None:
            enumerate_keys = nkeys * px_seq.shape[0] <= EQUIVOCATION_GUARD
        if not enumerate_keys:
            tail = np.asarray(self.message, dtype=np.int64) & ((1 << (self.message_bits - self.key_bits)) - 1)
            _, zi = np.unique(tail, return_inverse=True)
            joint = np.zeros((px_seq.shape[0], int(zi.max()) + 1))
            joint[np.arange(px_seq.shape[0]), zi] = px_seq
            return joint
        z = np.stack([self.encode(key) for key in range(nkeys)])
        _, zi = np.unique(z, return_inverse=True)
        zi = zi.reshape(z.shape)
        joint = np.zeros((px_seq.shape[0], int(zi.max()) + 1))
        rows = np.broadcast_to(np.arange(px_seq.shape[0]), zi.shape)
        np.add.at(joint, (rows, zi), np.broadcast_to(px_seq / nkeys, zi.shape))
        return joint


def sequence_probs(p, n: int) -> np.ndarray:
    """``P(x^n)`` for all sequences, base-``|X|`` order."""
    out = np.array([1.0])
    for _ in range(n):
        out = np.outer(out, np.asarray(p, dtype=np.float64)).ravel()
    return out


def _apply_channel(joint: np.ndarray, channel: np.ndarray, n: int, nx: int) -> np.ndarray:
    """Map ``[x^n, z]`` to ``[w^n, z]`` through a memoryless channel, one letter at a time."""
    nz = joint.shape[1]
    nw = channel.shape[1]
    arr = joint.reshape((nx,) * n + (nz,))
    for axis in range(n):
        arr = np.moveaxis(np.tensordot(arr, channel, axes=([axis], [0])), -1, axis)
    return arr.reshape(nw**n, nz)


def exact_equivocation(spec: SourceSpec, scheme: KeyedBlockScheme, n: int,
                       enumerate_keys: bool | None = None) -> float:
    """``(1/n) H(X^n | W^n, Z)`` by exhaustive enumeration.

    Uses ``H(X,W,Z) = H(X,Z) + n H(W|X)`` (the transmission depends on the
    source only) and ``H(W,Z)`` obtained by pushing ``P(x^n, z)`` through
    the composed channel ``P(w|x)``.
    """
    nx, _, nw, _ = spec.alphabet_sizes
    if nx**n * nw**n > EQUIVOCATION_GUARD:
        raise TooLarge(f"|X|^n |W|^n = {nx**n * nw**n} exceeds {EQUIVOCATION_GUARD}")
    pxs = sequence_probs(spec.px, n)
    if scheme.message.shape[0] != pxs.shape[0]:
        raise ValueError("scheme message table does not cover all source sequences")
    pxz = scheme.observation_law(pxs, enumerate_keys)
    pwx = spec.pw_given_x
    h_w_given_x = entropy(spec.px[:, None] * pwx) - entropy(spec.px)
    pwz = _apply_channel(pxz, pwx, n, nx)
    h = entropy(pxz) + n * h_w_given_x - entropy(pwz)
    return max(h, 0.0) / n
