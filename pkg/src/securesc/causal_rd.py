"""Causal rate-distortion with decoder side information and a secrecy target.

The rate needed for a memoryless quantizer ``f`` is ``H(f(X)|Y)``; the
best rate at distortion ``D`` is

    r(D) = min { H(f(X)|Y) : E d(X, f(X)) <= D }

taken over all deterministic maps ``f: X -> X_hat``, and time-sharing
between two maps attains its lower convex envelope ``r_bar``.  A quadruple
``(R, R_K, D, h)`` is achievable iff

    h <= H(X|W),  D >= D_min,  R >= r_bar(D),
    R_K >= max(0, h - H(X|W) + r_bar(D)).

:func:`separation_scheme_run` simulates the matching construction:
time-shared quantization, random binning against ``Y`` and a one-time pad
over the leading bits of the bin index.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .eavesdrop_analysis import EQUIVOCATION_GUARD, KeyedBlockScheme, exact_equivocation
from .errors import Infeasible, TooLarge
from .secure_stream import KeyStream, role_generator
from .source_model import SourceSpec, conditional_entropy, joint_xy, marginals_and_chain, sample

FUNCTION_GUARD = 10**7
SW_MAX_N = 24
SW_MAX_CANDIDATES = 2**22
D_TOL = 1e-12


@dataclass(frozen=True)
class ReproductionFunction:
    mapping: tuple[int, ...]
    distortion: float
    rate: float

    def describe(self) -> str:
        return "f=" + "".join(str(v) for v in self.mapping) if max(self.mapping) < 10 else (
            "f=" + ",".join(str(v) for v in self.mapping)
        )


def evaluate_function(spec: SourceSpec, mapping: Sequence[int]) -> ReproductionFunction:
    """Exact ``(E d(X, f(X)), H(f(X)|Y))`` for one map."""
    mapping = tuple(int(v) for v in mapping)
    nxh = spec.alphabet_sizes[3]
    pxy = joint_xy(spec)
    j = np.zeros((nxh, pxy.shape[1]))
    np.add.at(j, np.asarray(mapping), pxy)
    dist = float(sum(spec.px[x] * spec.distortion[x, v] for x, v in enumerate(mapping)))
    return ReproductionFunction(mapping, dist, conditional_entropy(j))


def enumerate_functions(spec: SourceSpec) -> Iterator[ReproductionFunction]:
    nx, _, _, nxh = spec.alphabet_sizes
    if nxh**nx > FUNCTION_GUARD:
        raise TooLarge(f"|X_hat|^|X| = {nxh**nx} exceeds {FUNCTION_GUARD}")
    for mapping in itertools.product(range(nxh), repeat=nx):
        yield evaluate_function(spec, mapping)


def opta_r(spec: SourceSpec, D: float, functions=None) -> float:
    """``r(D)`` by exhaustive search; raises :class:`Infeasible` below ``D_min``."""
    functions = list(enumerate_functions(spec)) if functions is None else functions
    feasible = [f.rate for f in functions if f.distortion <= D + D_TOL]
    if not feasible:
        raise Infeasible(f"no reproduction function has distortion <= {D}")
    return min(feasible)


@dataclass(frozen=True)
class EnvelopeCurve:
    """Convex, nonincreasing piecewise-linear curve through ``vertices``.

    Beyond the last vertex the curve stays flat at its minimum.  ``labels``
    carries whatever achieves each vertex (a :class:`ReproductionFunction`
    when built by :func:`opta_envelope`).
    """

    D: np.ndarray
    H: np.ndarray
    labels: tuple = ()

    @property
    def vertices(self) -> list[tuple[float, float]]:
        return list(zip(self.D.tolist(), self.H.tolist()))

    def __call__(self, D: float) -> float:
        i, j, lam = self.segment(D)
        return float(lam * self.H[i] + (1 - lam) * self.H[j])

    def segment(self, D: float) -> tuple[int, int, float]:
        """Vertex indices ``(i, j)`` bracketing ``D`` and the weight on ``i``.

        ``i == j`` when ``D`` sits on a vertex or beyond the last one.
        """
        if D < self.D[0] - D_TOL:
            raise Infeasible(f"D = {D} is below the smallest achievable distortion {self.D[0]}")
        last = len(self.D) - 1
        for i in range(last + 1):
            if abs(D - self.D[i]) <= D_TOL:
                return i, i, 1.0
        if D >= self.D[last]:
            return last, last, 1.0
        j = int(np.searchsorted(self.D, D))
        i = j - 1
        lam = (self.D[j] - D) / (self.D[j] - self.D[i])
        return i, j, float(lam)


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def lower_envelope(points: Sequence[tuple[float, float]], labels: Sequence | None = None) -> EnvelopeCurve:
    """Lower-left convex hull of ``points``, cut where it stops decreasing."""
    if not len(points):
        raise ValueError("need at least one point")
    labels = list(labels) if labels is not None else [None] * len(points)
    order = sorted(range(len(points)), key=lambda i: (points[i][0], points[i][1]))
    hull: list[int] = []
    for i in order:
        if hull and tuple(points[i]) == tuple(points[hull[-1]]):
            continue
        while len(hull) >= 2 and _cross(points[hull[-2]], points[hull[-1]], points[i]) <= 0:
            hull.pop()
        hull.append(i)
    # keep the strictly decreasing prefix; the flat extension is implicit
    kept = [hull[0]]
    for i in hull[1:]:
        if points[i][1] < points[kept[-1]][1]:
            kept.append(i)
        else:
            break
    return EnvelopeCurve(
        np.array([points[i][0] for i in kept], dtype=np.float64),
        np.array([points[i][1] for i in kept], dtype=np.float64),
        tuple(labels[i] for i in kept),
    )


def opta_envelope(spec: SourceSpec, functions=None) -> EnvelopeCurve:
    functions = list(enumerate_functions(spec)) if functions is None else functions
    return lower_envelope([(f.distortion, f.rate) for f in functions], functions)


# ---------------------------------------------------------------- region

@dataclass(frozen=True)
class RateQuadruple:
    R: float
    R_K: float
    D: float
    h: float

    def __post_init__(self):
        if min(self.R, self.R_K, self.D, self.h) < 0:
            raise ValueError("rate quadruple entries must be nonnegative")


@dataclass(frozen=True)
class RegionVerdict:
    inside: bool
    failed: tuple[str, ...]
    r_bar: float | None
    key_rate_required: float | None
    H_X_given_W: float
    D_min: float

    def __bool__(self) -> bool:
        return self.inside


def required_key_rate(h: float, H_X_given_W: float, r_bar: float) -> float:
    """Key bits per symbol; zero when no encryption is needed."""
    return max(0.0, h - H_X_given_W + r_bar)


def region_contains(q: RateQuadruple, spec: SourceSpec, curve: EnvelopeCurve | None = None,
                    tol: float = D_TOL) -> RegionVerdict:
    curve = opta_envelope(spec) if curve is None else curve
    hxw = marginals_and_chain(spec).H_X_given_W
    d_min = spec.D_min
    failed = []
    if q.h > hxw + tol:
        failed.append("equivocation")
    r_bar = key_req = None
    if q.D < d_min - tol:
        failed.append("distortion")
    else:
        r_bar = curve(q.D)
        key_req = required_key_rate(q.h, hxw, r_bar)
        if q.R < r_bar - tol:
            failed.append("rate")
        if q.R_K < key_req - tol:
            failed.append("key_rate")
    return RegionVerdict(not failed, tuple(failed), r_bar, key_req, hxw, d_min)


# ---------------------------------------------------------- time sharing

@dataclass(frozen=True)
class TimeSharing:
    """Use ``f1`` on a fraction ``lam`` of the symbols, ``f2`` on the rest.

    ``f1`` is the lower-distortion quantizer.
    """

    f1: ReproductionFunction
    f2: ReproductionFunction
    lam: float

    @property
    def distortion(self) -> float:
        return self.lam * self.f1.distortion + (1 - self.lam) * self.f2.distortion

    @property
    def rate(self) -> float:
        return self.lam * self.f1.rate + (1 - self.lam) * self.f2.rate

    def schedule(self, n: int) -> list[ReproductionFunction]:
        """Deterministic interleaving: the first ``ceil(lam n)`` symbols use ``f1``."""
        n1 = min(n, math.ceil(self.lam * n - 1e-9))
        return [self.f1] * n1 + [self.f2] * (n - n1)


def design_time_sharing(spec: SourceSpec, D_target: float, curve: EnvelopeCurve | None = None) -> TimeSharing:
    curve = opta_envelope(spec) if curve is None else curve
    i, j, lam = curve.segment(D_target)
    return TimeSharing(curve.labels[i], curve.labels[j], lam)


# --------------------------------------------------------- Slepian-Wolf

def _bin_count_bits(n: int, rate: float) -> int:
    return max(0, math.ceil(n * rate - 1e-9))


@dataclass
class SlepianWolfCode:
    """Random binning of quantized sequences with in-bin MAP decoding.

    ``joints[t]`` is ``P(x_hat_t, y_t)`` for position ``t``.  Bins are
    ``2^ceil(n rate)`` values of the XOR of independent uniform per-position
    tables (a universal hash family); when that many bins can index every
    sequence outright, the mixed-radix sequence index is used instead so
    bins are singletons.  Decoding picks the most probable candidate in the
    bin given ``y``; ties are declared decoding errors.
    """

    joints: np.ndarray
    rate: float
    seed: int = 0
    mode: str = "search"
    nbits: int = field(init=False)

    def __post_init__(self):
        self.joints = np.asarray(self.joints, dtype=np.float64)
        n, nxh, _ = self.joints.shape
        if self.mode not in ("search", "ideal"):
            raise ValueError("mode must be 'search' or 'ideal'")
        self.nbits = _bin_count_bits(n, self.rate)
        self.systematic = self.nbits >= n * math.log2(nxh) - 1e-9 if nxh > 1 else True
        with np.errstate(divide="ignore"):
            self._logj = np.log(self.joints)
        if self.mode == "ideal":
            self.cond_entropy = sum(conditional_entropy(j) for j in self.joints)
            return
        if n > SW_MAX_N:
            raise TooLarge(f"n = {n} exceeds {SW_MAX_N} for exhaustive bin search")
        images = [np.flatnonzero(j.sum(axis=1) > 0) for j in self.joints]
        count = math.prod(len(im) for im in images)
        if count > SW_MAX_CANDIDATES:
            raise TooLarge(f"{count} candidate sequences exceed {SW_MAX_CANDIDATES}")
        if self.systematic and nxh**n >= 2**63:
            raise TooLarge("systematic bin index does not fit in 64 bits")
        if not self.systematic:
            if self.nbits > 63:
                raise TooLarge(f"{self.nbits}-bit bin index does not fit in 64 bits")
            rng = role_generator(self.seed, "binning")
            self._tables = rng.integers(0, 2**self.nbits, size=(n, nxh), dtype=np.uint64)
        grids = np.meshgrid(*images, indexing="ij")
        self.candidates = np.stack([g.ravel() for g in grids], axis=1).astype(np.intp)
        bins = self.bin_of(self.candidates)
        self._order = np.argsort(bins, kind="stable")
        self._sorted_bins = bins[self._order]

    def bin_of(self, seqs: np.ndarray) -> np.ndarray:
        """Bin indices for an ``(m, n)`` array of quantized sequences."""
        seqs = np.atleast_2d(seqs)
        n, nxh, _ = self.joints.shape
        if self.systematic:
            out = np.zeros(seqs.shape[0], dtype=np.uint64)
            for t in range(n):
                out = out * np.uint64(nxh) + seqs[:, t].astype(np.uint64)
            return out
        out = np.zeros(seqs.shape[0], dtype=np.uint64)
        for t in range(n):
            out ^= self._tables[t, seqs[:, t]]
        return out

    def encode(self, xhat: np.ndarray) -> int:
        return int(self.bin_of(np.asarray(xhat)[None, :])[0])

    def decode(self, bin_index: int, y: np.ndarray) -> tuple[np.ndarray, bool]:
        """Best candidate in the bin and whether it was a unique maximum."""
        n = self.joints.shape[0]
        scores_y = self._logj[np.arange(n), :, np.asarray(y)]
        lo = np.searchsorted(self._sorted_bins, np.uint64(bin_index), side="left")
        hi = np.searchsorted(self._sorted_bins, np.uint64(bin_index), side="right")
        if lo == hi:
            return self._letterwise(scores_y), False
        cand = self.candidates[self._order[lo:hi]]
        scores = scores_y[np.arange(n), cand].sum(axis=1)
        best = int(np.argmax(scores))
        unique = np.isfinite(scores[best]) and int(np.sum(scores >= scores[best] - 1e-12)) == 1
        return cand[best], bool(unique)

    def _letterwise(self, scores_y: np.ndarray) -> np.ndarray:
        return np.argmax(scores_y, axis=1)

    def transmit(self, xhat: np.ndarray, y: np.ndarray) -> tuple[int, np.ndarray, bool]:
        """Encode and decode one sequence; returns ``(bin, decoded, success)``."""
        xhat = np.asarray(xhat)
        if self.mode == "ideal":
            ok = self.nbits >= self.cond_entropy - 1e-9
            n = self.joints.shape[0]
            dec = xhat if ok else self._letterwise(self._logj[np.arange(n), :, np.asarray(y)])
            return 0, dec, ok
        b = self.encode(xhat)
        dec, unique = self.decode(b, y)
        return b, dec, unique and bool(np.array_equal(dec, xhat))


def slepian_wolf(xhat, y, rate: float, seed: int, joints) -> tuple[int, int, np.ndarray, bool]:
    """Bin ``xhat`` at ``rate`` bits/symbol and decode with ``y``.

    Returns ``(bin index, bin bits, decoded sequence, success)``.
    """
    code = SlepianWolfCode(joints, rate, seed)
    b, dec, ok = code.transmit(xhat, y)
    return b, code.nbits, dec, ok


def quantized_joints(spec: SourceSpec, schedule: Sequence[ReproductionFunction]) -> np.ndarray:
    """``P(x_hat_t, y_t)`` for each position of a quantizer schedule."""
    pxy = joint_xy(spec)
    nxh = spec.alphabet_sizes[3]
    out = np.zeros((len(schedule), nxh, pxy.shape[1]))
    for t, f in enumerate(schedule):
        np.add.at(out[t], np.asarray(f.mapping), pxy)
    return out


# --------------------------------------------------- separation scheme

@dataclass(frozen=True)
class SchemeStats:
    n: int
    trials: int
    D_target: float
    h: float
    r_bar: float
    H_X_given_W: float
    D_min: float
    d_min: float
    lam: float
    f1: str
    f2: str
    sw_rate: float
    message_bits: int
    key_bits: int
    R_hat: float
    R_K_hat: float
    D_design: float
    D_hat: float
    D_hat_stderr: float
    error_rate: float
    equivocation: float | None

    def as_record(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def separation_scheme_run(
    spec: SourceSpec,
    D: float,
    h: float,
    n: int,
    seed: int = 0,
    trials: int = 1,
    sw_margin: float = 0.0,
    sw_mode: str = "search",
    full_otp: bool = False,
    equivocation: bool = True,
) -> SchemeStats:
    """Quantize, bin and partially encrypt ``trials`` blocks of length ``n``.

    The key budget is ``ceil(n max(0, h - H(X|W) + r_bar(D)))`` bits, padded
    over the leading bits of the bin index (the whole index when
    ``full_otp``).  The binning rate is ``r_bar(D) + sw_margin``.  Exact
    equivocation is computed when enumeration fits its guard.
    """
    if n < 1 or trials < 1:
        raise ValueError("n and trials must be >= 1")
    functions = list(enumerate_functions(spec))
    curve = opta_envelope(spec, functions)
    cm = marginals_and_chain(spec)
    hxw = cm.H_X_given_W
    if h > hxw + D_TOL:
        raise Infeasible(f"h = {h} exceeds H(X|W) = {hxw}")
    ts = design_time_sharing(spec, D, curve)
    r_bar = curve(D)
    schedule = ts.schedule(n)
    joints = quantized_joints(spec, schedule)
    sw_rate = r_bar + sw_margin
    sw = SlepianWolfCode(joints, sw_rate, seed, sw_mode)
    nbits = sw.nbits
    key_bits = nbits if full_otp else math.ceil(n * required_key_rate(h, hxw, r_bar))
    if key_bits > nbits:
        raise ValueError(f"key budget {key_bits} exceeds the {nbits}-bit bin index; raise sw_margin")

    maps = np.array([f.mapping for f in schedule], dtype=np.intp)
    x, y, _ = sample(spec, n * trials, seed)
    x = x.reshape(trials, n)
    y = y.reshape(trials, n)
    xhat = maps[np.arange(n), x]
    ks = KeyStream(seed)
    bob = KeyStream(seed)
    shift = nbits - key_bits
    dists = np.empty(trials)
    errors = 0
    for i in range(trials):
        if sw_mode == "ideal":
            _, dec, ok = sw.transmit(xhat[i], y[i])
        else:
            b = sw.encode(xhat[i])
            z = b ^ (ks.take_int(key_bits) << shift)
            ks.end_stage()
            b_bob = z ^ (bob.take_int(key_bits) << shift)
            bob.end_stage()
            dec, unique = sw.decode(b_bob, y[i])
            ok = unique and bool(np.array_equal(dec, xhat[i]))
        errors += not ok
        dists[i] = spec.distortion[x[i], dec].mean()

    eq = None
    nx, _, nw, _ = spec.alphabet_sizes
    if equivocation and sw_mode == "search" and nx**n * nw**n <= EQUIVOCATION_GUARD:
        seqs = np.array(list(itertools.product(range(nx), repeat=n)), dtype=np.intp).reshape(-1, n)
        message = sw.bin_of(maps[np.arange(n), seqs]).astype(np.int64)
        eq = exact_equivocation(spec, KeyedBlockScheme(message, nbits, key_bits), n)

    return SchemeStats(
        n=n,
        trials=trials,
        D_target=float(D),
        h=float(h),
        r_bar=r_bar,
        H_X_given_W=hxw,
        D_min=spec.D_min,
        d_min=spec.d_min,
        lam=ts.lam,
        f1=ts.f1.describe(),
        f2=ts.f2.describe(),
        sw_rate=sw_rate,
        message_bits=nbits,
        key_bits=key_bits,
        R_hat=nbits / n,
        R_K_hat=key_bits / n,
        D_design=sum(f.distortion for f in schedule) / n,
        D_hat=float(dists.mean()),
        D_hat_stderr=float(dists.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0,
        error_rate=errors / trials,
        equivocation=eq,
    )
