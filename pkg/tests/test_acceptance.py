"""Acceptance suite: one test per criterion, each at its stated tolerance.

Run ``python tests/test_acceptance.py`` (or ``pytest tests/test_acceptance.py``)
for one PASS/FAIL line per criterion.
"""

import itertools
import math
import time

import numpy as np
import pytest

from conftest import random_pmf, random_spec
from oracles import entropy_direct, kraft_length_vectors, lower_envelope_pairs, min_expected_length
from securesc.causal_rd import (
    RateQuadruple,
    design_time_sharing,
    enumerate_functions,
    opta_envelope,
    opta_r,
    region_contains,
    separation_scheme_run,
)
from securesc.eavesdrop_analysis import (
    empirical_posterior,
    encoder_without_padding,
    encoder_without_xor,
    parsed_block_joint,
    parsed_block_leakage,
    unparsed_leakage,
)
from securesc.prefix_codes import build_huffman, conditional_huffman_length, huffman_length, length_pmf
from securesc.realtime_codec import (
    decode_parsed,
    decode_stream_unparsed,
    encode_parsed,
    encode_unparsed,
    key_rate,
)
from securesc.secure_stream import KeyStream, PrivateRandom
from securesc.source_model import SourceSpec, sample

pytestmark = pytest.mark.acceptance

P3 = (0.5, 0.25, 0.25)


class Clock:
    def __init__(self, limit):
        self.limit = limit

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start
        if exc[0] is None:
            assert self.elapsed < self.limit, f"took {self.elapsed:.1f}s, limit {self.limit}s"


def _lengths_entropy(p, code):
    return entropy_direct(length_pmf(p, code).pmf)


def test_criterion_1_parsed_full_secrecy():
    rng = np.random.default_rng(101)
    with Clock(60):
        for _ in range(100):
            p = random_pmf(rng, int(rng.integers(2, 7)))
            code = build_huffman(p)
            joint, _ = parsed_block_joint(p, code)
            block = joint.sum(axis=0)
            assert block.shape[0] == 2**code.l_max
            assert np.abs(block - 2.0**-code.l_max).max() <= 1e-12
            assert parsed_block_leakage(p, code).mi_bits <= 1e-12
            # the length leak: encrypted codeword without padding
            leak = parsed_block_leakage(p, code, encoder_without_padding).mi_bits
            assert abs(leak - _lengths_entropy(p, code)) <= 1e-12
            # codeword sent unencrypted inside the padded block
            clear = parsed_block_leakage(p, code, encoder_without_xor).mi_bits
            assert abs(clear - entropy_direct(p)) <= 1e-12


def test_criterion_2_key_rate():
    n = 10**5
    with Clock(60):
        for seed in range(20):
            rng = np.random.default_rng(seed)
            p = random_pmf(rng, int(rng.integers(2, 7)))
            code = build_huffman(p)
            lengths = np.array(code.lengths, dtype=float)
            L = float(p @ lengths)
            sigma = math.sqrt(float(p @ (lengths - L) ** 2) / n)
            xs = rng.choice(len(p), size=n, p=p)
            _, records = encode_parsed(xs, code, KeyStream(seed), PrivateRandom(seed))
            assert abs(key_rate(records) - L) <= 3 * sigma + 1e-12

            # exact expectation: drive every symbol with full-length tapes
            expected = 0.0
            for x in code.coded_symbols:
                ks = KeyStream.from_bits([0] * code.l_max)
                encode_parsed([x], code, ks, PrivateRandom.from_bits([0] * code.l_max))
                expected += p[x] * ks.m
            assert expected == pytest.approx(huffman_length(p), abs=1e-12)


def test_criterion_3_lossless_and_synchronized():
    n = 10**5
    rng = np.random.default_rng(3)
    p = random_pmf(rng, 5)
    code = build_huffman(p)
    xs = rng.choice(len(p), size=n, p=p).tolist()

    alice, bob = KeyStream(11), KeyStream(11)
    stream, _ = encode_parsed(xs, code, alice, PrivateRandom(11))
    out = decode_parsed(stream.unparsed_view(), code, bob)
    assert sum(a != b for a, b in zip(out, xs)) == 0 and len(out) == n
    assert alice.m == bob.m and alice.stage_log == bob.stage_log

    alice, bob = KeyStream(12), KeyStream(12)
    stream, _ = encode_unparsed(xs, code, alice)
    out = decode_stream_unparsed(stream.unparsed_view(), code, bob)
    assert sum(a != b for a, b in zip(out, xs)) == 0 and len(out) == n
    assert alice.m == bob.m and alice.stage_log == bob.stage_log


def test_criterion_4_unparsed_convergence():
    code = build_huffman(P3)
    with Clock(120):
        mis = [unparsed_leakage(P3, code, n).mi_bits for n in (1, 10, 100, 1000)]
        assert abs(mis[0] - 1.0) <= 1e-12
        assert mis[-1] < 1e-3
        assert all(a > b for a, b in zip(mis, mis[1:]))

        mc = empirical_posterior(P3, code, 10, 20000, seed=4)
        assert abs(mc.mi_bits - mis[1]) <= 3 * mc.stderr

        xs, _, _ = sample(SourceSpec.from_dict({"px": list(P3)}), 10**5, seed=4)
        stream, _ = encode_unparsed(xs, code, KeyStream(4))
        assert 1.49 <= len(stream) / 10**5 <= 1.51


def test_criterion_5_huffman_properties():
    rng = np.random.default_rng(5)
    with Clock(120):
        for _ in range(1000):
            k = int(rng.integers(2, 13))
            p = random_pmf(rng, k, zero_frac=0.2)
            code = build_huffman(p)
            H, L = entropy_direct(p), huffman_length(p)
            if int((p > 0).sum()) >= 2:
                assert H - 1e-12 <= L < H + 1
                assert code.is_complete()
                assert code.kraft_numerator() == 1 << code.l_max
            else:
                assert L == 1.0

        for _ in range(1000):
            nx, ny = int(rng.integers(2, 7)), int(rng.integers(1, 6))
            joint = rng.dirichlet(np.ones(nx * ny)).reshape(nx, ny)
            assert conditional_huffman_length(joint) <= huffman_length(joint.sum(axis=1)) + 1e-12

        for k in range(1, 7):
            vectors = kraft_length_vectors(k)
            for _ in range(200):
                p = random_pmf(rng, k)
                assert huffman_length(p) == pytest.approx(min_expected_length(p, vectors), abs=1e-12)


def test_criterion_6_opta_envelope():
    spec = SourceSpec.from_dict({"px": [0.5, 0.5]})
    curve = opta_envelope(spec)
    assert curve.vertices == [(0.0, 1.0), (0.5, 0.0)]
    assert abs(curve(0.25) - 0.5) <= 1e-12

    rng = np.random.default_rng(6)
    for _ in range(100):
        spec = random_spec(rng, nx=int(rng.integers(2, 5)), nxh=int(rng.integers(1, 5)))
        fns = list(enumerate_functions(spec))
        curve = opta_envelope(spec, fns)
        D, H = curve.D, curve.H
        assert np.all(np.diff(D) > 0) and np.all(np.diff(H) < 0)
        assert np.all(np.diff(np.diff(H) / np.diff(D)) >= -1e-9)
        for d, h in curve.vertices:
            assert abs(opta_r(spec, d, fns) - h) <= 1e-9
        for d in np.linspace(D[0], D[-1] + 0.25, 40):
            rb = curve(d)
            assert rb <= opta_r(spec, d, fns) + 1e-9
            ts = design_time_sharing(spec, d, curve)
            assert abs(ts.rate - rb) <= 1e-12
            assert ts.distortion <= d + 1e-12


def _direct_region_check(q, points, hxw, d_min):
    if q.h > hxw or q.D < d_min:
        return False
    r_bar = lower_envelope_pairs(points, q.D)
    key_needed = q.h - hxw + r_bar
    if key_needed < 0:
        key_needed = 0.0  # no encryption is needed
    return q.R >= r_bar and q.R_K >= key_needed


def test_criterion_7_region():
    rng = np.random.default_rng(7)
    checked = clamped = monotone_pairs = 0
    for _ in range(50):
        spec = random_spec(rng, nx=int(rng.integers(2, 4)), nxh=int(rng.integers(1, 4)))
        fns = list(enumerate_functions(spec))
        points = [(f.distortion, f.rate) for f in fns]
        curve = opta_envelope(spec, fns)
        pxw = spec.px[:, None] * spec.pw_given_x
        pw = pxw.sum(axis=0)
        nz = pxw > 0
        hxw = float(-(pxw[nz] * np.log2((pxw / pw)[nz])).sum())
        d_min = float(sum(spec.px[x] * spec.distortion[x].min() for x in range(len(spec.px))))
        for _ in range(200):
            R_K = 0.0 if rng.random() < 0.3 else float(rng.uniform(0, 2))
            q = RateQuadruple(float(rng.uniform(0, 2)), R_K, float(rng.uniform(0, 1)),
                              float(rng.uniform(0, 1.2 * hxw + 0.05)))
            verdict = region_contains(q, spec, curve)
            assert verdict.inside == _direct_region_check(q, points, hxw, d_min)
            checked += 1
            clamped += verdict.inside and q.R_K == 0.0 and q.h > 0
            step = rng.uniform(0, 0.3, size=4)
            b = RateQuadruple(q.R + step[0], q.R_K + step[1], q.D + step[2], max(0.0, q.h - step[3]))
            if verdict.inside:
                assert region_contains(b, spec, curve).inside
                monotone_pairs += 1
    assert checked == 10**4
    assert clamped > 0 and monotone_pairs > 0


def test_criterion_8_separation_scheme(binary_symmetric):
    spec = binary_symmetric
    D, h = 0.1, 0.7
    with Clock(300):
        stats = separation_scheme_run(spec, D, h, 20, seed=8, trials=2000, sw_margin=0.35, equivocation=False)
        assert stats.D_hat <= D + 3 * stats.D_hat_stderr
        assert stats.error_rate < 0.05
        expected_key = math.ceil(20 * max(0.0, h - stats.H_X_given_W + stats.r_bar)) / 20
        assert stats.R_K_hat == expected_key

        full = separation_scheme_run(spec, D, h, 12, seed=8, trials=500, sw_margin=1.0, full_otp=True)
        assert full.error_rate == 0.0
        assert abs(full.equivocation - full.H_X_given_W) <= 1e-9

        for target in (0.3, 0.5, 0.7, 0.8):
            budget = separation_scheme_run(spec, D, target, 12, seed=8, trials=20)
            assert budget.equivocation >= target - 0.1


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-v", "-p", "no:cacheprovider"]))
