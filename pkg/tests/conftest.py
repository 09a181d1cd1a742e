import numpy as np
import pytest

from securesc.source_model import SourceSpec

_acceptance = []


def random_pmf(rng, k, zero_frac=0.0):
    p = rng.dirichlet(np.ones(k))
    if zero_frac and k > 1:
        mask = rng.random(k) < zero_frac
        if mask.all():
            mask[rng.integers(k)] = False
        p[mask] = 0.0
    return p / p.sum()


def random_stochastic(rng, rows, cols):
    return np.stack([random_pmf(rng, cols) for _ in range(rows)])


def random_spec(rng, nx=None, ny=None, nw=None, nxh=None):
    nx = nx or int(rng.integers(2, 5))
    ny = ny or int(rng.integers(1, 4))
    nw = nw or int(rng.integers(1, 4))
    nxh = nxh or int(rng.integers(1, 5))
    return SourceSpec.from_dict({
        "px": random_pmf(rng, nx).tolist(),
        "py_given_x": random_stochastic(rng, nx, ny).tolist(),
        "pw_given_y": random_stochastic(rng, ny, nw).tolist(),
        "distortion": rng.random((nx, nxh)).round(3).tolist(),
    })


def bsc(e):
    return [[1 - e, e], [e, 1 - e]]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def binary_uniform():
    """Uniform binary source, Hamming distortion, no side information."""
    return SourceSpec.from_dict({"px": [0.5, 0.5]})


@pytest.fixture
def binary_symmetric():
    """Uniform binary X, Y = BSC(0.1)(X), W = BSC(0.2)(Y), Hamming distortion."""
    return SourceSpec.from_dict({"px": [0.5, 0.5], "py_given_x": bsc(0.1), "pw_given_y": bsc(0.2)})


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        _acceptance.append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _acceptance:
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}")
