"""Discrete memoryless sources with a degraded side-information chain.

A source is the triple law ``P(x) P(y|x) P(w|y)`` plus a distortion matrix
``d(x, x_hat)``.  Only the factored form can be constructed, so the
eavesdropper's side information ``W`` is always a degraded version of the
decoder's side information ``Y``.

All information measures are in bits.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .errors import NegativeProbability, NormalizationError, ShapeMismatch
from .secure_stream import role_generator

PROB_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SourceSpec:
    """Joint law of ``(X, Y, W)`` and the distortion measure.

    Arrays are stored read-only.  Use :func:`validate` (or
    :meth:`from_dict`) to obtain a checked instance.
    """

    px: np.ndarray
    py_given_x: np.ndarray
    pw_given_y: np.ndarray
    distortion: np.ndarray

    def __post_init__(self):
        for name in ("px", "py_given_x", "pw_given_y", "distortion"):
            arr = np.array(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def alphabet_sizes(self) -> tuple[int, int, int, int]:
        """``(|X|, |Y|, |W|, |X_hat|)``."""
        return (
            self.px.shape[0],
            self.py_given_x.shape[1],
            self.pw_given_y.shape[1],
            self.distortion.shape[1],
        )

    @property
    def pw_given_x(self) -> np.ndarray:
        """Composed channel ``P(w|x) = sum_y P(y|x) P(w|y)``."""
        return self.py_given_x @ self.pw_given_y

    @property
    def d_min(self) -> float:
        """Smallest single-letter distortion ``min_{x, x_hat} d(x, x_hat)``."""
        return float(self.distortion.min())

    @property
    def D_min(self) -> float:
        """Smallest achievable average distortion ``sum_x P(x) min_xh d(x, xh)``."""
        return float(self.px @ self.distortion.min(axis=1))

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "SourceSpec":
        """Build and validate a spec from a config mapping.

        Missing ``py_given_x`` / ``pw_given_y`` default to a singleton
        alphabet (no side information).  A missing ``distortion`` defaults
        to Hamming distortion on ``X_hat = X``.
        """
        px = np.asarray(doc["px"], dtype=np.float64)
        nx = px.shape[0]
        py = doc.get("py_given_x")
        py = np.ones((nx, 1)) if py is None else np.asarray(py, dtype=np.float64)
        pw = doc.get("pw_given_y")
        pw = np.ones((py.shape[1], 1)) if pw is None else np.asarray(pw, dtype=np.float64)
        dist = doc.get("distortion")
        dist = 1.0 - np.eye(nx) if dist is None else np.asarray(dist, dtype=np.float64)
        sizes = doc.get("alphabet_sizes")
        spec = cls(px, py, pw, dist)
        if sizes is not None and tuple(int(s) for s in sizes) != spec.alphabet_sizes:
            raise ShapeMismatch(
                f"alphabet_sizes {tuple(sizes)} disagree with arrays {spec.alphabet_sizes}"
            )
        return validate(spec)

    def to_dict(self) -> dict[str, Any]:
        return {
            "alphabet_sizes": list(self.alphabet_sizes),
            "px": self.px.tolist(),
            "py_given_x": self.py_given_x.tolist(),
            "pw_given_y": self.pw_given_y.tolist(),
            "distortion": self.distortion.tolist(),
        }


def load_spec(path: str | Path) -> SourceSpec:
    """Read a spec document (JSON, or YAML for ``.yaml``/``.yml``)."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() in (".yaml", ".yml"):
        import yaml

        doc = yaml.safe_load(text)
    else:
        doc = json.loads(text)
    return SourceSpec.from_dict(doc)


def _check_stochastic(name: str, arr: np.ndarray, ndim: int) -> None:
    if arr.ndim != ndim or arr.size == 0:
        raise ShapeMismatch(f"{name} must be a non-empty {ndim}-d array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NormalizationError(f"{name} has non-finite entries")
    if np.any(arr < 0):
        raise NegativeProbability(f"{name} has negative entries")
    sums = arr.sum(axis=-1)
    bad = np.abs(sums - 1.0) > PROB_TOL
    if np.any(bad):
        raise NormalizationError(f"{name} does not sum to 1 (sums: {np.atleast_1d(sums)[np.atleast_1d(bad)]})")


def validate(spec: SourceSpec) -> SourceSpec:
    """Return ``spec`` unchanged if every invariant holds, else raise."""
    _check_stochastic("px", spec.px, 1)
    _check_stochastic("py_given_x", spec.py_given_x, 2)
    _check_stochastic("pw_given_y", spec.pw_given_y, 2)
    nx = spec.px.shape[0]
    if spec.py_given_x.shape[0] != nx:
        raise ShapeMismatch("py_given_x must have one row per source symbol")
    if spec.pw_given_y.shape[0] != spec.py_given_x.shape[1]:
        raise ShapeMismatch("pw_given_y must have one row per Y symbol")
    d = spec.distortion
    if d.ndim != 2 or d.shape[0] != nx or d.shape[1] == 0:
        raise ShapeMismatch(f"distortion must be |X| x |X_hat|, got shape {d.shape}")
    if not np.all(np.isfinite(d)):
        raise ShapeMismatch("distortion entries must be finite")
    if np.any(d < 0):
        raise NegativeProbability("distortion entries must be nonnegative")
    return spec


def entropy(p) -> float:
    """Shannon entropy in bits, with ``0 log 0 = 0``.

    Accepts any array shape; the entries are treated as one joint pmf.
    """
    p = np.asarray(p, dtype=np.float64).ravel()
    nz = p[p > 0]
    return float(-(nz * np.log2(nz)).sum()) + 0.0


def conditional_entropy(joint) -> float:
    """``H(X|Y)`` for a joint array indexed ``[x, y]``."""
    joint = np.asarray(joint, dtype=np.float64)
    return entropy(joint) - entropy(joint.sum(axis=0))


def mutual_information(joint) -> float:
    """``I(X;Y)`` for a joint array indexed ``[x, y]``; clipped at 0."""
    joint = np.asarray(joint, dtype=np.float64)
    mi = entropy(joint.sum(axis=1)) + entropy(joint.sum(axis=0)) - entropy(joint)
    return max(mi, 0.0)


@dataclass(frozen=True, eq=False)
class ChainMeasures:
    px: np.ndarray
    pxy: np.ndarray
    pxw: np.ndarray
    H_X: float
    H_X_given_Y: float
    H_X_given_W: float
    I_XY_given_W: float


def joint_xy(spec: SourceSpec) -> np.ndarray:
    return spec.px[:, None] * spec.py_given_x


def joint_xw(spec: SourceSpec) -> np.ndarray:
    return spec.px[:, None] * spec.pw_given_x


def marginals_and_chain(spec: SourceSpec) -> ChainMeasures:
    pxy = joint_xy(spec)
    pxw = joint_xw(spec)
    pxyw = pxy[:, :, None] * spec.pw_given_y[None, :, :]
    # I(X;Y|W) = H(X,W) + H(Y,W) - H(X,Y,W) - H(W)
    i_xy_w = (
        entropy(pxw) + entropy(pxyw.sum(axis=0)) - entropy(pxyw) - entropy(pxw.sum(axis=0))
    )
    return ChainMeasures(
        px=spec.px,
        pxy=pxy,
        pxw=pxw,
        H_X=entropy(spec.px),
        H_X_given_Y=conditional_entropy(pxy),
        H_X_given_W=conditional_entropy(pxw),
        I_XY_given_W=max(i_xy_w, 0.0),
    )


def _draw_rows(rng: np.random.Generator, cond: np.ndarray, rows: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(cond, axis=1)
    u = rng.random(rows.shape[0])
    out = (cdf[rows] <= u[:, None]).sum(axis=1)
    return np.minimum(out, cond.shape[1] - 1)


def sample(spec: SourceSpec, n: int, seed: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Draw ``n`` i.i.d. triplets ``(x_t, y_t, w_t)``; deterministic in ``seed``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = role_generator(seed, "source")
    x = _draw_rows(rng, spec.px[None, :], np.zeros(n, dtype=np.intp))
    y = _draw_rows(rng, spec.py_given_x, x)
    w = _draw_rows(rng, spec.pw_given_y, y)
    return x, y, w
