"""Five-scale tone transcriptions, simulated pitch curves, and tone distances.

A transcription is a sequence of 2 or 3 digits in 1..5 describing relative
pitch over time, e.g. "35" (rise) or "312" (fall-rise). Each transcription
maps to a smooth pitch curve on x in [1, 3]: a line for 2-digit tones, a
quadratic for 3-digit tones. The distance between two transcriptions is the
area between their curves, computed in closed form.
"""
from __future__ import annotations

import io
import itertools
import math
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

from .errors import InputError, TranscriptionError

PITCH_LEVELS = (1, 2, 3, 4, 5)
CURVE_DOMAIN = (1.0, 3.0)

_TOKEN_RE = re.compile(r"^[1-5]{2,3}$")

# Env var capping worker threads for matrix construction.
THREADS_ENV_VAR = "TONELAB_THREADS"


def _thread_cap() -> int:
    raw = os.environ.get(THREADS_ENV_VAR)
    if raw is None:
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


@dataclass(frozen=True, order=True)
class Transcription:
    """An ordered sequence of 2 or 3 pitch digits, each in 1..5."""

    digits: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.digits) not in (2, 3):
            raise TranscriptionError(
                f"transcription must have 2 or 3 digits, got {len(self.digits)}"
            )
        for d in self.digits:
            if not isinstance(d, int) or isinstance(d, bool) or not 1 <= d <= 5:
                raise TranscriptionError(f"pitch digit out of range 1..5: {d!r}")

    @property
    def token(self) -> str:
        return "".join(str(d) for d in self.digits)

    def __str__(self) -> str:
        return self.token

    def __len__(self) -> int:
        return len(self.digits)

    def __iter__(self) -> Iterator[int]:
        return iter(self.digits)


def parse_transcription(text: str) -> Transcription:
    """Parse a token like "35", "312", or "(35)" into a Transcription."""
    token = text.strip()
    if len(token) >= 2 and token.startswith("(") and token.endswith(")"):
        token = token[1:-1].strip()
    if not _TOKEN_RE.match(token):
        raise TranscriptionError(
            f"invalid transcription token {text!r}: expected 2-3 digits in 1..5"
        )
    return Transcription(tuple(int(ch) for ch in token))


@dataclass(frozen=True)
class PitchCurve:
    """Polynomial a*x^2 + b*x + c modelling pitch variation on x in [1, 3]."""

    a: float
    b: float
    c: float

    def __call__(self, x):
        return (self.a * x + self.b) * x + self.c


def curve_of(t: Transcription) -> PitchCurve:
    """Simulated pitch curve of a transcription.

    2-digit (p, q): the line through (1, p) and (3, q).
    3-digit (p, q, r): the degree <= 2 polynomial through (1, p), (2, q), (3, r).
    All knot digits are small integers, so the coefficients are exact dyadic
    rationals.
    """
    if len(t.digits) == 2:
        p, q = t.digits
        b = (q - p) / 2
        return PitchCurve(0.0, b, p - b)
    p, q, r = t.digits
    a = (p - 2 * q + r) / 2
    b = (q - p) - 3 * a
    return PitchCurve(a, b, p - a - b)


def _roots_in_open_interval(a: float, b: float, c: float, lo: float, hi: float) -> list[float]:
    """Real roots of a*x^2 + b*x + c strictly inside (lo, hi), ascending."""
    if a == 0.0:
        if b == 0.0:
            return []
        r = -c / b
        return [r] if lo < r < hi else []
    disc = b * b - 4.0 * a * c
    if disc <= 0.0:
        # A double root does not change the sign, so no split is needed.
        return []
    s = math.sqrt(disc)
    r1 = (-b - s) / (2.0 * a)
    r2 = (-b + s) / (2.0 * a)
    return sorted(r for r in (r1, r2) if lo < r < hi)


def _abs_poly_integral(a: float, b: float, c: float) -> float:
    """Integral of |a*x^2 + b*x + c| over the curve domain, in closed form."""
    lo, hi = CURVE_DOMAIN

    def antiderivative(x: float) -> float:
        return ((a / 3.0 * x + b / 2.0) * x + c) * x

    points = [lo, *_roots_in_open_interval(a, b, c, lo, hi), hi]
    total = 0.0
    for left, right in zip(points, points[1:]):
        total += abs(antiderivative(right) - antiderivative(left))
    return total


def tone_distance(l1: Transcription, l2: Transcription) -> float:
    """Area between the pitch curves of two transcriptions on [1, 3].

    Symmetric, nonnegative, and zero whenever the curves coincide (which can
    happen for distinct transcriptions, e.g. "35" and "345").
    """
    c1 = curve_of(l1)
    c2 = curve_of(l2)
    return _abs_poly_integral(c1.a - c2.a, c1.b - c2.b, c1.c - c2.c)


def categorical_distance(l1: Transcription, l2: Transcription) -> int:
    """0 if the two transcriptions are identical, 1 otherwise."""
    return 0 if l1.digits == l2.digits else 1


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric nonnegative distance matrix with labelled rows."""

    labels: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        n = len(self.labels)
        if v.shape != (n, n):
            raise InputError(f"matrix shape {v.shape} does not match {n} labels")
        if n == 0:
            raise InputError("distance matrix needs at least one label")
        if not np.all(np.isfinite(v)):
            raise InputError("distance matrix contains non-finite entries")
        if np.any(v < 0):
            raise InputError("distance matrix contains negative entries")
        if np.any(np.diag(v) != 0):
            raise InputError("distance matrix diagonal must be zero")
        if not np.allclose(v, v.T, rtol=0.0, atol=1e-9):
            raise InputError("distance matrix must be symmetric")

    def __len__(self) -> int:
        return len(self.labels)

    def to_csv(self, path: str | os.PathLike | None = None) -> str:
        """Serialize as CSV: header row of labels, then labelled rows, 6 decimals."""
        buf = io.StringIO()
        buf.write("label," + ",".join(self.labels) + "\n")
        for label, row in zip(self.labels, self.values):
            buf.write(label + "," + ",".join(f"{x:.6f}" for x in row) + "\n")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        return text


def build_distance_matrix(ls: Sequence[Transcription]) -> DistanceMatrix:
    """Pairwise tone_distance matrix; labels preserve input order.

    Rows are computed in parallel when the input is large; every entry depends
    only on its own (i, j) pair, so the result is identical regardless of
    scheduling.
    """
    if len(ls) == 0:
        raise InputError("cannot build a distance matrix from an empty list")
    n = len(ls)
    curves = [curve_of(t) for t in ls]
    values = np.zeros((n, n))

    def fill_row(i: int) -> None:
        ci = curves[i]
        for j in range(i + 1, n):
            cj = curves[j]
            d = _abs_poly_integral(ci.a - cj.a, ci.b - cj.b, ci.c - cj.c)
            values[i, j] = d
            values[j, i] = d

    workers = min(_thread_cap(), n)
    if workers > 1 and n >= 64:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill_row, range(n)))
    else:
        for i in range(n):
            fill_row(i)
    return DistanceMatrix(tuple(t.token for t in ls), values)


def canonical_transcriptions() -> list[Transcription]:
    """All 150 transcriptions: 25 two-digit then 125 three-digit, ascending."""
    out = []
    for k in (2, 3):
        for digits in itertools.product(PITCH_LEVELS, repeat=k):
            out.append(Transcription(digits))
    return out


@lru_cache(maxsize=1)
def tone_distance_database() -> DistanceMatrix:
    """The precomputed 150x150 distance matrix in canonical label order."""
    return build_distance_matrix(canonical_transcriptions())


@dataclass(frozen=True)
class NormalizedContour:
    """Three relative-pitch samples in [0, 1]."""

    values: tuple[float, float, float]

    def __post_init__(self) -> None:
        if len(self.values) != 3:
            raise InputError("normalized contour must have exactly 3 values")
        for v in self.values:
            if not 0.0 <= v <= 1.0:
                raise InputError(f"normalized contour value outside [0, 1]: {v}")


def relative_pitch(t: Transcription) -> tuple[float, ...]:
    """Digits mapped to [0, 1]: min -> 0, max -> 1, midpoints in proportion.

    Level tones carry no relative variation; by convention they map to the
    constant 0.5.
    """
    lo = min(t.digits)
    hi = max(t.digits)
    if hi == lo:
        return tuple(0.5 for _ in t.digits)
    return tuple((d - lo) / (hi - lo) for d in t.digits)


def normalize_contour(t: Transcription) -> NormalizedContour:
    """Three-point relative-pitch contour; 2-digit tones are midpoint-expanded."""
    vals = relative_pitch(t)
    if len(vals) == 2:
        vals = (vals[0], (vals[0] + vals[1]) / 2.0, vals[1])
    return NormalizedContour(vals)


def _sigmoid(x: float) -> float:
    return 1.0 / (1.0 + math.exp(-x))


def variance_metric(l1: Transcription, l2: Transcription) -> float:
    """Relative-pitch discrepancy between two transcriptions.

    Sum of absolute differences of the sigmoid-squashed 3-point normalized
    contours. Zero iff the contours are equal; symmetric. Insensitive to
    absolute register, so e.g. "55" and "33" score 0.
    """
    u = normalize_contour(l1).values
    v = normalize_contour(l2).values
    return sum(abs(_sigmoid(a) - _sigmoid(b)) for a, b in zip(u, v))
