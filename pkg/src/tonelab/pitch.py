"""Audio ingestion, F0 contour extraction, contour features, and the
quadratic-fit baseline transcriber.

F0 estimation is autocorrelation-based with the cumulative mean normalized
difference function: per frame, the difference d(tau) between the frame and
its tau-shifted copy is normalized by its running mean, the first dip below
an absolute threshold is taken (default 0.15), and the dip location is
refined by parabolic interpolation. Frames with no qualifying dip are
unvoiced and carry f0 = 0.
"""
from __future__ import annotations

import io
import math
import os
from dataclasses import dataclass

import numpy as np
from scipy.io import wavfile

from .errors import AudioError, InputError, VoicingError
from . import learn
from .tones import Transcription

F0_FLOOR_HZ = 50.0
F0_CEIL_HZ = 600.0

DEFAULT_FRAME_MS = 40.0
DEFAULT_HOP_MS = 10.0
DEFAULT_YIN_THRESHOLD = 0.15
DEFAULT_FEATURE_POINTS = 20

_MIN_VOICED_FRAMES = 5


@dataclass(frozen=True)
class AudioClip:
    """Mono audio samples in [-1, 1] at a fixed sample rate."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self) -> None:
        arr = np.asarray(self.samples, dtype=float)
        object.__setattr__(self, "samples", arr)
        if arr.ndim != 1 or arr.size == 0:
            raise AudioError("audio must be a nonempty 1-D sample array")
        if self.sample_rate < 8000:
            raise AudioError(f"sample rate must be >= 8000 Hz, got {self.sample_rate}")
        if not np.all(np.isfinite(arr)):
            raise AudioError("audio contains non-finite samples")
        if np.abs(arr).max() > 1.0 + 1e-9:
            raise AudioError("audio samples must lie in [-1, 1]")

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


def read_wav(path: str | os.PathLike) -> AudioClip:
    """Load a RIFF/WAVE file (PCM or IEEE float); stereo is averaged to mono."""
    if not os.path.exists(path):
        raise AudioError(f"WAV file not found: {path}")
    try:
        rate, data = wavfile.read(path)
    except Exception as exc:
        raise AudioError(f"malformed WAV file {path}: {exc}") from exc
    if data.size == 0:
        raise AudioError(f"WAV file contains no audio: {path}")
    if data.dtype == np.uint8:
        samples = (data.astype(float) - 128.0) / 128.0
    elif data.dtype == np.int16:
        samples = data.astype(float) / 32768.0
    elif data.dtype == np.int32:
        samples = data.astype(float) / 2147483648.0
    elif data.dtype in (np.float32, np.float64):
        samples = np.clip(data.astype(float), -1.0, 1.0)
    else:
        raise AudioError(f"unsupported WAV sample format {data.dtype} in {path}")
    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    return AudioClip(samples, int(rate))


@dataclass(frozen=True)
class F0Track:
    """Per-frame fundamental frequency; 0 marks unvoiced frames."""

    times: np.ndarray  # frame centers, seconds
    f0: np.ndarray  # Hz
    frame_hop: float  # seconds

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        f0 = np.asarray(self.f0, dtype=float)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "f0", f0)
        if times.shape != f0.shape or times.ndim != 1:
            raise InputError("times and f0 must be 1-D arrays of equal length")
        if len(times) > 1 and not np.all(np.diff(times) > 0):
            raise InputError("frame times must be strictly increasing")
        if self.frame_hop <= 0:
            raise InputError("frame hop must be positive")
        voiced = f0[f0 > 0]
        if voiced.size and (voiced.min() < F0_FLOOR_HZ or voiced.max() > F0_CEIL_HZ):
            raise InputError(
                f"voiced f0 must lie in [{F0_FLOOR_HZ}, {F0_CEIL_HZ}] Hz"
            )

    @property
    def voiced_mask(self) -> np.ndarray:
        return self.f0 > 0

    @property
    def n_voiced(self) -> int:
        return int(np.count_nonzero(self.f0 > 0))

    def to_csv(self, path: str | os.PathLike | None = None) -> str:
        buf = io.StringIO()
        buf.write("time_s,f0_hz\n")
        for t, f in zip(self.times, self.f0):
            buf.write(f"{t:.6f},{f:.6f}\n")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        return text


def _frame_matrix(x: np.ndarray, frame: int, hop: int) -> np.ndarray:
    n_frames = 1 + (len(x) - frame) // hop
    idx = np.arange(n_frames)[:, None] * hop + np.arange(frame)[None, :]
    return x[idx]


def _difference_function(frames: np.ndarray, tau_max: int) -> np.ndarray:
    """d[f, tau] = sum_{j<W} (x[j] - x[j+tau])^2 with W = frame - tau_max."""
    n_frames, frame = frames.shape
    w = frame - tau_max
    prefix = frames[:, :w]

    sq = frames * frames
    energy_prefix = sq[:, :w].sum(axis=1)
    csum = np.concatenate([np.zeros((n_frames, 1)), np.cumsum(sq, axis=1)], axis=1)
    taus = np.arange(tau_max + 1)
    energy_shift = csum[:, taus + w] - csum[:, taus]

    nfft = 1 << int(frame + w - 1).bit_length()
    spectrum = np.fft.rfft(frames, nfft)
    prefix_spectrum = np.fft.rfft(prefix, nfft)
    corr = np.fft.irfft(spectrum * np.conj(prefix_spectrum), nfft)[:, : tau_max + 1]

    d = energy_prefix[:, None] + energy_shift - 2.0 * corr
    return np.maximum(d, 0.0)


def _cmndf(d: np.ndarray) -> np.ndarray:
    """Cumulative mean normalized difference: d'(0)=1, d'(tau)=d(tau)*tau/sum."""
    out = np.ones_like(d)
    cums = np.cumsum(d[:, 1:], axis=1)
    taus = np.arange(1, d.shape[1])
    with np.errstate(divide="ignore", invalid="ignore"):
        normalized = d[:, 1:] * taus / cums
    out[:, 1:] = np.where(cums > 0, normalized, 1.0)
    return out


def extract_f0(
    clip: AudioClip,
    *,
    frame_ms: float = DEFAULT_FRAME_MS,
    hop_ms: float = DEFAULT_HOP_MS,
    fmin: float = F0_FLOOR_HZ,
    fmax: float = F0_CEIL_HZ,
    threshold: float = DEFAULT_YIN_THRESHOLD,
) -> F0Track:
    """Estimate the per-frame fundamental frequency of a clip.

    Deterministic for a fixed configuration and invariant to positive
    amplitude scaling (the normalized difference is a ratio).
    """
    if not F0_FLOOR_HZ <= fmin < fmax <= F0_CEIL_HZ:
        raise InputError(
            f"need {F0_FLOOR_HZ} <= fmin < fmax <= {F0_CEIL_HZ}, got [{fmin}, {fmax}]"
        )
    if threshold <= 0:
        raise InputError("voicing threshold must be positive")
    sr = clip.sample_rate
    frame = int(round(frame_ms * sr / 1000.0))
    hop = int(round(hop_ms * sr / 1000.0))
    if frame <= 0 or hop <= 0:
        raise InputError("frame and hop must be positive durations")
    x = clip.samples
    if len(x) < frame:
        raise AudioError(
            f"clip of {len(x)} samples is shorter than one {frame}-sample frame"
        )
    tau_max = int(sr / fmin)
    tau_min = max(2, int(sr / fmax))
    if tau_max + 16 > frame:
        raise InputError(
            f"frame of {frame} samples is too short for fmin={fmin} Hz "
            f"(needs > {tau_max + 16})"
        )

    frames = _frame_matrix(x, frame, hop)
    d = _difference_function(frames, tau_max)
    nd = _cmndf(d)

    n_frames = frames.shape[0]
    f0 = np.zeros(n_frames)
    for fi in range(n_frames):
        row = nd[fi]
        below = row[tau_min : tau_max + 1] < threshold
        if not below.any():
            continue
        tau = tau_min + int(np.argmax(below))
        while tau + 1 <= tau_max and row[tau + 1] < row[tau]:
            tau += 1
        delta = 0.0
        if tau_min < tau < tau_max:
            y0, y1, y2 = row[tau - 1], row[tau], row[tau + 1]
            denom = y0 - 2.0 * y1 + y2
            if denom > 0:
                delta = 0.5 * (y0 - y2) / denom
                if not -1.0 < delta < 1.0:
                    delta = 0.0
        est = sr / (tau + delta)
        if fmin <= est <= fmax:
            f0[fi] = est

    times = (np.arange(n_frames) * hop + frame / 2.0) / sr
    return F0Track(times, f0, hop / sr)


def _longest_voiced_run(track: F0Track) -> slice:
    best_start, best_len = 0, 0
    start, length = 0, 0
    for i, voiced in enumerate(track.voiced_mask):
        if voiced:
            if length == 0:
                start = i
            length += 1
            if length > best_len:
                best_start, best_len = start, length
        else:
            length = 0
    return slice(best_start, best_start + best_len)


def _sample_log_f0(track: F0Track, k: int) -> np.ndarray:
    """k evenly spaced log2-F0 samples over the longest voiced run."""
    run = _longest_voiced_run(track)
    n_run = run.stop - run.start
    if n_run < _MIN_VOICED_FRAMES:
        raise VoicingError(
            f"need at least {_MIN_VOICED_FRAMES} contiguous voiced frames, got {n_run}"
        )
    t_run = track.times[run]
    log_f0 = np.log2(track.f0[run])
    sample_times = np.linspace(t_run[0], t_run[-1], k)
    return np.interp(sample_times, t_run, log_f0)


@dataclass(frozen=True)
class ContourFeature:
    """K normalized log-F0 samples from one syllable's voiced run."""

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", arr)
        if arr.ndim != 1 or arr.size == 0:
            raise InputError("contour feature must be a nonempty 1-D vector")
        if not np.all(np.isfinite(arr)):
            raise InputError("contour feature contains non-finite values")

    def __len__(self) -> int:
        return len(self.values)


def contour_feature(track: F0Track, k: int = DEFAULT_FEATURE_POINTS) -> ContourFeature:
    """Resample the longest voiced run's log-F0 at k points and z-normalize.

    The variance floor (1e-6) keeps constant contours finite: a level tone
    yields the all-zero feature.
    """
    if k < 2:
        raise InputError("feature length must be at least 2")
    values = _sample_log_f0(track, k)
    if np.ptp(values) == 0.0:
        return ContourFeature(np.zeros(k))
    centered = values - values.mean()
    scale = math.sqrt(max(float(centered.var()), 1e-6))
    return ContourFeature(centered / scale)


def f0_baseline_triple(track: F0Track) -> tuple[float, float, float]:
    """Pitch triple regressed from an F0 track by quadratic fitting.

    Fits a quadratic to 20 evenly sampled log-F0 points, reads the fitted
    values at the second, middle, and second-to-last points (indices 1, 9,
    18), and maps the fitted range [min, max] onto pitch levels [1, 5]. A
    flat fit (range < 1e-6) maps to mid-scale (3, 3, 3).
    """
    n_points = 20
    y = _sample_log_f0(track, n_points)
    xs = np.arange(n_points, dtype=float)
    coeffs = np.polyfit(xs, y, 2)
    fitted = np.polyval(coeffs, xs)
    lo = float(fitted.min())
    hi = float(fitted.max())
    if hi - lo < 1e-6:
        return (3.0, 3.0, 3.0)
    picked = fitted[[1, 9, 18]]
    scaled = 1.0 + 4.0 * (picked - lo) / (hi - lo)
    return (float(scaled[0]), float(scaled[1]), float(scaled[2]))


def f0_baseline_transcribe(track: F0Track, beta: float = learn.DEFAULT_BETA) -> Transcription:
    """Quadratic-fit baseline: transcribe a tone directly from its F0 track."""
    return learn.decode_transcription(f0_baseline_triple(track), beta)
