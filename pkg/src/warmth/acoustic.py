"""Frame-level acoustic descriptors and mean/std functionals.

The "lite" preset computes 22 low-level descriptors per frame::

    log_energy, zcr, f0, voicing, spectral_centroid, spectral_flux,
    spectral_rolloff, mfcc1..mfcc13, jitter, shimmer

and reduces each to its mean and population standard deviation over the
frames of a sample's caregiver segments, giving 44 features. Pitch-type
descriptors (f0, jitter, shimmer) are pooled over voiced frames only.

Exact toolkit feature sets are not reproduced here; vectors computed
elsewhere enter through :func:`warmth.matrix.import_features`.
"""

from __future__ import annotations

import logging
import math
import os
import wave
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.fft import dct

from .errors import FormatError
from .matrix import FeatureMatrix, import_features  # noqa: F401  (re-exported)

log = logging.getLogger(__name__)

ANALYSIS_RATE = 16000

LLD_COLUMNS = (
    "log_energy",
    "zcr",
    "f0",
    "voicing",
    "spectral_centroid",
    "spectral_flux",
    "spectral_rolloff",
    *(f"mfcc{i}" for i in range(1, 14)),
    "jitter",
    "shimmer",
)
VOICED_ONLY = ("f0", "jitter", "shimmer")
LITE_FEATURE_NAMES = tuple(f"{c}_{s}" for c in LLD_COLUMNS for s in ("mean", "std"))


class EmptyPoolWarning(UserWarning):
    """No frames fell inside a sample's segments; its features are zeros."""


@dataclass
class Signal:
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64).ravel()
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("signal contains non-finite samples")

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    def __mul__(self, k):
        return Signal(self.samples * k, self.sample_rate)


@dataclass(frozen=True)
class FrameConfig:
    window_s: float = 0.025
    hop_s: float = 0.010
    window_fn: str = "hamming"
    n_fft: int = 512
    energy_floor: float = 1e-10
    voicing_threshold: float = 0.45
    f0_min: float = 40.0
    f0_max: float = 500.0
    n_mels: int = 26
    n_mfcc: int = 13
    rolloff: float = 0.85

    def __post_init__(self):
        if not 0 < self.hop_s <= self.window_s:
            raise ValueError("need 0 < hop_s <= window_s")
        if self.window_fn not in ("hamming", "hann"):
            raise ValueError(f"unknown window {self.window_fn!r}")

    def window_len(self, sr: int) -> int:
        return int(round(self.window_s * sr))

    def hop_len(self, sr: int) -> int:
        return int(round(self.hop_s * sr))


# ---------------------------------------------------------------------------
# audio I/O


def resample_linear(x: np.ndarray, in_rate: int, out_rate: int) -> np.ndarray:
    if in_rate == out_rate or len(x) == 0:
        return np.asarray(x, dtype=np.float64)
    n_out = int(round(len(x) * out_rate / in_rate))
    t_in = np.arange(len(x)) / in_rate
    t_out = np.arange(n_out) / out_rate
    return np.interp(t_out, t_in, x)


def read_wav(path: str | Path, target_rate: int = ANALYSIS_RATE) -> Signal:
    """Read 8- or 16-bit PCM WAV as mono floats in [-1, 1] at ``target_rate``."""
    path = Path(path)
    try:
        with wave.open(str(path), "rb") as wf:
            nch = wf.getnchannels()
            width = wf.getsampwidth()
            rate = wf.getframerate()
            nframes = wf.getnframes()
            raw = wf.readframes(nframes)
    except wave.Error as exc:
        raise FormatError(f"{path}: unsupported WAV ({exc})") from None
    except EOFError:
        raise FormatError(f"{path}: truncated WAV header") from None
    if width not in (1, 2):
        raise FormatError(f"{path}: {8 * width}-bit samples not supported (8 or 16 bit PCM only)")
    if len(raw) != nframes * nch * width:
        raise FormatError(f"{path}: truncated data ({len(raw)} of {nframes * nch * width} bytes)")
    if width == 1:
        data = (np.frombuffer(raw, dtype=np.uint8).astype(np.float64) - 128.0) / 128.0
    else:
        data = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    data = data.reshape(-1, nch).mean(axis=1)
    return Signal(resample_linear(data, rate, target_rate), target_rate)


def write_wav(path: str | Path, sig: Signal) -> None:
    """Write a 16-bit mono PCM WAV, clipping to [-1, 1]."""
    pcm = np.round(np.clip(sig.samples, -1.0, 1.0 - 1.0 / 32768) * 32768.0).astype("<i2")
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(int(sig.sample_rate))
        wf.writeframes(pcm.tobytes())


# ---------------------------------------------------------------------------
# per-frame primitives


def n_frames(n_samples: int, win: int, hop: int) -> int:
    if n_samples < win:
        return 0
    return (n_samples - win) // hop + 1


def frame_signal(x: np.ndarray, win: int, hop: int) -> np.ndarray:
    """View ``x`` as overlapping frames, shape ``(n_frames, win)``."""
    if len(x) < win:
        raise ValueError(f"signal of {len(x)} samples is shorter than one window ({win})")
    return sliding_window_view(x, win)[::hop]


def magnitude_spectrum(frame: np.ndarray, n_fft: int | None = None) -> np.ndarray:
    """|DFT| of a real frame, bins ``0 .. n//2`` (zero-padded to ``n_fft`` if given)."""
    frame = np.asarray(frame, dtype=np.float64)
    if frame.shape[-1] < 2:
        raise ValueError("frame length must be at least 2")
    return np.abs(np.fft.rfft(frame, n=n_fft, axis=-1))


def _window(name: str, n: int) -> np.ndarray:
    return np.hamming(n) if name == "hamming" else np.hanning(n)


def _nccf(frames: np.ndarray, lag_lo: int, lag_hi: int) -> np.ndarray:
    """Normalized cross-correlation between each frame and its lagged self.

    Returns shape ``(n_frames, lag_hi - lag_lo + 1)``; rows of silent frames are zero.
    """
    n = frames.shape[1]
    x = frames - frames.mean(axis=1, keepdims=True)
    nfft = 1 << (2 * n - 1).bit_length()
    spec = np.fft.rfft(x, nfft, axis=1)
    acf = np.fft.irfft(spec.real**2 + spec.imag**2, nfft, axis=1)[:, : n]
    cs = np.concatenate([np.zeros((len(x), 1)), np.cumsum(x * x, axis=1)], axis=1)
    lags = np.arange(lag_lo, lag_hi + 1)
    e_head = cs[:, n - lags]  # sum of x[0 : n-lag]^2
    e_tail = cs[:, [n]] - cs[:, lags]  # sum of x[lag : n]^2
    denom = np.sqrt(e_head * e_tail)
    total = cs[:, [n]]
    # tiny denominators are FFT round-off, not signal
    ok = denom > 1e-9 * np.maximum(total, 1e-300)
    out = np.zeros_like(denom)
    np.divide(acf[:, lags], denom, out=out, where=ok)
    out[total[:, 0] <= 1e-20] = 0.0
    return np.clip(out, -1.0, 1.0)


def _pitch_frames(frames, sr, f0_min=40.0, f0_max=500.0, threshold=0.45):
    """Vectorized autocorrelation pitch: returns ``(f0, voicing_prob)`` arrays."""
    n = frames.shape[1]
    lag_min = max(2, int(math.floor(sr / f0_max)))
    # lags beyond half the frame compare too few samples to be reliable
    lag_max = min(int(math.ceil(sr / f0_min)), n // 2)
    if lag_max <= lag_min:
        raise ValueError(f"frame of {n} samples too short for pitch search at {sr} Hz")
    r = _nccf(frames, lag_min - 1, lag_max + 1)
    inner = r[:, 1:-1]
    peak = (inner >= r[:, :-2]) & (inner > r[:, 2:])
    best = np.where(peak, inner, -np.inf).max(axis=1)
    cand = peak & (inner >= 0.9 * best[:, None])
    has_peak = np.isfinite(best)
    first = np.argmax(cand, axis=1)
    rows = np.arange(len(frames))
    y0 = inner[rows, first]
    ym = r[rows, first]
    yp = r[rows, first + 2]
    curv = ym - 2.0 * y0 + yp
    delta = np.zeros_like(y0)
    np.divide(0.5 * (ym - yp), curv, out=delta, where=curv < 0)
    delta = np.clip(delta, -0.5, 0.5)
    lag = lag_min + first + delta
    prob = np.where(has_peak, np.clip(y0, 0.0, 1.0), 0.0)
    voiced = has_peak & (prob > threshold)
    f0 = np.where(voiced, sr / lag, 0.0)
    prob = np.where(has_peak, prob, np.clip(r.max(axis=1), 0.0, 1.0))
    return f0, prob, voiced


def estimate_f0(frame, sample_rate, f0_min=40.0, f0_max=500.0, threshold=0.45) -> tuple[float, float]:
    """Pitch of one frame from the peak of its normalized autocorrelation.

    Lags are searched between ``sample_rate / f0_max`` and the smaller of
    ``sample_rate / f0_min`` and half the frame length. Returns
    ``(0.0, p)`` when the peak ``p`` does not exceed ``threshold``.
    """
    f0, prob, voiced = _pitch_frames(np.asarray(frame, dtype=np.float64)[None, :], sample_rate, f0_min, f0_max, threshold)
    return float(f0[0]), float(prob[0])


def mel_filterbank(n_filters: int, n_fft: int, sr: int, fmin: float = 0.0, fmax: float | None = None) -> np.ndarray:
    """Triangular filters equally spaced on the mel scale, shape ``(n_filters, n_fft//2+1)``."""
    fmax = sr / 2.0 if fmax is None else fmax

    def hz2mel(f):
        return 2595.0 * np.log10(1.0 + np.asarray(f) / 700.0)

    def mel2hz(m):
        return 700.0 * (10.0 ** (np.asarray(m) / 2595.0) - 1.0)

    edges = mel2hz(np.linspace(hz2mel(fmin), hz2mel(fmax), n_filters + 2))
    freqs = np.arange(n_fft // 2 + 1) * sr / n_fft
    lo, mid, hi = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (freqs - lo) / (mid - lo)
    falling = (hi - freqs) / (hi - mid)
    return np.maximum(0.0, np.minimum(rising, falling))


# ---------------------------------------------------------------------------
# LLD matrix


@dataclass
class LldMatrix:
    frame_times: np.ndarray
    columns: dict[str, np.ndarray]
    voiced_mask: np.ndarray

    def __len__(self):
        return len(self.frame_times)

    def as_array(self) -> np.ndarray:
        return np.column_stack([self.columns[c] for c in LLD_COLUMNS])


def _relative_change(v: np.ndarray, voiced: np.ndarray) -> np.ndarray:
    out = np.zeros_like(v)
    both = voiced[1:] & voiced[:-1] & (v[1:] > 0)
    out[1:][both] = np.abs(v[1:] - v[:-1])[both] / v[1:][both]
    return out


def compute_llds(sig: Signal, cfg: FrameConfig = FrameConfig()) -> LldMatrix:
    sr = sig.sample_rate
    win, hop = cfg.window_len(sr), cfg.hop_len(sr)
    if len(sig.samples) < win:
        raise ValueError(f"signal ({len(sig.samples)} samples) shorter than one window ({win})")
    frames = frame_signal(sig.samples, win, hop)
    nf = len(frames)
    times = (np.arange(nf) * hop + win / 2.0) / sr

    power = np.mean(frames * frames, axis=1)
    log_energy = np.log10(np.maximum(power, cfg.energy_floor))
    rms = np.sqrt(power)
    zcr = np.count_nonzero(frames[:, 1:] * frames[:, :-1] < 0, axis=1) / (win - 1)

    f0, voicing, voiced = _pitch_frames(frames, sr, cfg.f0_min, cfg.f0_max, cfg.voicing_threshold)

    mag = magnitude_spectrum(frames * _window(cfg.window_fn, win), max(cfg.n_fft, win))
    n_fft = max(cfg.n_fft, win)
    freqs = np.arange(mag.shape[1]) * sr / n_fft
    msum = mag.sum(axis=1)
    nz = msum > 0
    centroid = np.zeros(nf)
    centroid[nz] = (mag[nz] @ freqs) / msum[nz]
    norm_mag = np.zeros_like(mag)
    norm_mag[nz] = mag[nz] / msum[nz, None]
    flux = np.zeros(nf)
    flux[1:] = np.sqrt(np.sum((norm_mag[1:] - norm_mag[:-1]) ** 2, axis=1))
    pw = mag * mag
    cum = np.cumsum(pw, axis=1)
    tot = cum[:, -1]
    reach = cum >= cfg.rolloff * tot[:, None]
    rolloff = np.where(tot > 0, freqs[np.argmax(reach, axis=1)], 0.0)

    fb = mel_filterbank(cfg.n_mels, n_fft, sr)
    mel_log = np.log(np.maximum(pw @ fb.T, cfg.energy_floor))
    ceps = dct(mel_log, type=2, norm="ortho", axis=1)[:, 1 : cfg.n_mfcc + 1]

    cols = {
        "log_energy": log_energy,
        "zcr": zcr,
        "f0": f0,
        "voicing": voicing,
        "spectral_centroid": centroid,
        "spectral_flux": flux,
        "spectral_rolloff": rolloff,
    }
    for i in range(cfg.n_mfcc):
        cols[f"mfcc{i + 1}"] = ceps[:, i]
    cols["jitter"] = _relative_change(f0, voiced)
    cols["shimmer"] = _relative_change(rms, voiced)
    return LldMatrix(times, cols, voiced)


def functionals(llds: LldMatrix, segments: Sequence[tuple[float, float]]) -> np.ndarray:
    """Mean and population std of every LLD over frames centred in ``segments``.

    Frame order and segment order do not matter. If no frame is pooled a
    zero vector is returned and :class:`EmptyPoolWarning` is emitted.
    """
    t = llds.frame_times
    pooled = np.zeros(len(t), dtype=bool)
    for start, end in segments:
        pooled |= (t >= start) & (t <= end)
    out = np.zeros(2 * len(LLD_COLUMNS))
    if not pooled.any():
        warnings.warn("no frames pooled; returning zero features", EmptyPoolWarning, stacklevel=2)
        return out
    voiced = pooled & llds.voiced_mask
    for j, name in enumerate(LLD_COLUMNS):
        sel = voiced if name in VOICED_ONLY else pooled
        if not sel.any():
            continue
        v = llds.columns[name][sel]
        out[2 * j] = v.mean()
        out[2 * j + 1] = v.std()
    return out


# ---------------------------------------------------------------------------
# per-sample extraction


@dataclass
class _Job:
    audio_path: str
    sample_ids: list[str]
    segments: list[list[tuple[float, float]]] = field(default_factory=list)


def _run_job(job: _Job, cfg: FrameConfig) -> np.ndarray:
    llds = compute_llds(read_wav(job.audio_path), cfg)
    rows = []
    for sid, segs in zip(job.sample_ids, job.segments):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", EmptyPoolWarning)
            rows.append(functionals(llds, segs))
        if caught:
            log.warning("sample %s: no frames in caregiver segments, zero acoustic features", sid)
    return np.array(rows)


def extract_lite(samples, cfg: FrameConfig = FrameConfig(), n_jobs: int | None = None) -> FeatureMatrix:
    """44-dim lite features for each sample, reading each WAV once.

    Output rows follow ``samples`` order regardless of ``n_jobs``.
    """
    jobs: dict[str, _Job] = {}
    for s in samples:
        job = jobs.setdefault(s.audio_path, _Job(s.audio_path, []))
        job.sample_ids.append(s.sample_id)
        job.segments.append(s.segments)
    job_list = list(jobs.values())
    n_jobs = n_jobs or os.cpu_count() or 1
    if n_jobs > 1 and len(job_list) > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as ex:
            results = list(ex.map(_run_job, job_list, [cfg] * len(job_list)))
    else:
        results = [_run_job(j, cfg) for j in job_list]
    by_id = {}
    for job, block in zip(job_list, results):
        for sid, row in zip(job.sample_ids, block):
            by_id[sid] = row
    ids = [s.sample_id for s in samples]
    return FeatureMatrix(ids, list(LITE_FEATURE_NAMES), np.array([by_id[i] for i in ids]).reshape(len(ids), -1))
