"""Log-mel front end, context windows around grid intervals, beat synchronization."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from math import gcd

import numpy as np
from scipy import signal

from .core import FeatureMatrix, Song, TimeGrid

LOG_FLOOR = 1e-10


@dataclass(frozen=True)
class MelConfig:
    sample_rate: int = 16000
    fft_size: int = 512
    hop: int = 256
    mel_bands: int = 128
    window_seconds: float = 8.0

    def __post_init__(self):
        if self.hop * 2 != self.fft_size:
            raise ValueError("hop must be fft_size / 2")
        if self.mel_bands < 1 or self.window_seconds <= 0:
            raise ValueError("invalid mel configuration")

    @property
    def window_samples(self) -> int:
        return int(round(self.window_seconds * self.sample_rate))


class WindowMode(str, enum.Enum):
    CENTER = "center"
    ALONE = "alone"
    HANN = "hann"


# Slaney-style mel scale: linear below 1 kHz, logarithmic above.
_F_SP = 200.0 / 3
_MIN_LOG_HZ = 1000.0
_MIN_LOG_MEL = _MIN_LOG_HZ / _F_SP
_LOGSTEP = np.log(6.4) / 27.0


def hz_to_mel(f):
    f = np.asarray(f, dtype=float)
    lin = f / _F_SP
    log = _MIN_LOG_MEL + np.log(np.maximum(f, 1e-12) / _MIN_LOG_HZ) / _LOGSTEP
    return np.where(f >= _MIN_LOG_HZ, log, lin)


def mel_to_hz(m):
    m = np.asarray(m, dtype=float)
    lin = _F_SP * m
    log = _MIN_LOG_HZ * np.exp(_LOGSTEP * (m - _MIN_LOG_MEL))
    return np.where(m >= _MIN_LOG_MEL, log, lin)


def mel_band_edges(n_mels: int, fmax: float) -> np.ndarray:
    """``n_mels + 2`` frequencies; band k spans edges k..k+2 and peaks at k+1."""
    return mel_to_hz(np.linspace(hz_to_mel(0.0), hz_to_mel(fmax), n_mels + 2))


def mel_filterbank(sr: int, n_fft: int, n_mels: int) -> np.ndarray:
    """Triangular, area-normalized filters over 0..sr/2. Shape (n_mels, n_fft//2+1)."""
    fft_freqs = np.linspace(0, sr / 2, n_fft // 2 + 1)
    edges = mel_band_edges(n_mels, sr / 2)
    widths = np.diff(edges)
    ramps = edges[:, None] - fft_freqs[None, :]
    lower = -ramps[:-2] / widths[:-1, None]
    upper = ramps[2:] / widths[1:, None]
    fb = np.maximum(0, np.minimum(lower, upper))
    fb *= (2.0 / (edges[2:] - edges[:-2]))[:, None]
    return fb


def mel_band_centers(cfg: MelConfig = MelConfig()) -> np.ndarray:
    return mel_band_edges(cfg.mel_bands, cfg.sample_rate / 2)[1:-1]


def log_mel(audio, cfg: MelConfig = MelConfig(), start_time: float = 0.0) -> FeatureMatrix:
    """Natural-log mel power spectrogram of mono audio at ``cfg.sample_rate``.

    Frames are not padded: ``1 + (len - fft_size) // hop`` of them, each
    stamped with its center time.
    """
    x = np.asarray(audio, dtype=np.float64)
    if x.ndim != 1 or len(x) == 0:
        raise ValueError("audio must be a non-empty mono signal")
    if len(x) < cfg.fft_size:
        raise ValueError(f"audio shorter than fft_size ({len(x)} < {cfg.fft_size})")
    n_frames = 1 + (len(x) - cfg.fft_size) // cfg.hop
    frames = np.lib.stride_tricks.sliding_window_view(x, cfg.fft_size)[::cfg.hop][:n_frames]
    win = signal.get_window("hann", cfg.fft_size)
    power = np.abs(np.fft.rfft(frames * win, axis=1)) ** 2
    mel = power @ _filterbank(cfg).T
    times = start_time + (np.arange(n_frames) * cfg.hop + cfg.fft_size / 2) / cfg.sample_rate
    return FeatureMatrix(np.log(mel + LOG_FLOOR), times)


_FB_CACHE: dict = {}


def _filterbank(cfg: MelConfig) -> np.ndarray:
    key = (cfg.sample_rate, cfg.fft_size, cfg.mel_bands)
    if key not in _FB_CACHE:
        _FB_CACHE[key] = mel_filterbank(*key)
    return _FB_CACHE[key]


def resample(audio, sr_in: int, sr_out: int = 16000) -> np.ndarray:
    """Polyphase windowed-sinc resampling (Kaiser, beta=8)."""
    if sr_in == sr_out:
        return np.asarray(audio, dtype=np.float64)
    g = gcd(int(sr_in), int(sr_out))
    return signal.resample_poly(np.asarray(audio, dtype=np.float64), sr_out // g, sr_in // g,
                                window=("kaiser", 8.0))


def context_weights(t, window_start: float, window_end: float, bar: tuple[float, float],
                    mode: WindowMode) -> np.ndarray:
    """Amplitude weight at times ``t`` inside a window for a given mode.

    The Hann ramp rises from 0 at the window edge to 1 at the bar edge,
    spanning the whole context on each side.
    """
    mode = WindowMode(mode)
    t = np.asarray(t, dtype=float)
    if mode is WindowMode.CENTER:
        return np.ones_like(t)
    inside = (t >= bar[0]) & (t < bar[1])
    if mode is WindowMode.ALONE:
        return inside.astype(float)
    w = np.ones_like(t)
    left_len = bar[0] - window_start
    right_len = window_end - bar[1]
    left = t < bar[0]
    right = t >= bar[1]
    if left_len > 0:
        w[left] = 0.5 * (1 - np.cos(np.pi * (t[left] - window_start) / left_len))
    if right_len > 0:
        w[right] = 0.5 * (1 - np.cos(np.pi * (window_end - t[right]) / right_len))
    return np.clip(w, 0.0, 1.0)


def _ramp(n: int) -> np.ndarray:
    # rising half of a Hann window of length 2n: starts at exactly 0
    return 0.5 * (1 - np.cos(np.pi * np.arange(n) / n))


def slice_window(audio, center_time: float, bar_interval: tuple[float, float],
                 mode: WindowMode, cfg: MelConfig = MelConfig()) -> np.ndarray:
    """Fixed-length window of samples centered at ``center_time``.

    Zero-padded past the song edges. ``alone`` zeroes everything outside the
    bar; ``hann`` ramps the context on each side from 0 up to the bar.
    """
    start, end = bar_interval
    if not end > start:
        raise ValueError(f"degenerate bar interval {bar_interval}")
    x = np.asarray(audio, dtype=np.float64)
    sr = cfg.sample_rate
    n = cfg.window_samples
    w0 = int(round(center_time * sr)) - n // 2
    out = np.zeros(n)
    lo, hi = max(w0, 0), min(w0 + n, len(x))
    if hi > lo:
        out[lo - w0:hi - w0] = x[lo:hi]
    mode = WindowMode(mode)
    if mode is WindowMode.CENTER:
        return out
    b0 = int(np.clip(round(start * sr) - w0, 0, n))
    b1 = int(np.clip(round(end * sr) - w0, 0, n))
    if mode is WindowMode.ALONE:
        out[:b0] = 0.0
        out[b1:] = 0.0
        return out
    out[:b0] *= _ramp(b0)
    out[b1:] *= _ramp(n - b1)[::-1]
    return out


def sync_to_grid(fm: FeatureMatrix, grid: TimeGrid) -> FeatureMatrix:
    """Average frames over each grid interval ``[t_i, t_{i+1})``.

    Intervals holding no frame copy the frame nearest their midpoint.
    """
    times = fm.frame_times
    inst = grid.instants
    mids = grid.midpoints
    idx = np.searchsorted(times, inst, side="left")
    out = np.empty((len(mids), fm.data.shape[1]))
    full = idx[1:] > idx[:-1]
    for i in np.flatnonzero(full):
        out[i] = fm.data[idx[i]:idx[i + 1]].mean(axis=0)
    if not np.all(full):
        nearest = np.abs(times[None, :] - mids[~full, None]).argmin(axis=1)
        out[~full] = fm.data[nearest]
    return FeatureMatrix(out, mids)


def bar_intervals(grid: TimeGrid) -> list[tuple[float, float]]:
    inst = grid.instants
    return list(zip(inst[:-1].tolist(), inst[1:].tolist()))


def feature_window(fm: FeatureMatrix, center_time: float, bar_interval: tuple[float, float],
                   mode: WindowMode, cfg: MelConfig = MelConfig(),
                   frame_period: float | None = None) -> np.ndarray:
    """Context window cut from a precomputed log-mel matrix.

    Mirrors :func:`slice_window` for inputs that have no waveform: frames
    past the song edge hold the silence floor, and the mode's amplitude
    weight ``w`` is applied to the mel power as ``w**2``.
    """
    if not bar_interval[1] > bar_interval[0]:
        raise ValueError(f"degenerate bar interval {bar_interval}")
    times = fm.frame_times
    if frame_period is None:
        frame_period = float(np.median(np.diff(times))) if len(times) > 1 else 1.0
    n = int(round(cfg.window_seconds / frame_period))
    half = cfg.window_seconds / 2
    w_start = center_time - half
    t = w_start + (np.arange(n) + 0.5) * frame_period
    k = np.rint((t - times[0]) / frame_period).astype(int)
    valid = (k >= 0) & (k < len(times))
    win = np.full((n, fm.data.shape[1]), np.log(LOG_FLOOR))
    win[valid] = fm.data[k[valid]]
    mode = WindowMode(mode)
    if mode is WindowMode.CENTER:
        return win
    w = context_weights(t, w_start, w_start + cfg.window_seconds, bar_interval, mode)
    power = np.exp(win) * (w ** 2)[:, None]
    return np.log(power + LOG_FLOOR)


def pool_window(window: np.ndarray, n_parts: int = 4) -> np.ndarray:
    """Per-band mean and std over equal time parts: (T, B) -> (2 * n_parts * B,)."""
    parts = np.array_split(np.asarray(window), n_parts, axis=0)
    means = [p.mean(axis=0) for p in parts]
    stds = [p.std(axis=0) for p in parts]
    return np.concatenate(means + stds)


def song_windows(song: Song, grid: TimeGrid, mode: WindowMode, cfg: MelConfig = MelConfig()):
    """Yield the log-mel context window for every interval of ``grid``."""
    bars = bar_intervals(grid)
    if song.audio is not None:
        for c, bar in zip(grid.midpoints, bars):
            x = slice_window(song.audio, c, bar, mode, cfg)
            yield log_mel(x, cfg).data
    elif song.features is not None:
        fm = song.features
        period = float(np.median(np.diff(fm.frame_times))) if fm.n_frames > 1 else 1.0
        for c, bar in zip(grid.midpoints, bars):
            yield feature_window(fm, c, bar, mode, cfg, frame_period=period)
    else:
        raise ValueError(f"song {song.song_id} has neither audio nor features")


def pooled_inputs(song: Song, grid: TimeGrid, mode: WindowMode,
                  cfg: MelConfig = MelConfig()) -> np.ndarray:
    """Backbone input rows (one per grid interval) for a song."""
    return np.stack([pool_window(w) for w in song_windows(song, grid, mode, cfg)])


def song_log_mel(song: Song, cfg: MelConfig = MelConfig()) -> FeatureMatrix:
    if song.features is not None:
        return song.features
    return log_mel(song.audio, cfg)
