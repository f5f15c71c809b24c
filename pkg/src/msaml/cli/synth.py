"""Synthetic structured corpus in the log-mel domain.

Each song is a sequence of bar-aligned sections drawn from a small label
alphabet. A label owns a random 128-band template; every frame is its
section's template plus temporally correlated AR(1) noise. The noise lives
in a few smooth spectral envelopes shared by the whole corpus (slow gain
and tilt drifts), so it is nuisance variation a learned embedding can
suppress while raw features cannot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..core import Annotation, FeatureMatrix, Segment, Song, TimeGrid
from ..features import MelConfig, mel_band_centers
from .io import (CorpusEntry, format_annotation, format_beats, write_index, write_matrix,
                 write_wav)


@dataclass(frozen=True)
class SynthConfig:
    n_songs: int = 10
    labels_min: int = 5
    labels_max: int = 8
    segments_min: int = 10
    segments_max: int = 16
    seg_seconds_min: float = 8.0
    seg_seconds_max: float = 32.0
    tempo_min: float = 100.0
    tempo_max: float = 140.0
    noise_std: float = 1.0
    template_std: float = 1.0
    white_std: float = 0.1
    nuisance_rank: int = 4
    ar_coef: float = 0.9
    frame_period: float = 0.1
    n_bands: int = 128
    seed: int = 0

    def __post_init__(self):
        pairs = [(self.labels_min, self.labels_max), (self.segments_min, self.segments_max),
                 (self.seg_seconds_min, self.seg_seconds_max), (self.tempo_min, self.tempo_max)]
        for lo, hi in pairs:
            if lo <= 0 or lo > hi:
                raise ValueError(f"invalid range {lo}..{hi}")
        if self.labels_min < 2 or self.segments_min < self.labels_min:
            raise ValueError("need >= 2 labels and at least as many segments as labels")
        if self.noise_std < 0 or self.white_std < 0 or self.n_songs < 1:
            raise ValueError("invalid synth configuration")


def nuisance_basis(cfg: SynthConfig, rng: np.random.Generator) -> np.ndarray:
    """``rank x bands`` smooth envelopes scaled so each band has unit total variance."""
    x = np.linspace(0, 1, cfg.n_bands)
    rows = []
    for k in range(cfg.nuisance_rank):
        coef = rng.standard_normal(4) / (1 + np.arange(4))
        rows.append(sum(c * np.cos(np.pi * j * x + k) for j, c in enumerate(coef)))
    B = np.array(rows)
    B /= np.sqrt(np.mean(np.sum(B ** 2, axis=0)))
    return B


def label_sequence(n_labels: int, n_segments: int, rng: np.random.Generator) -> list[int]:
    """Sections with no immediate repeats that use every label at least once."""
    while True:
        seq = [0]
        for _ in range(n_segments - 1):
            seen = max(seq) + 1
            choices = [l for l in range(min(seen + 1, n_labels)) if l != seq[-1]]
            seq.append(int(rng.choice(choices)))
        if len(set(seq)) == n_labels:
            return seq


def _ar1(n: int, dims: int, coef: float, rng: np.random.Generator) -> np.ndarray:
    z = np.empty((n, dims))
    z[0] = rng.standard_normal(dims)
    innov = math.sqrt(1 - coef ** 2)
    w = rng.standard_normal((n, dims))
    for t in range(1, n):
        z[t] = coef * z[t - 1] + innov * w[t]
    return z


def synth_song(song_id: str, cfg: SynthConfig, basis: np.ndarray,
               rng: np.random.Generator) -> tuple[Song, np.ndarray]:
    """One song plus its per-frame label ids."""
    tempo = rng.uniform(cfg.tempo_min, cfg.tempo_max)
    beat = 60.0 / tempo
    bar = 4 * beat
    n_labels = int(rng.integers(cfg.labels_min, cfg.labels_max + 1))
    n_segments = int(rng.integers(max(cfg.segments_min, n_labels), cfg.segments_max + 1))
    seq = label_sequence(n_labels, n_segments, rng)
    bars_lo = max(1, math.ceil(cfg.seg_seconds_min / bar - 1e-9))
    bars_hi = max(bars_lo, math.floor(cfg.seg_seconds_max / bar + 1e-9))
    seg_bars = rng.integers(bars_lo, bars_hi + 1, size=n_segments)
    edges = np.concatenate([[0], np.cumsum(seg_bars)]) * bar
    duration = float(edges[-1])
    names = [chr(ord("A") + l) for l in range(n_labels)]
    ann = Annotation(tuple(Segment(float(a), float(b), names[l])
                           for a, b, l in zip(edges[:-1], edges[1:], seq)), song_id)

    n_beats = int(round(duration / beat))
    beat_times = np.arange(n_beats + 1) * beat
    positions = np.arange(n_beats + 1) % 4 + 1
    beats = TimeGrid(beat_times, "beat")
    downbeats = TimeGrid(beat_times[positions == 1], "downbeat")

    base = 0.5 * rng.standard_normal(cfg.n_bands)
    templates = base + cfg.template_std * rng.standard_normal((n_labels, cfg.n_bands))
    n_frames = int(math.ceil(duration / cfg.frame_period - 1e-9))
    times = np.arange(n_frames) * cfg.frame_period
    seg_idx = np.clip(np.searchsorted(edges, times, side="right") - 1, 0, n_segments - 1)
    frame_labels = np.array(seq)[seg_idx]
    data = templates[frame_labels]
    if cfg.noise_std > 0:
        data = data + cfg.noise_std * _ar1(n_frames, basis.shape[0], cfg.ar_coef, rng) @ basis
        if cfg.white_std > 0:
            data = data + cfg.white_std * cfg.noise_std * rng.standard_normal(data.shape)
    fm = FeatureMatrix(data, times)
    return Song(song_id, ann, beats, downbeats, features=fm, duration=duration), frame_labels


def synth_songs(cfg: SynthConfig) -> list[Song]:
    """Generate the corpus in memory."""
    root = np.random.SeedSequence(cfg.seed)
    basis_seq, *song_seqs = root.spawn(cfg.n_songs + 1)
    basis = nuisance_basis(cfg, np.random.default_rng(basis_seq))
    return [synth_song(f"song{i:03d}", cfg, basis, np.random.default_rng(s))[0]
            for i, s in enumerate(song_seqs)]


def render_audio(song: Song, sr: int = 16000, n_partials: int = 3) -> np.ndarray:
    """Sum of sinusoids at the loudest mel bands of each frame's features."""
    fm = song.features
    centers = mel_band_centers(MelConfig())
    n = int(round(song.duration * sr))
    t = np.arange(n) / sr
    frame = np.clip(np.searchsorted(fm.frame_times, t, side="right") - 1, 0, fm.n_frames - 1)
    out = np.zeros(n)
    top = np.argsort(-fm.data, axis=1)[:, :n_partials]
    for k in range(n_partials):
        band = top[frame, k]
        amp = np.exp(0.5 * (fm.data[frame, band] - fm.data.max()))
        phase = 2 * np.pi * np.cumsum(centers[band]) / sr
        out += amp * np.sin(phase)
    return 0.3 * out / max(np.abs(out).max(), 1e-9)


def write_corpus(cfg: SynthConfig, out_dir, audio: bool = False) -> list[CorpusEntry]:
    """Write features (or WAV), annotations, beats and ``index.tsv`` into ``out_dir``."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create corpus directory {out}: {exc}") from exc
    entries = []
    for song in synth_songs(cfg):
        sid = song.song_id
        if audio:
            data_path = out / f"{sid}.wav"
            write_wav(data_path, render_audio(song))
        else:
            data_path = out / f"{sid}.msamat"
            write_matrix(data_path, song.features)
        ann_path = out / f"{sid}.lab"
        beats_path = out / f"{sid}.beats"
        ann_path.write_text(format_annotation(song.annotation), encoding="utf-8")
        positions = np.arange(len(song.beats)) % 4 + 1
        beats_path.write_text(format_beats(song.beats.instants, positions), encoding="utf-8")
        entries.append(CorpusEntry(sid, str(data_path), str(ann_path), str(beats_path)))
    write_index(out / "index.tsv", entries)
    return entries
