"""File formats: annotations, beat lists, binary matrices, WAV, corpus index."""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from ..core import (Annotation, AnnotationError, EmbeddingMatrix, FeatureMatrix, Segment, Song,
                    StructureEstimate, TimeGrid)
from ..features import resample

MATRIX_MAGIC = b"MSAMAT1\n"


class DataError(ValueError):
    """Malformed or missing input data (CLI exit code 2)."""


def _lines(text: str):
    for no, line in enumerate(text.split("\n"), start=1):
        body = line.split("#", 1)[0].strip()
        if body:
            yield no, body


# -- annotations ------------------------------------------------------------------

def parse_annotation(text: str, song_id: str = "") -> Annotation:
    """``start<TAB>end<TAB>label`` lines; ``#`` starts a comment."""
    segs = []
    for no, body in _lines(text):
        cols = body.split("\t")
        if len(cols) != 3:
            raise DataError(f"line {no}: expected 3 tab-separated fields, got {len(cols)}")
        try:
            start, end = float(cols[0]), float(cols[1])
        except ValueError:
            raise DataError(f"line {no}: non-numeric time") from None
        try:
            segs.append((no, Segment(start, end, cols[2].strip())))
        except AnnotationError as exc:
            raise DataError(f"line {no}: {exc}") from None
    if not segs:
        raise DataError("annotation has no segments")
    segs.sort(key=lambda t: t[1].start)
    for (_, a), (no, b) in zip(segs, segs[1:]):
        if b.start < a.end - 1e-9:
            raise DataError(f"line {no}: segment overlaps the previous one")
        if b.start - a.end > 0.05 + 1e-9:
            raise DataError(f"line {no}: gap of {b.start - a.end:.3f}s before segment")
    return Annotation.from_segments([s for _, s in segs], song_id)


def format_annotation(ann: Annotation | StructureEstimate) -> str:
    if isinstance(ann, StructureEstimate):
        ann = ann.to_annotation()
    return "".join(f"{s.start:.6f}\t{s.end:.6f}\t{s.label}\n" for s in ann.segments)


# -- beats ------------------------------------------------------------------------

def parse_beats(text: str) -> tuple[TimeGrid, TimeGrid]:
    """``time<TAB>position`` lines; position 1 marks a downbeat."""
    times, pos = [], []
    for no, body in _lines(text):
        cols = body.split()
        if len(cols) != 2:
            raise DataError(f"line {no}: expected time and beat position")
        try:
            t, p = float(cols[0]), int(cols[1])
        except ValueError:
            raise DataError(f"line {no}: malformed beat entry") from None
        if p < 1:
            raise DataError(f"line {no}: beat position must be >= 1")
        if times and t <= times[-1]:
            raise DataError(f"line {no}: beat times must increase")
        times.append(t)
        pos.append(p)
    times_a = np.array(times)
    down = times_a[np.array(pos) == 1]
    try:
        return TimeGrid(times_a, "beat"), TimeGrid(down, "downbeat")
    except ValueError as exc:
        raise DataError(str(exc)) from None


def format_beats(times, positions) -> str:
    return "".join(f"{t:.6f}\t{int(p)}\n" for t, p in zip(times, positions))


# -- matrices ---------------------------------------------------------------------

def dump_matrix(m: FeatureMatrix) -> bytes:
    rows, cols = m.data.shape
    if rows < 1:
        raise DataError("refusing to write an empty matrix")
    return (MATRIX_MAGIC + struct.pack("<II", rows, cols)
            + np.ascontiguousarray(m.data, dtype="<f4").tobytes()
            + np.ascontiguousarray(m.frame_times, dtype="<f8").tobytes())


def load_matrix(buf: bytes, cls=FeatureMatrix) -> FeatureMatrix:
    if not buf.startswith(MATRIX_MAGIC):
        raise DataError("bad matrix magic")
    off = len(MATRIX_MAGIC)
    if len(buf) < off + 8:
        raise DataError("truncated matrix header")
    rows, cols = struct.unpack_from("<II", buf, off)
    off += 8
    if rows < 1:
        raise DataError("matrix has no rows")
    need = off + rows * cols * 4 + rows * 8
    if len(buf) != need:
        raise DataError(f"matrix payload is {len(buf)} bytes, header implies {need}")
    data = np.frombuffer(buf, dtype="<f4", count=rows * cols, offset=off).reshape(rows, cols)
    times = np.frombuffer(buf, dtype="<f8", count=rows, offset=off + rows * cols * 4)
    try:
        return cls(data.astype(np.float64), times.astype(np.float64))
    except ValueError as exc:
        raise DataError(str(exc)) from None


def write_matrix(path, m: FeatureMatrix):
    Path(path).write_bytes(dump_matrix(m))


def read_matrix(path, cls=FeatureMatrix) -> FeatureMatrix:
    return load_matrix(Path(path).read_bytes(), cls)


def read_embedding(path) -> EmbeddingMatrix:
    return read_matrix(path, EmbeddingMatrix)


# -- audio ------------------------------------------------------------------------

def read_wav(path, target_sr: int = 16000) -> np.ndarray:
    """Mono float64 samples at ``target_sr`` from 16/24/32-bit PCM or float WAV."""
    sr, x = wavfile.read(path)
    if x.dtype == np.int16:
        x = x / 32768.0
    elif x.dtype == np.int32:
        x = x / 2147483648.0
    elif x.dtype == np.uint8:
        x = (x.astype(np.float64) - 128) / 128.0
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 2:
        x = x.mean(axis=1)
    return resample(x, sr, target_sr)


def write_wav(path, x, sr: int = 16000):
    wavfile.write(path, sr, np.asarray(x, dtype=np.float32))


# -- corpus index -------------------------------------------------------------------

@dataclass(frozen=True)
class CorpusEntry:
    song_id: str
    data_path: str
    annotation_path: str
    beats_path: str


def read_index(path) -> list[CorpusEntry]:
    """TSV of ``song_id, data, annotation, beats``; relative paths resolve against the index."""
    base = Path(path).parent
    entries, seen = [], set()
    for no, body in _lines(Path(path).read_text(encoding="utf-8")):
        cols = body.split("\t")
        if len(cols) != 4:
            raise DataError(f"{path}:{no}: expected 4 tab-separated fields")
        sid = cols[0]
        if sid in seen:
            raise DataError(f"{path}:{no}: duplicate song id {sid!r}")
        seen.add(sid)
        paths = [str(base / c) if not os.path.isabs(c) else c for c in cols[1:]]
        for p in paths:
            if not os.path.exists(p):
                raise DataError(f"{path}:{no}: missing file {p}")
        entries.append(CorpusEntry(sid, *paths))
    return entries


def write_index(path, entries: list[CorpusEntry]):
    base = Path(path).parent
    lines = ["# song_id\tdata\tannotation\tbeats"]
    for e in entries:
        cols = [os.path.relpath(p, base) for p in (e.data_path, e.annotation_path, e.beats_path)]
        lines.append("\t".join([e.song_id, *cols]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_song(entry: CorpusEntry) -> Song:
    try:
        ann = parse_annotation(Path(entry.annotation_path).read_text(encoding="utf-8"), entry.song_id)
        beats, down = parse_beats(Path(entry.beats_path).read_text(encoding="utf-8"))
    except DataError as exc:
        raise DataError(f"{entry.song_id}: {exc}") from None
    if entry.data_path.lower().endswith(".wav"):
        audio = read_wav(entry.data_path)
        return Song(entry.song_id, ann, beats, down, audio=audio, duration=len(audio) / 16000)
    fm = read_matrix(entry.data_path)
    period = float(np.median(np.diff(fm.frame_times))) if fm.n_frames > 1 else 0.0
    return Song(entry.song_id, ann, beats, down, features=fm,
                duration=float(fm.frame_times[-1] + period))
