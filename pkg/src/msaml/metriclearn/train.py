"""Training loop with per-song batching and MSA-score model selection."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, fields

import numpy as np

from ..core import Annotation, Song, TimeGrid, examples_from_annotation
from ..features import MelConfig, WindowMode, pooled_inputs
from ..metrics import MetricsConfig, SegmentMetrics, evaluate, mean_metrics
from ..msa.analyzers import analyze, make_params
from .losses import DistanceKind, MsParams, batch_loss
from .net import EmbeddingNet, NetConfig
from .optim import Adam, PlateauSchedule
from .sampler import epoch_batches

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 128
    lr: float = 1e-3
    lr_factor: float = 0.8
    lr_patience: int = 2
    lr_floor: float = 1e-5
    max_epochs: int = 20
    seed: int = 0
    loss: str = "mul"
    distance: str = "eu"
    window_mode: str = "hann"
    grid: str = "downbeat"
    normalize: bool = True
    algo: str = "scluster"
    algo_params: tuple = ()  # (name, value) pairs for the validation analyzer

    def __post_init__(self):
        if self.batch_size < 2:
            raise ValueError("batch_size must be >= 2")
        if not 0 < self.lr_factor < 1:
            raise ValueError("lr_factor must lie in (0, 1)")
        if self.loss not in ("mul", "tri", "con"):
            raise ValueError(f"unknown loss {self.loss!r}")
        DistanceKind(self.distance)
        WindowMode(self.window_mode)
        if self.grid not in ("beat", "downbeat"):
            raise ValueError(f"unknown grid {self.grid!r}")

    def to_text(self) -> str:
        return "".join(f"{f.name} = {_fmt(getattr(self, f.name))}\n" for f in fields(self))

    @classmethod
    def from_mapping(cls, m: dict) -> "TrainConfig":
        kw = {}
        for f in fields(cls):
            if f.name not in m:
                continue
            v = m[f.name]
            if f.name == "algo_params":
                v = _parse_params(v) if isinstance(v, str) else tuple(v)
            elif isinstance(v, str):
                default = getattr(cls, f.name)
                if isinstance(default, bool):
                    v = v.strip().lower() in ("1", "true", "yes")
                elif isinstance(default, int):
                    v = int(v)
                elif isinstance(default, float):
                    v = float(v)
            kw[f.name] = v
        return cls(**kw)


def _fmt(v):
    if isinstance(v, tuple):
        return ",".join(f"{k}:{x}" for k, x in v)
    return repr(v) if isinstance(v, float) else str(v)


def _parse_params(text: str) -> tuple:
    out = []
    for item in filter(None, (t.strip() for t in text.split(","))):
        k, _, v = item.partition(":")
        out.append((k.strip(), v.strip()))
    return tuple(out)


@dataclass
class PreparedSong:
    """Backbone inputs and labels for one song on one grid."""

    song_id: str
    inputs: np.ndarray
    labels: np.ndarray
    annotation: Annotation
    grid: TimeGrid
    duration: float


def prepare_song(song: Song, grid_kind: str, mode, mel: MelConfig = MelConfig()) -> PreparedSong:
    grid = song.grid(grid_kind)
    ex = examples_from_annotation(song.annotation, grid)
    labels = np.array([e.label_id for e in ex], dtype=np.int64)
    duration = song.duration or song.annotation.duration
    return PreparedSong(song.song_id, pooled_inputs(song, grid, mode, mel), labels,
                        song.annotation, grid, duration)


def prepare_songs(songs, cfg: TrainConfig, mel: MelConfig = MelConfig()) -> list[PreparedSong]:
    return [prepare_song(s, cfg.grid, cfg.window_mode, mel) for s in songs]


@dataclass
class ValidationResult:
    mean: SegmentMetrics | None
    per_song: dict = field(default_factory=dict)
    failures: int = 0

    @property
    def score(self) -> float:
        return self.mean.summary if self.mean is not None else 0.0


def validate_model(net: EmbeddingNet | None, songs: list[PreparedSong], algo: str = "scluster",
                   params=None, metrics: MetricsConfig = MetricsConfig(),
                   features=None) -> ValidationResult:
    """Embed each song, run the analyzer and average the metrics.

    With ``net=None`` the analyzer runs on ``features`` (one matrix per song)
    instead; this is the raw-feature baseline path. Songs whose analysis
    raises are counted and left out of the means.
    """
    if params is None or isinstance(params, dict):
        params = make_params(algo, params)
    per_song = {}
    failures = 0
    for i, s in enumerate(songs):
        X = net.embed(s.inputs) if net is not None else features[i]
        try:
            est = analyze(algo, X, s.grid, params, s.duration)
            per_song[s.song_id] = evaluate(s.annotation, est, metrics)
        except (ValueError, np.linalg.LinAlgError) as exc:
            log.warning("analysis failed for %s: %s", s.song_id, exc)
            failures += 1
    rows = list(per_song.values())
    mean = mean_metrics(rows, metrics.weights) if rows else None
    return ValidationResult(mean, per_song, failures)


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    score: float
    lr: float
    n_batches: int


@dataclass
class TrainResult:
    net: EmbeddingNet
    history: list
    initial_score: float | None = None
    best_epoch: int = 0


def train_model(train: list[PreparedSong], cfg: TrainConfig, val: list[PreparedSong],
                metrics: MetricsConfig = MetricsConfig(), ms: MsParams = MsParams()) -> TrainResult:
    """Train with Adam; keep the network with the best validation summary score."""
    if not train:
        raise ValueError("empty training corpus")
    if {s.song_id for s in train} & {s.song_id for s in val}:
        raise ValueError("training and validation songs overlap")
    in_dim = train[0].inputs.shape[1]
    net = EmbeddingNet(NetConfig(in_dim=in_dim, normalize=cfg.normalize), seed=cfg.seed)
    net.set_input_stats(np.vstack([s.inputs for s in train]))
    history: list[EpochRecord] = []
    if cfg.max_epochs <= 0:
        return TrainResult(net, history)

    params = make_params(cfg.algo, dict(cfg.algo_params))
    rng = np.random.default_rng(cfg.seed)
    opt = Adam(net.params, lr=cfg.lr)
    sched = PlateauSchedule(cfg.lr, cfg.lr_factor, cfg.lr_patience, cfg.lr_floor)
    initial = validate_model(net, val, cfg.algo, params, metrics).score if val else None
    sched.best = initial if initial is not None else -np.inf
    best_net, best_epoch = net.copy(), 0

    per_song = [[(k, i) for i in range(len(s.labels))] for k, s in enumerate(train)]
    for epoch in range(1, cfg.max_epochs + 1):
        net.train()
        losses = []
        for batch in epoch_batches(per_song, cfg.batch_size, rng):
            if len(batch) < 2:
                continue
            song = train[batch[0][0]]
            idx = np.array([i for _, i in batch])
            labels = song.labels[idx]
            E, cache = net.forward(song.inputs[idx])
            value, gE, _ = batch_loss(E, labels, cfg.loss, cfg.distance, ms)
            losses.append(value)
            if value == 0.0 and not np.any(gE):
                continue
            opt.step(net.params, net.backward(gE, cache))
        score = validate_model(net, val, cfg.algo, params, metrics).score if val else 0.0
        improved = sched.update(score)
        if improved or not val:
            best_net, best_epoch = net.copy(), epoch
        opt.lr = sched.lr
        rec = EpochRecord(epoch, float(np.mean(losses)) if losses else 0.0, score, sched.lr,
                          len(losses))
        history.append(rec)
        log.info("epoch %d loss %.5f score %.4f lr %.2e", epoch, rec.loss, score, sched.lr)
        if sched.exhausted:
            break
    return TrainResult(best_net.eval(), history, initial, best_epoch)
