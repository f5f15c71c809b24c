"""Command-line entry point: ``msaml <subcommand> [options]``.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from ..core import AnnotationError, EmbeddingMatrix, FeatureMatrix
from ..features import MelConfig, pooled_inputs, song_log_mel, sync_to_grid
from ..metriclearn.checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from ..metriclearn.train import TrainConfig, prepare_songs, train_model
from ..metrics import MetricsConfig, evaluate, format_row, mean_metrics
from ..msa.analyzers import ANALYZERS, analyze, make_params
from ..msa.gridsearch import grid_search
from ..msa.ssm import build_ssm
from .io import (DataError, format_annotation, load_song, parse_annotation, parse_beats,
                 read_index, read_matrix, write_matrix)
from .render import render_ssm
from .synth import SynthConfig, write_corpus

log = logging.getLogger("msaml")

LOSSES = ("mul", "tri", "con")
DISTANCES = ("eu", "co")
GRIDS = ("beat", "downbeat")
MODES = ("center", "alone", "hann")


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


def read_config(path) -> dict[str, str]:
    """``key = value`` lines with ``#`` comments; keys may use dashes or underscores."""
    out = {}
    for no, line in enumerate(Path(path).read_text(encoding="utf-8").split("\n"), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise UsageError(f"{path}:{no}: expected 'key = value'")
        k, _, v = body.partition("=")
        out[k.strip().replace("-", "_")] = v.strip()
    return out


def _kv(items) -> dict[str, str]:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"expected name=value, got {item!r}")
        k, _, v = item.partition("=")
        out[k.strip()] = v.strip()
    return out


# -- subcommands ----------------------------------------------------------------------

def cmd_synth(a):
    cfg = SynthConfig(n_songs=a.n_songs, noise_std=a.noise_std, seed=a.seed,
                      frame_period=a.frame_period)
    entries = write_corpus(cfg, a.out, audio=a.audio)
    print(f"wrote {len(entries)} songs to {a.out}")


def _songs(index):
    return [load_song(e) for e in read_index(index)]


def cmd_extract(a):
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    mel = MelConfig()
    for song in _songs(a.index):
        grid = song.grid(a.grid)
        mids = grid.midpoints
        write_matrix(out / f"{song.song_id}.win.msamat",
                     FeatureMatrix(pooled_inputs(song, grid, a.window_mode, mel), mids))
        write_matrix(out / f"{song.song_id}.sync.msamat", sync_to_grid(song_log_mel(song, mel), grid))
    print(f"extracted features to {out}")


def _train_config(a) -> TrainConfig:
    return TrainConfig(batch_size=a.batch_size, lr=a.lr, max_epochs=a.epochs, seed=a.seed,
                       loss=a.loss, distance=a.distance, window_mode=a.window_mode, grid=a.grid,
                       normalize=not a.no_normalize, algo=a.algo,
                       algo_params=tuple(_kv(a.param).items()))


def cmd_train(a):
    cfg = _train_config(a)
    songs = _songs(a.index)
    val = _songs(a.val_index) if a.val_index else []
    if not a.val_index and a.val_songs:
        songs, val = songs[:-a.val_songs], songs[-a.val_songs:]
    if not songs:
        raise DataError("no training songs")
    res = train_model(prepare_songs(songs, cfg), cfg, prepare_songs(val, cfg))
    save_checkpoint(a.out, res.net, cfg.to_text())
    if a.history:
        lines = ["epoch\tloss\tscore\tlr\tbatches"]
        lines += [f"{r.epoch}\t{r.loss:.6f}\t{r.score:.6f}\t{r.lr:.6g}\t{r.n_batches}"
                  for r in res.history]
        Path(a.history).write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"saved checkpoint to {a.out} (best epoch {res.best_epoch})")


def cmd_embed(a):
    net, ckcfg = load_checkpoint(a.checkpoint)
    grid_kind = a.grid or ckcfg.get("grid", "downbeat")
    mode = a.window_mode or ckcfg.get("window_mode", "hann")
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    for song in _songs(a.index):
        grid = song.grid(grid_kind)
        E = net.embed(pooled_inputs(song, grid, mode))
        write_matrix(out / f"{song.song_id}.emb.msamat", EmbeddingMatrix(E, grid.midpoints))
    print(f"embedded songs to {out}")


def cmd_analyze(a):
    params = make_params(a.algo, _kv(a.param))
    if a.input:
        if not (a.beats and a.out):
            raise UsageError("--input needs --beats and --out")
        X = read_matrix(a.input)
        beats, down = parse_beats(Path(a.beats).read_text(encoding="utf-8"))
        grid = down if a.grid == "downbeat" else beats
        if X.n_frames != len(grid) - 1:
            X = sync_to_grid(X, grid)
        duration = a.duration if a.duration is not None else float(grid.instants[-1])
        est = analyze(a.algo, X, grid, params, duration)
        Path(a.out).write_text(format_annotation(est), encoding="utf-8")
        return
    if not (a.index and a.features_dir and a.out):
        raise UsageError("analyze needs either --input or --index/--features-dir/--out")
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    for song in _songs(a.index):
        grid = song.grid(a.grid)
        X = read_matrix(Path(a.features_dir) / f"{song.song_id}.{a.suffix}.msamat")
        if X.n_frames != len(grid) - 1:
            X = sync_to_grid(X, grid)
        est = analyze(a.algo, X, grid, params, song.duration)
        (out / f"{song.song_id}.est.lab").write_text(format_annotation(est), encoding="utf-8")
    print(f"wrote estimates to {out}")


def _metrics_cfg(a) -> MetricsConfig:
    return MetricsConfig(frame_period=a.frame_period, trim=a.trim)


def cmd_eval(a):
    cfg = _metrics_cfg(a)
    lines = []
    if a.ref:
        if not a.est:
            raise UsageError("--ref needs --est")
        ref = parse_annotation(Path(a.ref).read_text(encoding="utf-8"), "ref")
        est = parse_annotation(Path(a.est).read_text(encoding="utf-8"), "est")
        lines.append(format_row(a.song_id or Path(a.ref).stem, evaluate(ref, est, cfg)))
    else:
        if not (a.index and a.est_dir):
            raise UsageError("eval needs --ref/--est or --index/--est-dir")
        rows = []
        for e in read_index(a.index):
            ref = parse_annotation(Path(e.annotation_path).read_text(encoding="utf-8"), e.song_id)
            est_path = Path(a.est_dir) / f"{e.song_id}.est.lab"
            est = parse_annotation(est_path.read_text(encoding="utf-8"), e.song_id)
            m = evaluate(ref, est, cfg)
            rows.append(m)
            lines.append(format_row(e.song_id, m))
        lines.append(format_row("MEAN", mean_metrics(rows, cfg.weights)))
    text = "\n".join(lines) + "\n"
    if a.out:
        Path(a.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_gridsearch(a):
    grids = {}
    for k, v in _kv(a.grid_param).items():
        try:
            grids[k] = [int(x) for x in v.split(",") if x.strip()]
        except ValueError:
            raise UsageError(f"grid values for {k!r} must be integers") from None
    if not grids:
        raise UsageError("gridsearch needs at least one --grid-param name=v1,v2,...")
    songs, feats = [], []
    for song in _songs(a.index):
        grid = song.grid(a.grid)
        X = read_matrix(Path(a.features_dir) / f"{song.song_id}.{a.suffix}.msamat")
        if X.n_frames != len(grid) - 1:
            X = sync_to_grid(X, grid)
        songs.append((song.annotation, grid, song.duration))
        feats.append(X)
    res = grid_search(a.algo, grids, songs, feats, _metrics_cfg(a), _kv(a.param))
    names = sorted(grids)
    lines = ["\t".join(names + ["summary"])]
    lines += ["\t".join([str(p[n]) for n in names] + [f"{s:.6f}"]) for p, s in res.table]
    lines.append("# best\t" + "\t".join(f"{n}={res.best[n]}" for n in names)
                 + f"\t{res.best_score:.6f}")
    text = "\n".join(lines) + "\n"
    if a.out:
        Path(a.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_render_ssm(a):
    X = read_matrix(a.input)
    render_ssm(build_ssm(X, a.sigma), a.out)


# -- parser ---------------------------------------------------------------------------

def build_parser() -> Parser:
    p = Parser(prog="msaml", description="Metric learning for music structure analysis.")
    p.add_argument("--config", help="key = value defaults for the subcommand")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", parser_class=Parser)

    s = sub.add_parser("synth", help="generate a synthetic structured corpus")
    s.add_argument("--out", required=True)
    s.add_argument("--n-songs", type=int, default=10)
    s.add_argument("--noise-std", type=float, default=3.5)
    s.add_argument("--frame-period", type=float, default=0.1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--audio", action="store_true", help="render WAV instead of feature files")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("extract", help="grid-synced log-mel and pooled context windows")
    s.add_argument("--index", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--grid", choices=GRIDS, default="downbeat")
    s.add_argument("--window-mode", choices=MODES, default="hann")
    s.set_defaults(func=cmd_extract)

    s = sub.add_parser("train", help="train an embedding network")
    s.add_argument("--index", required=True)
    s.add_argument("--val-index")
    s.add_argument("--val-songs", type=int, default=0, help="hold out the last N songs")
    s.add_argument("--out", required=True, help="checkpoint path")
    s.add_argument("--history", help="write per-epoch history TSV")
    s.add_argument("--loss", choices=LOSSES, default="mul")
    s.add_argument("--distance", choices=DISTANCES, default="eu")
    s.add_argument("--grid", choices=GRIDS, default="downbeat")
    s.add_argument("--window-mode", choices=MODES, default="hann")
    s.add_argument("--batch-size", type=int, default=128)
    s.add_argument("--epochs", type=int, default=20)
    s.add_argument("--lr", type=float, default=1e-3)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--no-normalize", action="store_true", help="drop the final L2 normalization")
    s.add_argument("--algo", choices=sorted(ANALYZERS), default="scluster")
    s.add_argument("--param", action="append", help="validation analyzer parameter name=value")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("embed", help="embed songs with a checkpoint")
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--index", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--grid", choices=GRIDS)
    s.add_argument("--window-mode", choices=MODES)
    s.set_defaults(func=cmd_embed)

    s = sub.add_parser("analyze", help="estimate structure from features or embeddings")
    s.add_argument("--algo", choices=sorted(ANALYZERS), default="scluster")
    s.add_argument("--param", action="append", help="analyzer parameter name=value")
    s.add_argument("--grid", choices=GRIDS, default="downbeat")
    s.add_argument("--input", help="single matrix file")
    s.add_argument("--beats", help="beats file for --input")
    s.add_argument("--duration", type=float)
    s.add_argument("--index")
    s.add_argument("--features-dir")
    s.add_argument("--suffix", default="emb", help="matrix files are <song>.<suffix>.msamat")
    s.add_argument("--out")
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("eval", help="score estimates against references")
    s.add_argument("--ref")
    s.add_argument("--est")
    s.add_argument("--song-id")
    s.add_argument("--index")
    s.add_argument("--est-dir")
    s.add_argument("--out")
    s.add_argument("--frame-period", type=float, default=0.1)
    s.add_argument("--trim", action="store_true", help="ignore first and last boundaries")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("gridsearch", help="tune analyzer integer parameters")
    s.add_argument("--algo", choices=sorted(ANALYZERS), default="scluster")
    s.add_argument("--index", required=True)
    s.add_argument("--features-dir", required=True)
    s.add_argument("--suffix", default="emb")
    s.add_argument("--grid", choices=GRIDS, default="downbeat")
    s.add_argument("--grid-param", action="append", help="name=v1,v2,...")
    s.add_argument("--param", action="append", help="fixed parameter name=value")
    s.add_argument("--frame-period", type=float, default=0.1)
    s.add_argument("--trim", action="store_true")
    s.add_argument("--out")
    s.set_defaults(func=cmd_gridsearch)

    s = sub.add_parser("render-ssm", help="write an SSM as a binary PGM image")
    s.add_argument("--input", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--sigma", type=float)
    s.set_defaults(func=cmd_render_ssm)
    return p


def _apply_config(parser: Parser, argv: list[str]) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    values = read_config(known.config)
    cmd = next((t for t in argv if not t.startswith("-") and t in _subparsers(parser)), None)
    if cmd is None:
        return
    sp = _subparsers(parser)[cmd]
    actions = {a.dest: a for a in sp._actions}
    defaults = {}
    for k, v in values.items():
        if k not in actions:
            raise UsageError(f"{known.config}: unknown option {k!r} for {cmd}")
        act = actions[k]
        if isinstance(act, argparse._StoreTrueAction):
            defaults[k] = v.lower() in ("1", "true", "yes")
        elif isinstance(act, argparse._AppendAction):
            defaults[k] = [x.strip() for x in v.split(";") if x.strip()]
        else:
            try:
                defaults[k] = act.type(v) if act.type else v
            except ValueError:
                raise UsageError(f"{known.config}: invalid value {v!r} for {k}") from None
            if act.choices and defaults[k] not in act.choices:
                raise UsageError(f"{known.config}: invalid value {v!r} for {k}")
    sp.set_defaults(**defaults)
    for act in sp._actions:
        if act.dest in defaults:
            act.required = False


def _subparsers(parser) -> dict:
    for act in parser._actions:
        if isinstance(act, argparse._SubParsersAction):
            return act.choices
    return {}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_help())
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return 1
    except (DataError, AnnotationError, CheckpointError, FileNotFoundError, KeyError,
            ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
