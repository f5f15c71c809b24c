import numpy as np
import pytest

from msaml.cli.io import read_matrix
from msaml.cli.main import main, read_config


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    d = tmp_path_factory.mktemp("corpus")
    assert run("synth", "--out", d, "--n-songs", 10, "--seed", 2, "--noise-std", 3.0) == 0
    return d


def test_eval_identical_files(corpus, capsys):
    lab = corpus / "song000.lab"
    assert run("eval", "--ref", lab, "--est", lab, "--song-id", "s") == 0
    out = capsys.readouterr().out
    assert out == "s\t" + "\t".join(["1.000000"] * 5) + "\n"


def test_unknown_flag_and_subcommand(capsys):
    assert run("eval", "--bogus") == 1
    assert run("frobnicate") == 1
    assert "usage" in capsys.readouterr().err
    assert run() == 1


def test_data_errors_exit_2(tmp_path, corpus):
    bad = tmp_path / "bad.lab"
    bad.write_text("0\t5\tA\n6\t8\tB\n")
    assert run("eval", "--ref", bad, "--est", bad) == 2
    assert run("eval", "--ref", tmp_path / "missing.lab", "--est", bad) == 2
    junk = tmp_path / "junk.ckpt"
    junk.write_bytes(b"nope")
    assert run("embed", "--checkpoint", junk, "--index", corpus / "index.tsv",
               "--out", tmp_path / "e") == 2


def test_config_file_defaults_and_override(tmp_path):
    cfg = tmp_path / "synth.cfg"
    cfg.write_text("# corpus defaults\nn-songs = 2\nseed = 9   # fixed\naudio = false\n")
    assert run("--config", cfg, "synth", "--out", tmp_path / "a") == 0
    assert len(list((tmp_path / "a").glob("*.lab"))) == 2
    assert run("--config", cfg, "synth", "--out", tmp_path / "b", "--n-songs", 3) == 0
    assert len(list((tmp_path / "b").glob("*.lab"))) == 3
    assert read_config(cfg) == {"n_songs": "2", "seed": "9", "audio": "false"}
    cfg.write_text("noise_std = loud\n")
    assert run("--config", cfg, "synth", "--out", tmp_path / "c") == 1


def test_full_pipeline(corpus, tmp_path, capsys):
    idx = corpus / "index.tsv"
    feats, emb, est = tmp_path / "feats", tmp_path / "emb", tmp_path / "est"
    ckpt = tmp_path / "model.ckpt"
    assert run("extract", "--index", idx, "--out", feats) == 0
    win = read_matrix(feats / "song000.win.msamat")
    sync = read_matrix(feats / "song000.sync.msamat")
    assert win.data.shape[1] == 1024 and sync.data.shape == (win.n_frames, 128)
    assert run("train", "--index", idx, "--val-songs", 3, "--epochs", 2, "--batch-size", 64,
               "--loss", "mul", "--distance", "eu", "--grid", "downbeat",
               "--window-mode", "hann", "--seed", 0, "--out", ckpt,
               "--history", tmp_path / "hist.tsv") == 0
    assert (tmp_path / "hist.tsv").read_text().count("\n") == 3
    assert run("embed", "--checkpoint", ckpt, "--index", idx, "--out", emb) == 0
    E = read_matrix(emb / "song000.emb.msamat")
    assert E.data.shape == (win.n_frames, 100)
    assert np.allclose(np.linalg.norm(E.data, axis=1), 1, atol=1e-6)
    for algo in ("scluster", "foote-fmc2d", "cnmf"):
        out = est / algo
        assert run("analyze", "--algo", algo, "--index", idx, "--features-dir", emb,
                   "--out", out) == 0
        assert len(list(out.glob("*.est.lab"))) == 10
    capsys.readouterr()
    assert run("eval", "--index", idx, "--est-dir", est / "scluster") == 0
    rows = capsys.readouterr().out.strip().split("\n")
    assert len(rows) == 11 and rows[-1].startswith("MEAN\t")
    assert all(len(r.split("\t")) == 6 for r in rows)


def test_analyze_single_file_and_render(corpus, tmp_path):
    out = tmp_path / "one.est.lab"
    assert run("analyze", "--input", corpus / "song001.msamat", "--beats", corpus / "song001.beats",
               "--out", out, "--param", "n_clusters=auto") == 0
    first = out.read_text().split("\n")[0].split("\t")
    assert float(first[0]) == 0.0
    pgm = tmp_path / "s.pgm"
    assert run("render-ssm", "--input", corpus / "song001.msamat", "--out", pgm) == 0
    n = read_matrix(corpus / "song001.msamat").n_frames
    assert pgm.read_bytes().startswith(f"P5\n{n} {n}\n255\n".encode())
    assert run("analyze", "--input", corpus / "song001.msamat") == 1


def test_gridsearch_command(corpus, tmp_path):
    feats = tmp_path / "f"
    assert run("extract", "--index", corpus / "index.tsv", "--out", feats) == 0
    out = tmp_path / "grid.tsv"
    assert run("gridsearch", "--index", corpus / "index.tsv", "--features-dir", feats,
               "--suffix", "sync", "--grid-param", "evec_smooth=3,5", "--out", out) == 0
    lines = out.read_text().strip().split("\n")
    assert lines[0] == "evec_smooth\tsummary" and len(lines) == 4
    assert lines[-1].startswith("# best\tevec_smooth=")
    assert run("gridsearch", "--index", corpus / "index.tsv", "--features-dir", feats,
               "--grid-param", "evec_smooth=a,b") == 1
