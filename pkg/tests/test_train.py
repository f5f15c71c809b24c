import numpy as np
import pytest

from msaml.cli.synth import SynthConfig, synth_songs
from msaml.features import sync_to_grid
from msaml.metriclearn import (EmbeddingNet, TrainConfig, prepare_songs, train_model,
                               validate_model)
from msaml.metriclearn.train import PreparedSong
from msaml.metrics import MetricsConfig


@pytest.fixture(scope="module")
def small_corpus():
    songs = synth_songs(SynthConfig(n_songs=5, noise_std=3.0, seed=5))
    cfg = TrainConfig(batch_size=32, max_epochs=2, seed=1)
    return prepare_songs(songs, cfg), cfg


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(batch_size=1)
    with pytest.raises(ValueError):
        TrainConfig(lr_factor=1.0)
    with pytest.raises(ValueError):
        TrainConfig(loss="xyz")
    with pytest.raises(ValueError):
        TrainConfig(window_mode="wide")


def test_config_text_roundtrip():
    cfg = TrainConfig(loss="tri", distance="co", normalize=False, lr=5e-4,
                      algo_params=(("evec_smooth", "7"),))
    from msaml.metriclearn.checkpoint import parse_config_text
    back = TrainConfig.from_mapping(parse_config_text(cfg.to_text()))
    assert back == cfg


def test_zero_epochs_returns_initial_net(small_corpus):
    prep, cfg = small_corpus
    res = train_model(prep[:3], TrainConfig(max_epochs=0, seed=1), prep[3:])
    assert res.history == []
    fresh = EmbeddingNet(res.net.config, seed=1)
    for k, v in fresh.params.items():
        assert np.array_equal(res.net.params[k], v)


def test_training_is_deterministic(small_corpus):
    prep, cfg = small_corpus
    a = train_model(prep[:3], cfg, prep[3:])
    b = train_model(prep[:3], cfg, prep[3:])
    assert a.history == b.history and len(a.history) == 2
    for k in a.net.state():
        assert np.array_equal(a.net.state()[k], b.net.state()[k])


@pytest.mark.parametrize("loss,dist", [("tri", "eu"), ("con", "co")])
def test_other_losses_train(small_corpus, loss, dist):
    prep, _ = small_corpus
    cfg = TrainConfig(batch_size=32, max_epochs=1, loss=loss, distance=dist)
    res = train_model(prep[:3], cfg, prep[3:])
    assert np.isfinite(res.history[0].loss)


def test_rejects_empty_or_overlapping(small_corpus):
    prep, cfg = small_corpus
    with pytest.raises(ValueError):
        train_model([], cfg, prep)
    with pytest.raises(ValueError):
        train_model(prep[:3], cfg, prep[2:])


def _raw_feature_eval(songs, **kw):
    prep = prepare_songs(songs, TrainConfig())
    feats = [sync_to_grid(s.features, s.downbeats) for s in songs]
    return validate_model(None, prep, features=feats, **kw)


def test_validation_on_noiseless_blocks():
    songs = synth_songs(SynthConfig(n_songs=3, noise_std=0.0, seed=8))
    res = _raw_feature_eval(songs)
    assert res.failures == 0
    for m in res.per_song.values():
        assert m.hr3f >= 0.95


def test_single_song_mean_equals_song():
    songs = synth_songs(SynthConfig(n_songs=1, noise_std=1.0, seed=9))
    res = _raw_feature_eval(songs)
    (only,) = res.per_song.values()
    assert res.mean.as_row() == pytest.approx(only.as_row())


def test_perfect_features_score_one():
    # one-hot rows of the true section label make every analyzer decision trivial
    songs = synth_songs(SynthConfig(n_songs=2, noise_std=0.0, seed=10))
    prep = prepare_songs(songs, TrainConfig())
    feats = [np.eye(s.labels.max() + 1)[s.labels] * 10 for s in prep]
    res = validate_model(None, prep, features=feats, metrics=MetricsConfig())
    assert res.score == pytest.approx(1.0)


def test_failures_are_counted(small_corpus):
    prep, _ = small_corpus
    bad = PreparedSong("bad", prep[0].inputs, prep[0].labels, prep[0].annotation, prep[0].grid,
                       prep[0].duration)
    feats = [np.zeros((2, 3))]  # wrong length for the grid
    res = validate_model(None, [bad], features=feats)
    assert res.failures == 1 and res.mean is None and res.score == 0.0
