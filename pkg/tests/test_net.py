import numpy as np
import pytest
from hypothesis import given, strategies as st

from msaml.metriclearn.checkpoint import (CheckpointError, MAGIC, dump_tensors, load_checkpoint,
                                          load_tensors, save_checkpoint)
from msaml.metriclearn.gradcheck import grad_check, relative_error
from msaml.metriclearn.losses import DistanceKind
from msaml.metriclearn.net import EmbeddingNet, NetConfig

SMALL = NetConfig(in_dim=12, hidden=10, out_dim=6)


def test_default_shapes():
    net = EmbeddingNet()
    E, _ = net.forward(np.random.default_rng(0).standard_normal((4, 1024)))
    assert E.shape == (4, 100)
    assert net.params["fc1.weight"].shape == (1024, 256)
    assert net.params["fc3.weight"].shape == (256, 100)


def test_eval_mode_is_deterministic():
    net = EmbeddingNet(SMALL, seed=1)
    net.forward(np.random.default_rng(0).standard_normal((8, 12)))
    net.eval()
    x = np.random.default_rng(1).standard_normal((1, 12))
    E, _ = net.forward(np.vstack([x, x]))
    assert np.array_equal(E[0], E[1])


@given(st.integers(0, 10_000), st.integers(2, 20))
def test_rows_are_unit_norm(seed, n):
    net = EmbeddingNet(SMALL, seed=seed)
    E, _ = net.forward(np.random.default_rng(seed).standard_normal((n, 12)) * 10)
    assert np.allclose(np.linalg.norm(E, axis=1), 1.0, atol=1e-6)


def test_batch_of_one_in_train_mode_fails():
    net = EmbeddingNet(SMALL)
    with pytest.raises(ValueError):
        net.forward(np.zeros((1, 12)))
    net.eval()
    assert net.forward(np.zeros((1, 12)))[0].shape == (1, 6)


def test_nonfinite_input_fails():
    with pytest.raises(ValueError):
        EmbeddingNet(SMALL).forward(np.full((2, 12), np.inf))


def test_batchnorm_running_stats_update():
    net = EmbeddingNet(SMALL)
    x = np.random.default_rng(0).standard_normal((5, 12))
    h = x @ net.params["fc1.weight"] + net.params["fc1.bias"]
    h = np.where(h > 0, h, 0.01 * h)
    net.forward(x)
    assert np.allclose(net.buffers["bn1.running_mean"], 0.1 * h.mean(axis=0))
    assert np.allclose(net.buffers["bn1.running_var"], 0.9 + 0.1 * h.var(axis=0, ddof=1))


def test_unnormalized_output():
    net = EmbeddingNet(NetConfig(in_dim=12, hidden=10, out_dim=6, normalize=False))
    E, _ = net.forward(np.random.default_rng(0).standard_normal((4, 12)))
    assert not np.allclose(np.linalg.norm(E, axis=1), 1.0)


def test_linear_only_gradient_below_1e6():
    net = EmbeddingNet(NetConfig(in_dim=12, out_dim=6, linear_only=True, normalize=False))
    x = np.random.default_rng(0).standard_normal((16, 12))
    assert grad_check(net, x, None, "probe", n_coords=None) < 1e-6


@pytest.mark.parametrize("loss", ["mul", "tri", "con", "probe"])
def test_full_net_gradients_train_mode(loss):
    rng = np.random.default_rng(4)
    net = EmbeddingNet(SMALL, seed=2)
    x = rng.standard_normal((16, 12))
    labels = rng.integers(0, 3, 16)
    assert grad_check(net, x, labels, loss, n_coords=None) < 1e-4


@pytest.mark.parametrize("loss", ["mul", "con"])
def test_full_net_gradients_eval_mode_cosine(loss):
    rng = np.random.default_rng(5)
    net = EmbeddingNet(SMALL, seed=3)
    net.forward(rng.standard_normal((16, 12)))
    net.eval()
    x = rng.standard_normal((16, 12))
    assert grad_check(net, x, rng.integers(0, 3, 16), loss, DistanceKind.COSINE) < 1e-4


def test_zero_loss_batch_has_zero_gradients():
    net = EmbeddingNet(SMALL)
    x = np.random.default_rng(0).standard_normal((6, 12))
    E, cache = net.forward(x)
    grads = net.backward(np.zeros_like(E), cache)
    assert all(not g.any() for g in grads.values())
    # all-same-label batches mine no MultiSimilarity pairs
    assert grad_check(net, x, np.zeros(6, dtype=int), "mul") == 0.0


def test_relative_error_floor():
    assert relative_error([0.0], [1e-9]) == pytest.approx(1e-3)
    assert relative_error([2.0], [2.0]) == 0.0


def test_checkpoint_roundtrip(tmp_path):
    net = EmbeddingNet(SMALL, seed=5)
    net.forward(np.random.default_rng(0).standard_normal((4, 12)))
    net.set_input_stats(np.random.default_rng(1).standard_normal((9, 12)))
    path = tmp_path / "m.ckpt"
    save_checkpoint(path, net, "loss = mul\n")
    back, cfg = load_checkpoint(path)
    assert cfg["loss"] == "mul" and cfg["net.out_dim"] == "6"
    assert not back.training
    for k, v in net.state().items():
        assert np.array_equal(back.state()[k], v)
    x = np.random.default_rng(2).standard_normal((3, 12))
    assert np.array_equal(back.embed(x), net.embed(x))
    assert path.read_bytes().startswith(MAGIC)


def test_checkpoint_layout():
    buf = dump_tensors({"b": np.array([1.0, 2.0]), "a": np.eye(2)}, "k = v\n")
    assert buf[8:12] == (2).to_bytes(4, "little")
    # first tensor is "a": u16 length 1, name, rank 2, dims 2 and 2
    assert buf[12:14] == (1).to_bytes(2, "little") and buf[14:15] == b"a"
    assert buf[15] == 2 and buf[16:24] == (2).to_bytes(4, "little") * 2
    assert np.frombuffer(buf[24:56], "<f8").tolist() == [1, 0, 0, 1]
    tensors, text = load_tensors(buf)
    assert text == "k = v\n" and tensors["b"].tolist() == [1.0, 2.0]


@pytest.mark.parametrize("buf", [b"NOTMAGIC", MAGIC + b"\x01\x00", MAGIC + b"\x00" * 8 + b"x"])
def test_checkpoint_rejects_bad_bytes(buf):
    with pytest.raises(CheckpointError):
        load_tensors(buf)


def test_checkpoint_missing_tensor(tmp_path):
    net = EmbeddingNet(SMALL)
    state = net.state()
    del state["fc2.weight"]
    p = tmp_path / "bad.ckpt"
    p.write_bytes(dump_tensors(state, "net.in_dim = 12\nnet.hidden = 10\nnet.out_dim = 6\n"
                               "net.normalize = True\nnet.linear_only = False\n"))
    with pytest.raises(CheckpointError):
        load_checkpoint(p)
