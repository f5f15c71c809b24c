import numpy as np
import pytest
from hypothesis import given, strategies as st

from msaml.metriclearn.optim import Adam, PlateauSchedule, adam_step


def test_zero_gradient_leaves_params():
    p = {"w": np.array([1.0, -2.0])}
    adam_step(p, {"w": np.zeros(2)}, lr=0.1)
    assert p["w"].tolist() == [1.0, -2.0]


@given(st.floats(1e-3, 1e3), st.sampled_from([-1.0, 1.0]), st.floats(1e-5, 1e-1))
def test_first_step_is_lr_times_sign(mag, sign, lr):
    p = {"w": np.array([0.5])}
    adam_step(p, {"w": np.array([sign * mag])}, lr=lr)
    # m_hat = g, v_hat = g^2 after bias correction, so the step is lr * g / (|g| + eps)
    expected = 0.5 - lr * sign * mag / (mag + 1e-8)
    assert p["w"][0] == pytest.approx(expected, rel=1e-12, abs=1e-15)


def test_equal_magnitudes_move_equally():
    p = {"a": np.array([0.0]), "b": np.array([0.0])}
    opt = Adam(p, lr=0.01)
    for _ in range(3):
        opt.step(p, {"a": np.array([2.0]), "b": np.array([-2.0])})
    assert abs(p["a"][0]) == pytest.approx(abs(p["b"][0]))


def test_nonfinite_gradient_rejected():
    p = {"w": np.zeros(1)}
    with pytest.raises(FloatingPointError):
        adam_step(p, {"w": np.array([np.nan])})


def test_adam_matches_textbook_recursion():
    rng = np.random.default_rng(0)
    grads = rng.standard_normal((5, 3))
    p = {"w": np.zeros(3)}
    opt = Adam(p, lr=0.01)
    w, m, v = np.zeros(3), np.zeros(3), np.zeros(3)
    for t, g in enumerate(grads, start=1):
        opt.step(p, {"w": g})
        m = 0.9 * m + 0.1 * g
        v = 0.999 * v + 0.001 * g * g
        w = w - 0.01 * (m / (1 - 0.9 ** t)) / (np.sqrt(v / (1 - 0.999 ** t)) + 1e-8)
    assert np.allclose(p["w"], w, rtol=0, atol=1e-15)


def test_plateau_reduces_after_two_bad_epochs():
    s = PlateauSchedule(lr=1e-3)
    assert s.update(0.5)
    assert not s.update(0.4) and s.lr == 1e-3
    assert not s.update(0.5) and s.lr == pytest.approx(8e-4)
    assert s.update(0.6) and s.lr == pytest.approx(8e-4)


def test_plateau_floor_and_exhaustion():
    s = PlateauSchedule(lr=1.2e-5, floor=1e-5)
    s.update(1.0)
    for _ in range(2):
        s.update(0.0)
    assert s.lr == 1e-5 and s.floor_hits == 1 and not s.exhausted
    for _ in range(2):
        s.update(0.0)
    assert s.exhausted
    with pytest.raises(ValueError):
        PlateauSchedule(factor=1.0)
