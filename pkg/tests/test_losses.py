import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from msaml.metriclearn.gradcheck import loss_grad_check
from oracles import mine_oracle
from msaml.metriclearn.losses import (DistanceKind, MsParams, all_pairs, batch_loss,
                                      loss_contrastive, loss_ms, loss_triplet, ms_mine,
                                      pairwise_distance, pairwise_similarity, triplet_mine)

EU, CO = DistanceKind.EUCLIDEAN, DistanceKind.COSINE


def unit_rows(rng, n, d=8):
    E = rng.standard_normal((n, d))
    return E / np.linalg.norm(E, axis=1, keepdims=True)


@pytest.mark.parametrize("kind", [EU, CO])
def test_similarity_identical_rows(kind):
    E = np.tile([[0.6, 0.8]], (3, 1))
    assert np.allclose(pairwise_similarity(E, kind), 1.0)


@pytest.mark.parametrize("kind", [EU, CO])
def test_similarity_orthogonal_and_antipodal(kind):
    S = pairwise_similarity(np.eye(3), kind)
    assert np.allclose(S, np.eye(3), atol=1e-15)
    S = pairwise_similarity(np.array([[1.0, 0], [-1.0, 0]]), kind)
    assert S[0, 1] == pytest.approx(-1.0)


def test_cosine_zero_row_rejected():
    with pytest.raises(ValueError):
        pairwise_similarity(np.array([[0.0, 0.0], [1.0, 0.0]]), CO)


@given(st.integers(2, 20), st.integers(0, 10_000))
def test_euclid_equals_cosine_on_unit_rows(n, seed):
    E = unit_rows(np.random.default_rng(seed), n)
    assert np.max(np.abs(pairwise_similarity(E, EU) - pairwise_similarity(E, CO))) < 1e-9


def test_similarity_matches_definition(rng):
    E = rng.standard_normal((6, 4))
    S = pairwise_similarity(E, EU)
    for i, j in itertools.product(range(6), repeat=2):
        assert S[i, j] == pytest.approx(1 - np.sum((E[i] - E[j]) ** 2) / 2, abs=1e-12)
    D = pairwise_distance(E, EU)
    assert D[1, 2] == pytest.approx(np.linalg.norm(E[1] - E[2]), abs=1e-12)
    assert np.allclose(S, S.T) and np.all(np.diag(S) >= S.max(axis=1) - 1e-12)


def test_mine_all_same_label_selects_nothing():
    S = pairwise_similarity(unit_rows(np.random.default_rng(0), 5))
    pos, neg = ms_mine(S, [1] * 5)
    assert not pos.any() and not neg.any()


def test_mine_worked_example():
    # anchor 0: one positive (1) at 0.9, one negative (2) at 0.2
    S = np.array([[1.0, 0.9, 0.2], [0.9, 1.0, 0.2], [0.2, 0.2, 1.0]])
    pos, neg = ms_mine(S, [0, 0, 1], MsParams(epsilon=0.1))
    assert not neg[0, 2]  # 0.2 <= 0.9 - 0.1
    assert not pos[0, 1]  # 0.9 >= 0.2 + 0.1


def as_set(mask):
    return set(zip(*map(lambda v: v.tolist(), np.nonzero(mask))))


@given(st.integers(0, 10_000))
def test_mine_matches_brute_force_16(seed):
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 4, 16)
    S = pairwise_similarity(unit_rows(rng, 16, 3))
    pos, neg = ms_mine(S, labels)
    bp, bn = mine_oracle(S, labels, 0.1)
    assert as_set(pos) == bp and as_set(neg) == bn


@given(st.integers(0, 10_000))
def test_mine_is_permutation_equivariant(seed):
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 3, 12)
    S = pairwise_similarity(unit_rows(rng, 12, 3))
    perm = rng.permutation(12)
    pos, neg = ms_mine(S, labels)
    pos2, neg2 = ms_mine(S[np.ix_(perm, perm)], labels[perm])
    assert np.array_equal(pos[np.ix_(perm, perm)], pos2)
    assert np.array_equal(neg[np.ix_(perm, perm)], neg2)


def test_ms_closed_form_two_identical():
    E = np.array([[1.0, 0.0], [1.0, 0.0]])
    labels = [0, 0]
    S = pairwise_similarity(E)
    value, _ = loss_ms(S, labels, all_pairs(labels))
    assert value == pytest.approx(0.5 * np.log1p(np.exp(-1.0)), abs=1e-12)
    assert value == pytest.approx(0.156631, abs=1e-6)


def test_ms_no_pairs_is_zero():
    S = np.eye(3)
    empty = np.zeros((3, 3), dtype=bool)
    value, g = loss_ms(S, [0, 1, 2], (empty, empty))
    assert value == 0.0 and not g.any()


def test_ms_matches_direct_formula(rng):
    p = MsParams()
    labels = rng.integers(0, 3, 10)
    S = pairwise_similarity(unit_rows(rng, 10, 4))
    pos, neg = ms_mine(S, labels, p)
    total, m = 0.0, 0
    for a in range(10):
        P, N = np.flatnonzero(pos[a]), np.flatnonzero(neg[a])
        if len(P) == 0 and len(N) == 0:
            continue
        m += 1
        total += np.log(1 + np.exp(-p.alpha * (S[a, P] - p.lambda_base)).sum()) / p.alpha
        total += np.log(1 + np.exp(p.beta * (S[a, N] - p.lambda_base)).sum()) / p.beta
    assert loss_ms(S, labels, (pos, neg), p)[0] == pytest.approx(total / m, rel=1e-12)


@given(st.integers(0, 10_000), st.floats(0.001, 0.2))
def test_ms_decreases_when_positive_similarity_rises(seed, delta):
    rng = np.random.default_rng(seed)
    labels = np.array([0, 0, 1, 1, 2, 2])
    S = pairwise_similarity(unit_rows(rng, 6, 3))
    pairs = all_pairs(labels)
    base = loss_ms(S, labels, pairs)[0]
    S2 = S.copy()
    S2[0, 1] += delta
    assert loss_ms(S2, labels, pairs)[0] < base


def test_triplet_terms():
    D = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 1.0], [1.0, 1.0, 0.0]])
    assert loss_triplet(D, [0, 0, 1])[0] == 0.0
    D = np.array([[0.0, 0.5, 0.5], [0.5, 0.0, 0.5], [0.5, 0.5, 0.0]])
    value, _ = loss_triplet(D, [0, 0, 1])
    assert value == pytest.approx(0.05)


def test_triplet_none_valid():
    value, g = loss_triplet(np.zeros((3, 3)), [0, 1, 2])
    assert value == 0.0 and not g.any()


def test_contrastive_terms():
    D = np.array([[0.0, 0.0, 1.5], [0.0, 0.0, 2.0], [1.5, 2.0, 0.0]])
    assert loss_contrastive(D, [0, 0, 1])[0] == 0.0
    D = np.array([[0.0, 0.4], [0.4, 0.0]])
    assert loss_contrastive(D, [0, 1])[0] == pytest.approx(0.6)


@pytest.mark.parametrize("loss", ["mul", "tri", "con"])
@pytest.mark.parametrize("kind", [EU, CO])
def test_loss_gradients_match_finite_differences(loss, kind):
    rng = np.random.default_rng(7)
    for _ in range(3):
        E = unit_rows(rng, 16, 6) * (1.0 if kind is EU else rng.uniform(0.5, 2, (16, 1)))
        labels = rng.integers(0, 4, 16)
        assert loss_grad_check(E, labels, loss, kind) < 1e-4


@pytest.mark.parametrize("loss", ["mul", "tri", "con"])
def test_losses_are_batch_order_invariant(loss, rng):
    E = unit_rows(rng, 12, 5)
    labels = rng.integers(0, 3, 12)
    perm = rng.permutation(12)
    a, gA, _ = batch_loss(E, labels, loss)
    b, gB, _ = batch_loss(E[perm], labels[perm], loss)
    assert a == pytest.approx(b, rel=1e-12, abs=1e-15)
    assert np.allclose(gA[perm], gB, atol=1e-12)


def test_triplet_mining_rule(rng):
    E = unit_rows(rng, 8, 3)
    labels = rng.integers(0, 2, 8)
    D = pairwise_distance(E)
    mined = set(zip(*[t.tolist() for t in triplet_mine(D, labels)]))
    brute = {(a, p, n) for a in range(8) for p in range(8) for n in range(8)
             if a != p and labels[a] == labels[p] and labels[a] != labels[n]
             and D[a, p] - D[a, n] + 0.05 > 0}
    assert mined == brute


def test_unknown_loss():
    with pytest.raises(ValueError):
        batch_loss(np.eye(3), [0, 1, 0], "nope")
    with pytest.raises(ValueError):
        MsParams(alpha=0)
