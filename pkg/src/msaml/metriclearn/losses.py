"""Pairwise similarity, MultiSimilarity mining, and the three pair losses.

Every loss returns ``(value, grad)`` where ``grad`` is taken with respect
to the matrix the loss consumes (similarities for MultiSimilarity,
distances for triplet and contrastive). :func:`similarity_backward` and
:func:`distance_backward` carry those gradients to the embeddings.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class DistanceKind(str, enum.Enum):
    EUCLIDEAN = "eu"
    COSINE = "co"


@dataclass(frozen=True)
class MsParams:
    alpha: float = 2.0
    beta: float = 50.0
    lambda_base: float = 0.5
    epsilon: float = 0.1

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0 or self.epsilon < 0:
            raise ValueError("invalid MultiSimilarity parameters")


# -- similarities and distances -------------------------------------------------

def pairwise_similarity(E: np.ndarray, kind: DistanceKind = DistanceKind.EUCLIDEAN) -> np.ndarray:
    """Euclidean: ``1 - d^2 / 2``. Cosine: normalized dot product."""
    E = np.asarray(E, dtype=np.float64)
    kind = DistanceKind(kind)
    if kind is DistanceKind.EUCLIDEAN:
        sq = np.sum(E * E, axis=1)
        d2 = np.maximum(sq[:, None] + sq[None, :] - 2 * E @ E.T, 0.0)
        np.fill_diagonal(d2, 0.0)
        return 1.0 - d2 / 2.0
    norms = np.linalg.norm(E, axis=1)
    if np.any(norms == 0):
        raise ValueError("zero-norm embedding row under cosine similarity")
    U = E / norms[:, None]
    return U @ U.T


def similarity_backward(E: np.ndarray, grad_S: np.ndarray,
                        kind: DistanceKind = DistanceKind.EUCLIDEAN) -> np.ndarray:
    """dL/dE from dL/dS for :func:`pairwise_similarity`."""
    E = np.asarray(E, dtype=np.float64)
    M = np.asarray(grad_S)
    kind = DistanceKind(kind)
    if kind is DistanceKind.EUCLIDEAN:
        # S_ij = 1 - (|e_i|^2 + |e_j|^2)/2 + e_i.e_j
        Msym = M + M.T
        return Msym @ E - Msym.sum(axis=1)[:, None] * E
    norms = np.linalg.norm(E, axis=1)
    U = E / norms[:, None]
    Msym = M + M.T
    gU = Msym @ U
    return (gU - U * np.sum(U * gU, axis=1, keepdims=True)) / norms[:, None]


def pairwise_distance(E: np.ndarray, kind: DistanceKind = DistanceKind.EUCLIDEAN) -> np.ndarray:
    """Euclidean distance, or ``1 - cosine`` for the cosine option."""
    S = pairwise_similarity(E, kind)
    if DistanceKind(kind) is DistanceKind.EUCLIDEAN:
        return np.sqrt(2.0 * (1.0 - S))
    return 1.0 - S


def distance_backward(E: np.ndarray, D: np.ndarray, grad_D: np.ndarray,
                      kind: DistanceKind = DistanceKind.EUCLIDEAN) -> np.ndarray:
    if DistanceKind(kind) is DistanceKind.EUCLIDEAN:
        # d = sqrt(2 (1 - S)); zero distances get a zero subgradient
        with np.errstate(divide="ignore", invalid="ignore"):
            dd_dS = np.where(D > 0, -1.0 / D, 0.0)
        grad_S = grad_D * dd_dS
    else:
        grad_S = -grad_D
    return similarity_backward(E, grad_S, kind)


# -- mining ---------------------------------------------------------------------

def _masks(labels):
    labels = np.asarray(labels)
    same = labels[:, None] == labels[None, :]
    eye = np.eye(len(labels), dtype=bool)
    return same & ~eye, ~same


def ms_mine(S: np.ndarray, labels, p: MsParams = MsParams()):
    """Select hard pairs per anchor.

    A negative is kept if it is more similar than the anchor's least similar
    positive minus epsilon; a positive is kept if it is less similar than the
    anchor's most similar negative plus epsilon. Returns two boolean
    ``(N, N)`` masks ``(pos, neg)`` indexed ``[anchor, other]``.
    """
    S = np.asarray(S)
    pos_all, neg_all = _masks(labels)
    has_both = pos_all.any(axis=1) & neg_all.any(axis=1)
    min_pos = np.where(pos_all, S, np.inf).min(axis=1)
    max_neg = np.where(neg_all, S, -np.inf).max(axis=1)
    neg = neg_all & (S > (min_pos - p.epsilon)[:, None])
    pos = pos_all & (S < (max_neg + p.epsilon)[:, None])
    neg &= has_both[:, None]
    pos &= has_both[:, None]
    return pos, neg


def all_pairs(labels):
    """Every positive and negative pair (no mining)."""
    return _masks(labels)


# -- losses ---------------------------------------------------------------------

def _log1p_sum_exp(x: np.ndarray, mask: np.ndarray):
    """Row-wise ``log(1 + sum_{mask} exp(x))`` and its softmax weights."""
    z = np.where(mask, x, -np.inf)
    m = np.maximum(z.max(axis=1), 0.0)
    ez = np.exp(z - m[:, None])
    denom = np.exp(-m) + ez.sum(axis=1)
    return m + np.log(denom), ez / denom[:, None]


def loss_ms(S: np.ndarray, labels, pairs, p: MsParams = MsParams()):
    """MultiSimilarity loss averaged over anchors that own at least one pair."""
    S = np.asarray(S, dtype=np.float64)
    pos, neg = pairs
    active = pos.any(axis=1) | neg.any(axis=1)
    m = int(active.sum())
    if m == 0:
        return 0.0, np.zeros_like(S)
    lp, wp = _log1p_sum_exp(-p.alpha * (S - p.lambda_base), pos)
    ln, wn = _log1p_sum_exp(p.beta * (S - p.lambda_base), neg)
    loss = (lp / p.alpha + ln / p.beta)[active].sum() / m
    grad = (-wp + wn) / m
    grad[~active] = 0.0
    return float(loss), grad


def triplet_mine(D: np.ndarray, labels, margin: float = 0.05):
    """All (anchor, positive, negative) triplets with a positive hinge."""
    pos_m, neg_m = _masks(labels)
    a, pp, nn = np.nonzero(pos_m[:, :, None] & neg_m[:, None, :])
    viol = D[a, pp] - D[a, nn] + margin > 0
    return a[viol], pp[viol], nn[viol]


def loss_triplet(D: np.ndarray, labels, margin: float = 0.05, triplets=None):
    """Mean hinge ``d_ap - d_an + margin`` over mined triplets."""
    D = np.asarray(D, dtype=np.float64)
    if triplets is None:
        triplets = triplet_mine(D, labels, margin)
    a, pp, nn = triplets
    grad = np.zeros_like(D)
    if len(a) == 0:
        return 0.0, grad
    terms = np.maximum(D[a, pp] - D[a, nn] + margin, 0.0)
    active = terms > 0
    k = len(a)
    np.add.at(grad, (a[active], pp[active]), 1.0 / k)
    np.add.at(grad, (a[active], nn[active]), -1.0 / k)
    return float(terms.sum() / k), grad


def loss_contrastive(D: np.ndarray, labels, pos_margin: float = 0.0, neg_margin: float = 1.0):
    """Mean unsquared hinge over all unordered pairs."""
    D = np.asarray(D, dtype=np.float64)
    n = D.shape[0]
    pos_m, neg_m = _masks(labels)
    iu = np.triu(np.ones((n, n), dtype=bool), 1)
    n_pairs = int(iu.sum())
    grad = np.zeros_like(D)
    if n_pairs == 0:
        return 0.0, grad
    pos_t = np.where(pos_m & iu, np.maximum(D - pos_margin, 0.0), 0.0)
    neg_t = np.where(neg_m & iu, np.maximum(neg_margin - D, 0.0), 0.0)
    grad[(pos_m & iu) & (D > pos_margin)] = 1.0 / n_pairs
    grad[(neg_m & iu) & (D < neg_margin)] = -1.0 / n_pairs
    return float((pos_t.sum() + neg_t.sum()) / n_pairs), grad


# -- end-to-end batch loss -------------------------------------------------------

LOSS_KINDS = ("mul", "tri", "con")


def batch_loss(E: np.ndarray, labels, loss: str = "mul",
               distance: DistanceKind = DistanceKind.EUCLIDEAN,
               ms: MsParams = MsParams(), mined=None):
    """Mine, compute the loss and return ``(value, dL/dE, mined)``.

    ``mined`` may be passed back in to hold the selection fixed (used by
    finite-difference checks).
    """
    if loss == "mul":
        S = pairwise_similarity(E, distance)
        if mined is None:
            mined = ms_mine(S, labels, ms)
        value, gS = loss_ms(S, labels, mined, ms)
        return value, similarity_backward(E, gS, distance), mined
    D = pairwise_distance(E, distance)
    if loss == "tri":
        if mined is None:
            mined = triplet_mine(D, labels)
        value, gD = loss_triplet(D, labels, triplets=mined)
    elif loss == "con":
        value, gD = loss_contrastive(D, labels)
    else:
        raise ValueError(f"unknown loss {loss!r}")
    return value, distance_backward(E, D, gD, distance), mined
