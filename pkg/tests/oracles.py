"""Slow, independent reference implementations used as test oracles."""

import math
from collections import Counter
from functools import lru_cache


def matching_exhaustive(ref, est, window):
    """Maximum one-to-one matching by exhaustive search (small inputs only)."""
    ref, est = list(ref), list(est)

    @lru_cache(maxsize=None)
    def best(i, used):
        if i == len(ref):
            return 0
        out = best(i + 1, used)
        for j, e in enumerate(est):
            if not used >> j & 1 and abs(ref[i] - e) <= window:
                out = max(out, 1 + best(i + 1, used | 1 << j))
        return out

    return best(0, 0)


def f_measure(p, r):
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)


def hit_rate_f_oracle(ref, est, window):
    m = matching_exhaustive(ref, est, window)
    return f_measure(m / len(est), m / len(ref))


def pairwise_f_oracle(ref, est):
    n = len(ref)
    a = e = both = 0
    for i in range(n):
        for j in range(i + 1, n):
            same_r = ref[i] == ref[j]
            same_e = est[i] == est[j]
            a += same_r
            e += same_e
            both += same_r and same_e
    p = both / e if e else 0.0
    r = both / a if a else 0.0
    return p, r, f_measure(p, r)


def _cond_entropy(pairs, given_first):
    """H(second | first) in bits from a list of (x, y) samples."""
    n = len(pairs)
    joint = Counter(pairs)
    marg = Counter(x for x, _ in pairs)
    h = 0.0
    for (x, _), c in joint.items():
        h -= (c / n) * math.log2(c / marg[x])
    return h


def entropy_oracle(ref, est):
    pairs = list(zip(ref, est))
    n_ref, n_est = len(set(ref)), len(set(est))
    s_o = 1.0 if n_est <= 1 else 1 - _cond_entropy(pairs, True) / math.log2(n_est)
    swapped = [(y, x) for x, y in pairs]
    s_u = 1.0 if n_ref <= 1 else 1 - _cond_entropy(swapped, True) / math.log2(n_ref)
    return s_o, s_u, f_measure(s_o, s_u)


def mine_oracle(S, labels, eps):
    n = len(labels)
    pos, neg = set(), set()
    for a in range(n):
        P = [k for k in range(n) if k != a and labels[k] == labels[a]]
        N = [k for k in range(n) if labels[k] != labels[a]]
        if not P or not N:
            continue
        lo = min(S[a][k] for k in P)
        hi = max(S[a][k] for k in N)
        neg |= {(a, k) for k in N if S[a][k] > lo - eps}
        pos |= {(a, k) for k in P if S[a][k] < hi + eps}
    return pos, neg
