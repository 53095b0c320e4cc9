"""Agreement scores between two partitions of the same vertex set."""
from __future__ import annotations

from itertools import permutations

import numpy as np
from scipy.special import xlogy

MAX_EXACT_K = 8


def confusion_table(a, b) -> np.ndarray:
    """Counts of vertices with label i in `a` and label j in `b`."""
    ga, gb = np.asarray(a.g), np.asarray(b.g)
    if ga.size != gb.size:
        raise ValueError("partitions cover different vertex counts")
    c = np.zeros((a.k, b.k), dtype=np.int64)
    np.add.at(c, (ga, gb), 1)
    return c


def nmi(a, b) -> float:
    """Normalized mutual information 2 I(A;B) / (H(A) + H(B)).

    Label-permutation invariant; 1 for identical partitions, 0 when one
    side is a single block and the other is not.
    """
    c = confusion_table(a, b).astype(np.float64)
    n = c.sum()
    if n == 0:
        raise ValueError("empty partitions")
    p = c / n
    pa = p.sum(axis=1)
    pb = p.sum(axis=0)
    ha = -float(xlogy(pa, pa).sum())
    hb = -float(xlogy(pb, pb).sum())
    if ha == 0.0 and hb == 0.0:
        return 1.0
    if ha == 0.0 or hb == 0.0:
        return 0.0
    outer = np.multiply.outer(pa, pb)
    info = float(np.sum(xlogy(p, p) - p * np.log(np.where(outer > 0, outer, 1.0))))
    return min(max(2.0 * info / (ha + hb), 0.0), 1.0)


def best_match_accuracy(a, b) -> float:
    """Largest fraction of agreeing vertices over block-label permutations.

    Exact search over permutations; raises for more than MAX_EXACT_K
    blocks (use nmi there instead).
    """
    k = max(a.k, b.k)
    if k > MAX_EXACT_K:
        raise ValueError(f"k = {k} too large for exact permutation search; use nmi")
    c = np.zeros((k, k), dtype=np.int64)
    c[: a.k, : b.k] = confusion_table(a, b)
    n = c.sum()
    if n == 0:
        raise ValueError("empty partitions")
    best = max(sum(c[perm[j], j] for j in range(k)) for perm in permutations(range(k)))
    return float(best / n)
