"""Plackett-Luce choice model: exact probabilities and seeded samplers.

Items carry positive utility weights, max-normalized to 1. The winner of a
played subset S is item i with probability w_i / sum_{j in S} w_j, and an
ordered top-m outcome is produced by drawing m successive winners without
replacement. Everything stochastic takes an explicit numpy Generator; there
is no ambient global randomness anywhere in the package.

Brute-force enumeration of the top-m outcome distribution is provided for
small subsets so samplers can be validated against exact values.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

Items = tuple[int, ...]

# |s|!/(|s|-m)! outcomes; above this enumeration is refused
ENUMERATION_LIMIT = 7


class PLInstance:
    """Ground-truth weight vector. Immutable; shared freely across threads."""

    __slots__ = ("weights", "n")

    def __init__(self, weights: Iterable[float], *, normalize: bool = False):
        w = np.array(list(weights), dtype=np.float64)
        if w.ndim != 1 or w.size < 2:
            raise ValueError("need a flat vector of at least 2 weights")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        if np.any(w <= 0.0):
            raise ValueError("weights must be strictly positive")
        top = float(w.max())
        if normalize:
            w = w / top
        elif top != 1.0:
            raise ValueError(
                "maximum weight must be exactly 1 "
                "(pass normalize=True to rescale by the maximum)"
            )
        w.setflags(write=False)
        self.weights = w
        self.n = int(w.size)

    def __repr__(self) -> str:
        return f"PLInstance(n={self.n}, weights={self.weights.tolist()})"

    def __eq__(self, other) -> bool:
        return isinstance(other, PLInstance) and np.array_equal(
            self.weights, other.weights
        )

    def __hash__(self):
        return hash(self.weights.tobytes())


def validate_subset(n: int, items: Sequence[int]) -> Items:
    """Check a played subset: non-empty, distinct, indices in [0, n)."""
    s = tuple(int(i) for i in items)
    if not s:
        raise ValueError("subset is empty")
    for i in s:
        if not 0 <= i < n:
            raise ValueError(f"item {i} out of range for n={n}")
    if len(set(s)) != len(s):
        raise ValueError(f"duplicate items in subset {s}")
    return s


@dataclass(frozen=True)
class TopMRanking:
    """Ordered prefix of a subset, most-preferred first."""

    ordered: Items
    subset: Items

    def __post_init__(self):
        object.__setattr__(self, "ordered", tuple(int(i) for i in self.ordered))
        object.__setattr__(self, "subset", tuple(int(i) for i in self.subset))
        if not 1 <= len(self.ordered) <= len(self.subset):
            raise ValueError("need 1 <= m <= |subset| ranked items")
        if len(set(self.ordered)) != len(self.ordered):
            raise ValueError("ranked items must be distinct")
        if not set(self.ordered) <= set(self.subset):
            raise ValueError("ranked items must belong to the subset")

    @property
    def m(self) -> int:
        return len(self.ordered)

    @property
    def winner(self) -> int:
        return self.ordered[0]


class Ranking:
    """Permutation of all n items; position 1 is best."""

    __slots__ = ("item_at", "_pos")

    def __init__(self, item_at: Sequence[int]):
        order = tuple(int(i) for i in item_at)
        if sorted(order) != list(range(len(order))):
            raise ValueError("ranking must be a permutation of 0..n-1")
        self.item_at = order
        self._pos = {item: r + 1 for r, item in enumerate(order)}

    @property
    def n(self) -> int:
        return len(self.item_at)

    def position(self, item: int) -> int:
        """1-based rank of an item (1 = best)."""
        return self._pos[item]

    def positions(self) -> np.ndarray:
        """Array p with p[item] = rank of item."""
        p = np.empty(self.n, dtype=np.int64)
        for item, r in self._pos.items():
            p[item] = r
        return p

    def __eq__(self, other) -> bool:
        return isinstance(other, Ranking) and self.item_at == other.item_at

    def __hash__(self):
        return hash(self.item_at)

    def __iter__(self):
        return iter(self.item_at)

    def __len__(self) -> int:
        return len(self.item_at)

    def __repr__(self) -> str:
        return f"Ranking({list(self.item_at)})"


def winner_distribution(inst: PLInstance, subset: Sequence[int]) -> np.ndarray:
    """Winner probabilities over the subset, in subset order."""
    s = validate_subset(inst.n, subset)
    w = inst.weights[list(s)]
    return w / w.sum()


def sample_top_m_batch(
    inst: PLInstance,
    subset: Sequence[int],
    m: int,
    size: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """`size` independent top-m draws as a (size, m) array of item ids.

    Row i consumes exactly the same m uniforms as the i-th of `size`
    sequential single draws would, so batched and one-at-a-time sampling
    are interchangeable under a shared stream.
    """
    s = validate_subset(inst.n, subset)
    k = len(s)
    if not 1 <= m <= k:
        raise ValueError(f"need 1 <= m <= |subset|, got m={m}, |subset|={k}")
    if size < 0:
        raise ValueError("size must be nonnegative")
    u = rng.random((size, m))
    items = np.asarray(s, dtype=np.int64)
    w = np.broadcast_to(inst.weights[items], (size, k)).copy()
    out = np.empty((size, m), dtype=np.int64)
    rows = np.arange(size)
    for j in range(m):
        c = np.cumsum(w, axis=1)
        thr = u[:, j] * c[:, -1]
        # smallest index with cumulative weight strictly above the threshold;
        # zeroed (already drawn) entries are never selected
        local = np.minimum((c <= thr[:, None]).sum(axis=1), k - 1)
        out[:, j] = items[local]
        w[rows, local] = 0.0
    return out


def sample_top_m(
    inst: PLInstance, subset: Sequence[int], m: int, rng: np.random.Generator
) -> TopMRanking:
    """One top-m draw: m successive winners without replacement."""
    s = validate_subset(inst.n, subset)
    row = sample_top_m_batch(inst, s, m, 1, rng)[0]
    return TopMRanking(tuple(row), s)


def sample_winner(
    inst: PLInstance, subset: Sequence[int], rng: np.random.Generator
) -> int:
    """One winner draw; consumes a single uniform."""
    return int(sample_top_m_batch(inst, subset, 1, 1, rng)[0, 0])


def ranking_probability(inst: PLInstance, r: TopMRanking) -> float:
    """Exact probability of an ordered top-m outcome over its subset."""
    validate_subset(inst.n, r.subset)
    remaining = list(r.subset)
    p = 1.0
    for item in r.ordered:
        denom = float(sum(inst.weights[i] for i in remaining))
        p *= float(inst.weights[item]) / denom
        remaining.remove(item)
    return p


def enumerate_top_m_distribution(
    inst: PLInstance, subset: Sequence[int], m: int
) -> dict[Items, float]:
    """Exact distribution over all ordered top-m outcomes (small subsets only)."""
    s = validate_subset(inst.n, subset)
    if len(s) > ENUMERATION_LIMIT:
        raise ValueError(
            f"subset too large to enumerate (|s|={len(s)} > {ENUMERATION_LIMIT})"
        )
    if not 1 <= m <= len(s):
        raise ValueError(f"need 1 <= m <= |subset|, got m={m}")
    return {
        prefix: ranking_probability(inst, TopMRanking(prefix, s))
        for prefix in itertools.permutations(s, m)
    }


def check_iia(
    inst: PLInstance,
    i1: int,
    i2: int,
    s1: Sequence[int],
    s2: Sequence[int],
) -> tuple[float, float]:
    """Win-probability ratio of i1 over i2 inside each of two subsets.

    For a Plackett-Luce instance the two ratios agree (independence of
    irrelevant alternatives): both equal w_{i1} / w_{i2}.
    """
    t1 = validate_subset(inst.n, s1)
    t2 = validate_subset(inst.n, s2)
    for i in (i1, i2):
        if i not in t1 or i not in t2:
            raise ValueError(f"item {i} must belong to both subsets")
    d1 = winner_distribution(inst, t1)
    d2 = winner_distribution(inst, t2)
    r1 = float(d1[t1.index(i1)]) / float(d1[t1.index(i2)])
    r2 = float(d2[t2.index(i1)]) / float(d2[t2.index(i2)])
    return r1, r2
