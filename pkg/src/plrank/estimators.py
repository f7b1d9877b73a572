"""Statistical core: rank-broken pairwise estimates, renewal-cycle scores,
their concentration bounds, and the round budgets the learners schedule with.

Rank breaking turns an observed top-m outcome into pairwise win events:
each ranked item beats every item of the played subset not ranked above it.
Renewal scoring counts, between successive wins of a distinguished pivot,
how often each other item is chosen; per cycle those counts are Geometric
with mean w_i / w_pivot, which makes `wins / target` an estimate of the
relative weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import Items, TopMRanking

# rows folded per matmul pass when batch-updating counts
_CHUNK = 65536


class NoComparisons(Exception):
    """A pairwise estimate was requested for a pair never compared."""


@dataclass(frozen=True)
class Schedule:
    """Per-group play schedule: shrunk tolerance/confidence and round count."""

    eps_prime: float
    delta_prime: float
    t: int
    m: int

    def __post_init__(self):
        if not 0.0 < self.eps_prime < 1.0:
            raise ValueError("eps_prime must lie in (0, 1)")
        if not 0.0 < self.delta_prime < 1.0:
            raise ValueError("delta_prime must lie in (0, 1)")
        if self.t < 1:
            raise ValueError("round budget must be >= 1")


class PairwiseCounts:
    """Rank-broken win counts w[i][j] = #(i beat j) over one fixed group."""

    def __init__(self, group: Sequence[int]):
        g = tuple(int(i) for i in group)
        if len(set(g)) != len(g) or len(g) < 2:
            raise ValueError("group must hold at least 2 distinct items")
        self.group: Items = g
        self._local = {item: idx for idx, item in enumerate(g)}
        self.wins = np.zeros((len(g), len(g)), dtype=np.int64)

    def rank_break(self, fb: TopMRanking) -> None:
        """Fold one top-m outcome into the win counts."""
        if set(fb.subset) != set(self.group):
            raise ValueError("feedback subset does not match the counted group")
        alive = np.ones(len(self.group), dtype=bool)
        for item in fb.ordered:
            li = self._local[item]
            alive[li] = False
            self.wins[li, alive] += 1

    def rank_break_batch(self, rows: np.ndarray) -> None:
        """Fold a (c, m) array of top-m outcomes into the win counts."""
        rows = np.asarray(rows, dtype=np.int64)
        if rows.size == 0:
            return
        if rows.ndim != 2:
            raise ValueError("expected a (count, m) feedback array")
        lookup = np.full(int(rows.max()) + 1, -1, dtype=np.int64)
        for item, idx in self._local.items():
            if item < lookup.size:
                lookup[item] = idx
        locs = lookup[rows]
        if (locs < 0).any():
            raise ValueError("feedback contains items outside the counted group")
        g = len(self.group)
        c, m = locs.shape
        for start in range(0, c, _CHUNK):
            chunk = locs[start : start + _CHUNK]
            rows_idx = np.arange(len(chunk))
            alive = np.ones((len(chunk), g), dtype=np.float64)
            onehot = np.zeros((len(chunk), g), dtype=np.float64)
            for j in range(m):
                lj = chunk[:, j]
                alive[rows_idx, lj] = 0.0
                if j > 0:
                    onehot[rows_idx, chunk[:, j - 1]] = 0.0
                onehot[rows_idx, lj] = 1.0
                self.wins += (onehot.T @ alive).astype(np.int64)

    def wins_of(self, i: int, j: int) -> int:
        return int(self.wins[self._local[i], self._local[j]])

    def comparisons(self, i: int, j: int) -> int:
        return self.wins_of(i, j) + self.wins_of(j, i)

    def estimate(self, i: int, j: int) -> float:
        """Empirical win probability of i over j; signals when undefined."""
        nij = self.comparisons(i, j)
        if nij == 0:
            raise NoComparisons(f"items {i} and {j} were never compared")
        return self.wins_of(i, j) / nij

    def total(self) -> int:
        return int(self.wins.sum())


class RenewalScoreState:
    """Appearance counts between successive pivot selections in one group."""

    def __init__(self, group: Sequence[int], pivot: int, target_t: int):
        g = tuple(int(i) for i in group)
        if len(set(g)) != len(g) or len(g) < 2:
            raise ValueError("group must hold at least 2 distinct items")
        if pivot not in g:
            raise ValueError("pivot must belong to the group")
        if target_t < 1:
            raise ValueError("target pivot-win count must be >= 1")
        self.group: Items = g
        self.pivot = int(pivot)
        self.target_t = int(target_t)
        self._local = {item: idx for idx, item in enumerate(g)}
        self.appearances = np.zeros(len(g), dtype=np.int64)
        self.pivot_wins = 0

    @property
    def complete(self) -> bool:
        return self.pivot_wins >= self.target_t

    def record(self, fb: TopMRanking) -> bool:
        """Fold one feedback row; returns the completion flag."""
        if self.complete:
            raise ValueError("renewal state already complete")
        if set(fb.subset) != set(self.group):
            raise ValueError("feedback subset does not match the group")
        for item in fb.ordered:
            if item == self.pivot:
                self.pivot_wins += 1
            else:
                self.appearances[self._local[item]] += 1
        return self.complete

    def record_batch(self, rows: np.ndarray) -> int:
        """Fold feedback rows up to (and including) the completing one.

        Returns how many rows were consumed; trailing rows past completion
        are ignored.
        """
        if self.complete:
            raise ValueError("renewal state already complete")
        rows = np.asarray(rows, dtype=np.int64)
        if rows.size == 0:
            return 0
        hits = (rows == self.pivot).any(axis=1)
        cum = np.cumsum(hits)
        pos = int(np.searchsorted(cum, self.target_t - self.pivot_wins))
        used = pos + 1 if pos < len(rows) else len(rows)
        sub = rows[:used]
        lookup = np.full(int(sub.max()) + 1, -1, dtype=np.int64)
        for item, idx in self._local.items():
            if item < lookup.size:
                lookup[item] = idx
        locs = lookup[sub]
        if (locs < 0).any():
            raise ValueError("feedback contains items outside the group")
        counts = np.bincount(locs.ravel(), minlength=len(self.group))
        self.pivot_wins += int(counts[self._local[self.pivot]])
        counts[self._local[self.pivot]] = 0
        self.appearances += counts
        return used

    def scores(self) -> dict[int, float]:
        """Relative-score estimates wins/target; requires completion."""
        if not self.complete:
            raise ValueError("scores requested before the pivot reached its target")
        return self.partial_scores()

    def partial_scores(self) -> dict[int, float]:
        """Current wins/target for every non-pivot item (anytime / cap-hit use)."""
        return {
            item: float(self.appearances[idx]) / self.target_t
            for item, idx in self._local.items()
            if item != self.pivot
        }


def pairwise_deviation_bound(eta: float, v: int) -> float:
    """One-sided tail bound exp(-2 v eta^2) for rank-broken pair estimates."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError("eta must lie in [0, 1]")
    if v < 1:
        raise ValueError("v must be >= 1")
    return math.exp(-2.0 * v * eta * eta)


def geometric_deviation_bound(eta: float, d: int, ratio: float) -> float:
    """Two-sided tail bound for the mean of d Geometric cycle counts."""
    if eta < 0.0:
        raise ValueError("eta must be nonnegative")
    if d < 1:
        raise ValueError("d must be >= 1")
    if ratio <= 0.0:
        raise ValueError("ratio must be positive")
    r1 = 1.0 + ratio
    return 2.0 * math.exp(-2.0 * d * eta * eta / (r1 * r1 * (eta + r1)))


def _ceil_scaled(raw: float, scale: float) -> int:
    if scale <= 0.0:
        raise ValueError("budget scale must be positive")
    return max(1, math.ceil(scale * raw))


def round_budget(
    k: int, m: int, eps_prime: float, delta_prime: float, scale: float = 1.0
) -> int:
    """Fixed per-group round count: ceil(2k/(m eps'^2) ln(1/delta')).

    Computed as the winner-feedback budget divided (ceiling) by m, so the
    m-fold reduction holds as an exact integer identity.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    if not 1 <= m <= k:
        raise ValueError("need 1 <= m <= k")
    if not 0.0 < eps_prime < 1.0:
        raise ValueError("eps_prime must lie in (0, 1)")
    if not 0.0 < delta_prime < 1.0:
        raise ValueError("delta_prime must lie in (0, 1)")
    raw = 2.0 * k / (eps_prime * eps_prime) * math.log(1.0 / delta_prime)
    t_wi = _ceil_scaled(raw, scale)
    return -(-t_wi // m)


def pivot_round_budget(
    k: int, n: int, eps: float, delta: float, scale: float = 1.0
) -> int:
    """Per-arena round count of the pivot search: ceil(2k/eps^2 ln(2n/delta))."""
    if k < 2 or n < k:
        raise ValueError("need 2 <= k <= n")
    if not 0.0 < eps <= 1.0:
        raise ValueError("eps must lie in (0, 1]")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    raw = 2.0 * k / (eps * eps) * math.log(2.0 * n / delta)
    return _ceil_scaled(raw, scale)


def score_round_budget(eps_prime: float, delta_prime: float, scale: float = 1.0) -> int:
    """Pivot-win target of renewal scoring: ceil(1/eps'^2 ln(1/delta'))."""
    if not 0.0 < eps_prime < 1.0:
        raise ValueError("eps_prime must lie in (0, 1)")
    if not 0.0 < delta_prime < 1.0:
        raise ValueError("delta_prime must lie in (0, 1)")
    raw = math.log(1.0 / delta_prime) / (eps_prime * eps_prime)
    return _ceil_scaled(raw, scale)


def score_group_cap(t: int, k: int) -> int:
    """Runaway guard for one renewal group: ceil(5 t k / 2) issued rounds."""
    if t < 1 or k < 2:
        raise ValueError("need t >= 1 and k >= 2")
    return -(-5 * t * k // 2)
