"""Learner suite: pivot search and two pivot-relative ranking strategies.

All learners share one structure. A pivot search first walks the item pool
with a running winner, playing one arena of k items at a time and replacing
the running winner only when the arena's empirical best beats it decisively.
The surviving pivot is then appended to every group of a partition of the
remaining items, each group is played until the pivot-relative key of every
member is pinned down, and the final ranking sorts all items by key with
the pivot first.

The two strategies differ in the key: one estimates the head-to-head win
probability against the pivot from (rank-broken) win counts, the other the
relative weight via renewal-cycle counts between pivot wins.

Every learner tolerates a hard query budget: on exhaustion it surrenders a
ranking built from completed groups' final keys, the in-progress group's
current empirical keys, and untouched items appended in index order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .estimators import (
    PairwiseCounts,
    RenewalScoreState,
    Schedule,
    pivot_round_budget,
    round_budget,
    score_group_cap,
    score_round_budget,
)
from .model import Items, Ranking
from .oracle import BudgetExhausted, FeedbackMode


@dataclass(frozen=True)
class PACParams:
    """Tolerance / confidence pair; both strictly inside (0, 1)."""

    eps: float
    delta: float

    def __post_init__(self):
        if not 0.0 < self.eps < 1.0:
            raise ValueError("eps must lie strictly inside (0, 1)")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie strictly inside (0, 1)")


@dataclass(frozen=True)
class PivotResult:
    """Outcome of a pivot search."""

    item: int
    anytime: bool
    queries: int


@dataclass(frozen=True)
class RankResult:
    """Outcome of a full ranking run."""

    ranking: Ranking
    pivot: int
    anytime: bool
    cap_hits: int
    queries: int
    schedule: Schedule | None


@dataclass(frozen=True)
class GroupPartition:
    """Groups of size k covering all items, the pivot appended to each.

    The final group may be filled up with `padding` items resampled from the
    earlier groups; `leftover` holds its original short tail.
    """

    groups: tuple[Items, ...]
    leftover: Items
    padding: Items
    pivot: int


def partition_into_groups(
    items, pivot: int, k: int, rng: np.random.Generator
) -> GroupPartition:
    """Split items (pivot excluded) into ceil(|items|/(k-1)) groups of k.

    The last short group, if any, is padded with items sampled without
    replacement from the already-covered pool; the pivot goes last in every
    group.
    """
    pool = tuple(int(i) for i in items)
    if k < 2:
        raise ValueError("k must be >= 2")
    if len(set(pool)) != len(pool):
        raise ValueError("items must be distinct")
    if pivot in pool:
        raise ValueError("pivot must not appear among the items")
    if not pool:
        raise ValueError("no items to partition")
    chunks = [pool[i : i + k - 1] for i in range(0, len(pool), k - 1)]
    leftover: Items = ()
    padding: Items = ()
    if len(chunks[-1]) < k - 1:
        leftover = chunks[-1]
        covered = [i for i in pool if i not in leftover]
        need = k - 1 - len(leftover)
        if len(covered) < need:
            # degenerate: not enough items for even one full group; play all
            chunks = [pool]
        else:
            picked = rng.choice(np.asarray(covered, dtype=np.int64), size=need, replace=False)
            padding = tuple(int(i) for i in picked)
            chunks[-1] = leftover + padding
    groups = tuple(chunk + (pivot,) for chunk in chunks)
    return GroupPartition(groups=groups, leftover=leftover, padding=padding, pivot=pivot)


def _top1_counts(rows: np.ndarray, n: int) -> np.ndarray:
    if len(rows) == 0:
        return np.zeros(n, dtype=np.int64)
    return np.bincount(rows[:, 0], minlength=n)


def find_the_pivot(
    oracle,
    params: PACParams,
    rng: np.random.Generator,
    *,
    scale: float = 1.0,
    use_full_feedback: bool = False,
) -> PivotResult:
    """Trace an approximately best item through successive k-item arenas.

    Each arena is played for a fixed round count; the arena's empirical
    winner replaces the running winner only when its empirical head-to-head
    score against it exceeds 1/2 + eps/2. Ties in win counts go to the
    lowest item index. Under top-m feedback only the top entry is consumed
    unless `use_full_feedback` turns on rank-broken pairwise scoring (an
    unanalyzed shortcut, off by default).

    On budget exhaustion the current running winner is returned with the
    anytime flag set; the interrupted arena's partial evidence is discarded.
    """
    n, k = oracle.n, oracle.k
    t = pivot_round_budget(k, n, params.eps, params.delta, scale)
    start = int(rng.integers(n))
    others = rng.choice(
        np.asarray([i for i in range(n) if i != start], dtype=np.int64),
        size=k - 1,
        replace=False,
    )
    running = start
    arena = sorted([start, *(int(i) for i in others)])
    pool = sorted(set(range(n)) - set(arena))
    anytime = False
    while True:
        try:
            rows = oracle.query_batch(arena, t)
        except BudgetExhausted:
            anytime = True
            break
        if use_full_feedback and oracle.feedback_width > 1:
            counts = PairwiseCounts(arena)
            counts.rank_break_batch(rows)
            wins = counts.wins.sum(axis=1)
            challenger = arena[int(np.argmax(wins))]
            if challenger != running:
                score = counts.estimate(challenger, running)
                if score > 0.5 + params.eps / 2.0:
                    running = challenger
        else:
            wins = _top1_counts(rows, n)
            challenger = arena[int(np.argmax(wins[arena]))]
            if challenger != running:
                pair = wins[challenger] + wins[running]
                if pair > 0 and wins[challenger] / pair > 0.5 + params.eps / 2.0:
                    running = challenger
        if not pool:
            break
        if len(pool) < k - 1:
            stay = np.asarray([i for i in arena if i != running], dtype=np.int64)
            fill = rng.choice(stay, size=k - 1 - len(pool), replace=False)
            arena = sorted({running, *pool, *(int(i) for i in fill)})
            pool = []
        else:
            fresh = rng.choice(np.asarray(pool, dtype=np.int64), size=k - 1, replace=False)
            arena = sorted({running, *(int(i) for i in fresh)})
            pool = sorted(set(pool) - set(arena))
    return PivotResult(item=running, anytime=anytime, queries=oracle.queries_used)


def assemble_ranking(pivot: int, keys: dict[int, float], n: int) -> Ranking:
    """Pivot first, everyone else by strictly descending key.

    Exact key ties break toward the lower item index. Keys must cover all
    items except the pivot.
    """
    expected = set(range(n)) - {pivot}
    if set(keys) != expected:
        missing = sorted(expected - set(keys))
        extra = sorted(set(keys) - expected)
        raise ValueError(f"keys must cover [n] minus the pivot (missing {missing}, extra {extra})")
    return _assemble_partial(pivot, keys, n)


def _assemble_partial(pivot: int, keys: dict[int, float], n: int) -> Ranking:
    """Anytime assembly: keyed items sorted, unkeyed appended by index."""
    keyed = sorted((i for i in keys if i != pivot), key=lambda i: (-keys[i], i))
    rest = sorted(set(range(n)) - {pivot} - set(keys))
    return Ranking([pivot, *keyed, *rest])


def _check_mode(oracle, mode: FeedbackMode) -> int:
    if mode != oracle.mode:
        raise ValueError(f"oracle serves {oracle.mode.label()}, learner expects {mode.label()}")
    if oracle.k < 2:
        raise ValueError("k must be >= 2")
    return mode.width(oracle.k)


def beat_the_pivot(
    oracle,
    params: PACParams,
    mode: FeedbackMode,
    rng: np.random.Generator,
    *,
    scale: float = 1.0,
) -> RankResult:
    """Rank by estimated win probability against a pivot item.

    The pivot comes from a search at (min(eps/2, 1/2), delta/2); each group
    is then played for a fixed schedule of rounds and every member's key is
    its empirical head-to-head score against the pivot. Winner feedback is
    tallied directly; wider feedback is folded through rank breaking. A
    padding item keeps the key from its home group.
    """
    n = oracle.n
    k = oracle.k
    width = _check_mode(oracle, mode)
    eps_b = min(params.eps / 2.0, 0.5)
    pivot_res = find_the_pivot(
        oracle, PACParams(eps_b, params.delta / 2.0), rng, scale=scale
    )
    b = pivot_res.item
    sched = Schedule(
        eps_prime=params.eps / 16.0,
        delta_prime=params.delta / (8.0 * n),
        t=round_budget(k, width, params.eps / 16.0, params.delta / (8.0 * n), scale),
        m=width,
    )
    if pivot_res.anytime:
        return RankResult(
            ranking=_assemble_partial(b, {}, n),
            pivot=b,
            anytime=True,
            cap_hits=0,
            queries=oracle.queries_used,
            schedule=sched,
        )
    part = partition_into_groups(
        [i for i in range(n) if i != b], b, k, rng
    )
    keys: dict[int, float] = {}
    anytime = False
    for group in part.groups:
        try:
            rows = oracle.query_batch(group, sched.t)
        except BudgetExhausted as exc:
            rows = exc.rows
            anytime = True
        if mode.kind == "wi":
            counts = _top1_counts(rows, n)
            for item in group[:-1]:
                if item in keys:
                    continue  # padding duplicate: home-group key stands
                pair = int(counts[item] + counts[b])
                if pair > 0:
                    keys[item] = counts[item] / pair
        else:
            pc = PairwiseCounts(group)
            pc.rank_break_batch(rows)
            for item in group[:-1]:
                if item in keys:
                    continue
                pair = pc.comparisons(item, b)
                if pair > 0:
                    keys[item] = pc.wins_of(item, b) / pair
        if anytime:
            break
    ranking = _assemble_partial(b, keys, n)
    return RankResult(
        ranking=ranking,
        pivot=b,
        anytime=anytime,
        cap_hits=0,
        queries=oracle.queries_used,
        schedule=sched,
    )


def score_and_rank(
    oracle,
    params: PACParams,
    mode: FeedbackMode,
    rng: np.random.Generator,
    *,
    scale: float = 1.0,
) -> RankResult:
    """Rank by relative-weight estimates from renewal cycles.

    The pivot comes from a search at (min(eps/2, 1/2), delta/4). Each group
    is played until the pivot has been chosen (appeared in the feedback) a
    scheduled number of times; each member's key is its appearance count
    divided by that target. A per-group cap of ceil(5 t k / 2) rounds stops
    runaway groups, which finish with their current counts and mark the run.
    """
    n = oracle.n
    k = oracle.k
    width = _check_mode(oracle, mode)
    eps_b = min(params.eps / 2.0, 0.5)
    pivot_res = find_the_pivot(
        oracle, PACParams(eps_b, params.delta / 4.0), rng, scale=scale
    )
    b = pivot_res.item
    sched = Schedule(
        eps_prime=params.eps / 24.0,
        delta_prime=params.delta / (8.0 * n),
        t=score_round_budget(params.eps / 24.0, params.delta / (8.0 * n), scale),
        m=width,
    )
    if pivot_res.anytime:
        return RankResult(
            ranking=_assemble_partial(b, {}, n),
            pivot=b,
            anytime=True,
            cap_hits=0,
            queries=oracle.queries_used,
            schedule=sched,
        )
    part = partition_into_groups([i for i in range(n) if i != b], b, k, rng)
    cap = score_group_cap(sched.t, k)
    keys: dict[int, float] = {}
    cap_hits = 0
    anytime = False
    for group in part.groups:
        state = RenewalScoreState(group, b, sched.t)
        try:
            rows, reached = oracle.query_until(group, b, sched.t, cap)
        except BudgetExhausted as exc:
            state.record_batch(exc.rows)
            anytime = True
            scores = state.partial_scores()
        else:
            used = state.record_batch(rows)
            assert used == len(rows)
            if reached:
                scores = state.scores()
            else:
                cap_hits += 1
                scores = state.partial_scores()
        for item, value in scores.items():
            if item not in keys:
                keys[item] = value
        if anytime:
            break
    ranking = _assemble_partial(b, keys, n)
    return RankResult(
        ranking=ranking,
        pivot=b,
        anytime=anytime,
        cap_hits=cap_hits,
        queries=oracle.queries_used,
        schedule=sched,
    )


def pivot_search_queries(n: int, k: int, eps: float, delta: float, scale: float = 1.0) -> int:
    """Closed-form query count of an uninterrupted pivot search."""
    arenas = 1 if n == k else 1 + -(-(n - k) // (k - 1))
    return arenas * pivot_round_budget(k, n, eps, delta, scale)


def beat_the_pivot_queries(
    n: int, k: int, m: int, eps: float, delta: float, scale: float = 1.0
) -> int:
    """Closed-form total query count of an uninterrupted pivot-preference run."""
    eps_b = min(eps / 2.0, 0.5)
    groups = -(-(n - 1) // (k - 1))
    return pivot_search_queries(n, k, eps_b, delta / 2.0, scale) + groups * round_budget(
        k, m, eps / 16.0, delta / (8.0 * n), scale
    )
