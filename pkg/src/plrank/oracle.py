"""Stochastic environment serving winner / top-m / full-ranking feedback.

The oracle owns the hidden instance and a seeded stream, enforces the
exact-subset-size protocol, and counts every issued query. Learners talk
to it only through `query*` and the public counters, never through the
instance itself.

Batched entry points (`query_batch`, `query_until`) are provided for the
Monte Carlo harness: a batch of c queries is stream-identical to c single
queries, and an optional hard budget truncates batches to a prefix, so a
budgeted run replays the exact prefix of the unbudgeted trajectory.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import model
from .model import PLInstance, TopMRanking

# rows sampled per internal block in query_until; fixed so that draw
# consumption never depends on budgets or stopping rules
_BLOCK = 4096


@dataclass(frozen=True)
class FeedbackMode:
    """Feedback served per query: winner only, top-m prefix, or full ranking."""

    kind: str  # "wi" | "tr" | "fr"
    m: int | None = None

    def __post_init__(self):
        if self.kind not in ("wi", "tr", "fr"):
            raise ValueError(f"unknown feedback kind {self.kind!r}")
        if self.kind == "tr":
            if self.m is None or self.m < 1:
                raise ValueError("top-m feedback needs m >= 1")
        elif self.m is not None:
            raise ValueError(f"{self.kind!r} feedback takes no m")

    def width(self, k: int) -> int:
        """Number of ranked entries returned from a size-k subset."""
        if self.kind == "wi":
            return 1
        if self.kind == "fr":
            return k
        return self.m  # type: ignore[return-value]

    def label(self) -> str:
        return f"tr:{self.m}" if self.kind == "tr" else self.kind

    @classmethod
    def parse(cls, text: str) -> "FeedbackMode":
        t = text.strip().lower()
        if t == "wi":
            return WINNER_ONLY
        if t == "fr":
            return FULL_RANKING
        if t.startswith("tr:"):
            try:
                return cls("tr", int(t[3:]))
            except ValueError as exc:
                raise ValueError(f"bad top-m width in mode {text!r}") from exc
        raise ValueError(f"unknown feedback mode {text!r} (use wi, tr:<m>, or fr)")


WINNER_ONLY = FeedbackMode("wi")
FULL_RANKING = FeedbackMode("fr")


def top_m_mode(m: int) -> FeedbackMode:
    return FeedbackMode("tr", m)


class BudgetExhausted(Exception):
    """Raised when a query would exceed the configured hard budget.

    `rows` holds the feedback of the queries that were still issued by the
    interrupted call (possibly empty), so anytime extraction can use them.
    """

    def __init__(self, rows: np.ndarray):
        super().__init__("query budget exhausted")
        self.rows = rows


class QueryOracle:
    """Seeded feedback server for one run.

    Not thread-safe; one oracle per run. `queries_used` advances by exactly
    one per issued query and never on rejected (wrong-size) queries.
    """

    def __init__(
        self,
        instance: PLInstance,
        k: int,
        mode: FeedbackMode = WINNER_ONLY,
        *,
        seed,
        budget: int | None = None,
    ):
        if not 2 <= k <= instance.n:
            raise ValueError(f"need 2 <= k <= n, got k={k}, n={instance.n}")
        if mode.width(k) > k:
            raise ValueError(f"feedback width {mode.width(k)} exceeds k={k}")
        if budget is not None and budget < 1:
            raise ValueError("budget must be >= 1")
        self._instance = instance
        self.k = k
        self.mode = mode
        self.budget = budget
        self.queries_used = 0
        self._seed = seed
        self._rng = np.random.default_rng(seed)

    @property
    def n(self) -> int:
        return self._instance.n

    @property
    def feedback_width(self) -> int:
        return self.mode.width(self.k)

    def with_budget(self, max_queries: int) -> "QueryOracle":
        """Fresh oracle with the same seed and configuration plus a hard budget."""
        if self.queries_used:
            raise ValueError("with_budget requires an unused oracle")
        return QueryOracle(
            self._instance, self.k, self.mode, seed=self._seed, budget=max_queries
        )

    def _check_subset(self, subset: Sequence[int]) -> model.Items:
        s = model.validate_subset(self.n, subset)
        if len(s) != self.k:
            raise ValueError(
                f"protocol violation: must play exactly k={self.k} items, got {len(s)}"
            )
        return s

    def query(self, subset: Sequence[int]) -> TopMRanking:
        """One round: play the subset, get its sampled feedback."""
        s = self._check_subset(subset)
        rows = self.query_batch(s, 1)
        return TopMRanking(tuple(rows[0]), s)

    def query_batch(self, subset: Sequence[int], count: int) -> np.ndarray:
        """`count` independent rounds on one subset; (count, m) array of item ids.

        Raises BudgetExhausted (carrying the issued prefix) if the budget
        runs out mid-batch.
        """
        s = self._check_subset(subset)
        if count < 0:
            raise ValueError("count must be nonnegative")
        issue = count
        truncated = False
        if self.budget is not None:
            room = self.budget - self.queries_used
            if room < count:
                issue = room
                truncated = True
        rows = model.sample_top_m_batch(
            self._instance, s, self.feedback_width, issue, self._rng
        )
        self.queries_used += issue
        if truncated:
            raise BudgetExhausted(rows)
        return rows

    def query_until(
        self, subset: Sequence[int], item: int, wins: int, limit: int
    ) -> tuple[np.ndarray, bool]:
        """Play one subset until `item` has appeared in `wins` feedback rows.

        Stops early after `limit` issued rows. Returns (rows, reached) where
        `reached` says whether the target count was hit. Only issued rows
        count against `queries_used` and the budget; draws sampled past the
        stopping row are discarded.
        """
        s = self._check_subset(subset)
        if item not in s:
            raise ValueError(f"target item {item} not in played subset")
        if wins < 1:
            raise ValueError("wins must be >= 1")
        if limit < 1:
            raise ValueError("limit must be >= 1")
        m = self.feedback_width
        parts: list[np.ndarray] = []
        won = 0
        issued = 0
        while True:
            room_budget = None
            if self.budget is not None:
                room_budget = self.budget - self.queries_used
                if room_budget <= 0:
                    raise BudgetExhausted(self._gather(parts, m))
            block = model.sample_top_m_batch(self._instance, s, m, _BLOCK, self._rng)
            appears = (block == item).any(axis=1)
            cum = np.cumsum(appears)
            pos = int(np.searchsorted(cum, wins - won))
            take = pos + 1 if pos < _BLOCK else _BLOCK
            take = min(take, limit - issued)
            exhausted = False
            if room_budget is not None and take > room_budget:
                take = room_budget
                exhausted = True
            parts.append(block[:take])
            self.queries_used += take
            issued += take
            won += int(appears[:take].sum())
            if exhausted:
                raise BudgetExhausted(self._gather(parts, m))
            if won >= wins:
                return self._gather(parts, m), True
            if issued >= limit:
                return self._gather(parts, m), False

    @staticmethod
    def _gather(parts: list[np.ndarray], m: int) -> np.ndarray:
        if not parts:
            return np.empty((0, m), dtype=np.int64)
        return np.concatenate(parts, axis=0)


class RelabeledOracle:
    """Permuted-label view of an oracle.

    `relabel[j]` is the inner item behind view label j. An algorithm run
    against this view is pathwise identical to the same algorithm run on the
    correspondingly relabeled instance, which is how label-symmetry of the
    whole stack is tested.
    """

    def __init__(self, inner, relabel: Sequence[int]):
        to_inner = np.asarray([int(i) for i in relabel], dtype=np.int64)
        if sorted(to_inner.tolist()) != list(range(inner.n)):
            raise ValueError("relabel must be a permutation of 0..n-1")
        self._inner = inner
        self._to_inner = to_inner
        self._to_view = np.argsort(to_inner)

    @property
    def n(self) -> int:
        return self._inner.n

    @property
    def k(self) -> int:
        return self._inner.k

    @property
    def mode(self) -> FeedbackMode:
        return self._inner.mode

    @property
    def feedback_width(self) -> int:
        return self._inner.feedback_width

    @property
    def budget(self) -> int | None:
        return self._inner.budget

    @property
    def queries_used(self) -> int:
        return self._inner.queries_used

    def with_budget(self, max_queries: int) -> "RelabeledOracle":
        return RelabeledOracle(self._inner.with_budget(max_queries), self._to_inner)

    def _map_subset(self, subset: Sequence[int]) -> list[int]:
        return [int(self._to_inner[int(i)]) for i in subset]

    def query(self, subset: Sequence[int]) -> TopMRanking:
        s = tuple(int(i) for i in subset)
        fb = self._inner.query(self._map_subset(s))
        return TopMRanking(tuple(int(self._to_view[i]) for i in fb.ordered), s)

    def query_batch(self, subset: Sequence[int], count: int) -> np.ndarray:
        try:
            rows = self._inner.query_batch(self._map_subset(subset), count)
        except BudgetExhausted as exc:
            raise BudgetExhausted(self._to_view[exc.rows]) from None
        return self._to_view[rows]

    def query_until(
        self, subset: Sequence[int], item: int, wins: int, limit: int
    ) -> tuple[np.ndarray, bool]:
        try:
            rows, reached = self._inner.query_until(
                self._map_subset(subset), int(self._to_inner[item]), wins, limit
            )
        except BudgetExhausted as exc:
            raise BudgetExhausted(self._to_view[exc.rows]) from None
        return self._to_view[rows], reached
