"""Ground-truth-aware correctness predicates and ranking losses.

A ranking is near-best (additively) when no misranked pair of items has a
weight gap of eps or more; the multiplicative variant requires the head-to-
head win probability of the misranked pair to stay below 1/2 + eps. The
relaxed Kendall loss counts misranked pairs whose gap strictly exceeds eps,
normalized by the number of pairs.

Boundary note: the near-best predicate counts a pair with gap exactly eps
as a violation (>=), while the loss does not (strict >). Both are kept
verbatim; they coincide on instances where no gap equals eps exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .model import PLInstance, Ranking

Direction = Literal["additive-to-multiplicative", "multiplicative-to-additive"]


@dataclass(frozen=True)
class EvalReport:
    """One ranking judged against one instance at one tolerance."""

    is_eps_best: bool
    is_eps_best_mult: bool
    kendall_eps_loss: float
    violating_pairs: tuple[tuple[int, int], ...]


def _check_eps(eps: float) -> float:
    eps = float(eps)
    if not np.isfinite(eps) or eps < 0.0:
        raise ValueError("eps must be a nonnegative real")
    return eps


def is_eps_best_item(inst: PLInstance, item: int, eps: float) -> bool:
    """True when the item's weight is within eps of the maximum weight."""
    eps = _check_eps(eps)
    if not 0 <= item < inst.n:
        raise ValueError(f"item {item} out of range")
    return bool(inst.weights[item] >= inst.weights.max() - eps)


def eps_best_violations(
    inst: PLInstance, ranking: Ranking, eps: float
) -> list[tuple[int, int]]:
    """Misranked pairs (i, j): i ranked below j although w_i >= w_j + eps."""
    eps = _check_eps(eps)
    if ranking.n != inst.n:
        raise ValueError("ranking size does not match the instance")
    pos = ranking.positions()
    w = inst.weights
    out = []
    for i in range(inst.n):
        for j in range(inst.n):
            if i != j and w[i] >= w[j] + eps and pos[i] > pos[j]:
                out.append((i, j))
    return out


def is_eps_best_ranking(
    inst: PLInstance, ranking: Ranking, eps: float
) -> tuple[bool, list[tuple[int, int]]]:
    """Near-best predicate plus the list of violating pairs."""
    bad = eps_best_violations(inst, ranking, eps)
    return (not bad), bad


def is_eps_best_ranking_multiplicative(
    inst: PLInstance, ranking: Ranking, eps: float
) -> bool:
    """Multiplicative variant: no misranked pair with Pr(i beats j) >= 1/2 + eps."""
    eps = _check_eps(eps)
    if ranking.n != inst.n:
        raise ValueError("ranking size does not match the instance")
    pos = ranking.positions()
    w = inst.weights
    for i in range(inst.n):
        for j in range(inst.n):
            if i == j:
                continue
            if w[i] / (w[i] + w[j]) >= 0.5 + eps and pos[i] > pos[j]:
                return False
    return True


def kendall_eps_loss(inst: PLInstance, ranking: Ranking, eps: float) -> float:
    """Relaxed pairwise Kendall loss in [0, 1].

    Fraction of item pairs misranked despite a weight gap strictly above
    eps; zero exactly on near-best rankings away from the gap-equals-eps
    boundary.
    """
    eps = _check_eps(eps)
    if ranking.n != inst.n:
        raise ValueError("ranking size does not match the instance")
    n = inst.n
    pos = ranking.positions()
    w = inst.weights
    gap = w[:, None] > w[None, :] + eps
    misranked = pos[:, None] > pos[None, :]
    bad = int(np.count_nonzero(gap & misranked))
    return bad / (n * (n - 1) / 2)


def evaluate(inst: PLInstance, ranking: Ranking, eps: float) -> EvalReport:
    """Full report: both predicates, the loss, and the violating pairs."""
    ok, bad = is_eps_best_ranking(inst, ranking, eps)
    return EvalReport(
        is_eps_best=ok,
        is_eps_best_mult=is_eps_best_ranking_multiplicative(inst, ranking, eps),
        kendall_eps_loss=kendall_eps_loss(inst, ranking, eps),
        violating_pairs=tuple(bad),
    )


def convert_objective(a: float, b: float, eps: float, direction: Direction) -> float:
    """Boundary tolerance when translating between the two objectives.

    With all weights inside [a, b], an additively eps-correct ranking is
    multiplicatively correct at eps/(4b), and a multiplicatively eps-correct
    ranking is additively correct at 4*a*eps*(1+eps). Callers may shrink.
    """
    if not 0.0 < a <= b <= 1.0:
        raise ValueError("need weight range 0 < a <= b <= 1")
    eps = float(eps)
    if not 0.0 <= eps < 1.0:
        raise ValueError("eps must lie in [0, 1)")
    if direction == "additive-to-multiplicative":
        return eps / (4.0 * b)
    if direction == "multiplicative-to-additive":
        return 4.0 * a * eps * (1.0 + eps)
    raise ValueError(f"unknown direction {direction!r}")
