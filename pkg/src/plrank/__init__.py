"""Active PAC ranking of n items from subset-wise Plackett-Luce feedback."""

from .algorithms import (
    GroupPartition,
    PACParams,
    PivotResult,
    RankResult,
    assemble_ranking,
    beat_the_pivot,
    beat_the_pivot_queries,
    find_the_pivot,
    partition_into_groups,
    pivot_search_queries,
    score_and_rank,
)
from .environments import ENVIRONMENT_NAMES, environment
from .estimators import (
    NoComparisons,
    PairwiseCounts,
    RenewalScoreState,
    Schedule,
    geometric_deviation_bound,
    pairwise_deviation_bound,
    pivot_round_budget,
    round_budget,
    score_group_cap,
    score_round_budget,
)
from .evaluation import (
    EvalReport,
    convert_objective,
    evaluate,
    is_eps_best_item,
    is_eps_best_ranking,
    is_eps_best_ranking_multiplicative,
    kendall_eps_loss,
)
from .harness import (
    AggregateRow,
    ConfigError,
    ExperimentConfig,
    RunRecord,
    aggregate,
    emit_csv,
    parse_config,
    run_experiment,
)
from .model import (
    PLInstance,
    Ranking,
    TopMRanking,
    check_iia,
    enumerate_top_m_distribution,
    ranking_probability,
    sample_top_m,
    sample_top_m_batch,
    sample_winner,
    winner_distribution,
)
from .oracle import (
    FULL_RANKING,
    WINNER_ONLY,
    BudgetExhausted,
    FeedbackMode,
    QueryOracle,
    RelabeledOracle,
    top_m_mode,
)

__version__ = "0.1.0"

__all__ = [
    "AggregateRow",
    "BudgetExhausted",
    "ConfigError",
    "ENVIRONMENT_NAMES",
    "EvalReport",
    "ExperimentConfig",
    "FULL_RANKING",
    "FeedbackMode",
    "GroupPartition",
    "NoComparisons",
    "PACParams",
    "PLInstance",
    "PairwiseCounts",
    "PivotResult",
    "QueryOracle",
    "RankResult",
    "Ranking",
    "RelabeledOracle",
    "RenewalScoreState",
    "RunRecord",
    "Schedule",
    "TopMRanking",
    "WINNER_ONLY",
    "aggregate",
    "assemble_ranking",
    "beat_the_pivot",
    "beat_the_pivot_queries",
    "check_iia",
    "convert_objective",
    "emit_csv",
    "enumerate_top_m_distribution",
    "environment",
    "evaluate",
    "find_the_pivot",
    "geometric_deviation_bound",
    "is_eps_best_item",
    "is_eps_best_ranking",
    "is_eps_best_ranking_multiplicative",
    "kendall_eps_loss",
    "pairwise_deviation_bound",
    "parse_config",
    "partition_into_groups",
    "pivot_round_budget",
    "pivot_search_queries",
    "ranking_probability",
    "round_budget",
    "run_experiment",
    "sample_top_m",
    "sample_top_m_batch",
    "sample_winner",
    "score_and_rank",
    "score_group_cap",
    "score_round_budget",
    "top_m_mode",
    "winner_distribution",
]
