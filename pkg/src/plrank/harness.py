"""Reproducible experiment runner.

A flat key=value config describes one experiment: an instance, a learner,
the feedback protocol, and a repetition count. Each repetition derives its
own random streams from (master_seed, run_id), so outputs are byte-stable
across invocations, platforms with identical floating point, and any level
of worker parallelism.

Budget checkpoints realize loss-versus-sample-size curves: for every
checkpoint the run is replayed under that hard budget. Replays share the
repetition's seed, so a shorter budget reproduces the exact prefix of a
longer run's trajectory and the checkpoint rows describe one trajectory
sampled at several points.
"""

from __future__ import annotations

import concurrent.futures
import math
import time
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import algorithms, evaluation
from .environments import ENVIRONMENT_NAMES, environment
from .model import PLInstance
from .oracle import FeedbackMode, QueryOracle

ALGORITHMS = ("beat-the-pivot", "score-and-rank", "find-the-pivot")
SWEEP_AXES = ("budget", "k", "m")

RECORD_HEADER = (
    "run_id,algorithm,env,n,k,m,eps,delta,seed,queries,loss,eps_best,cap_hit,wall_time_ms"
)
AGGREGATE_HEADER = (
    "env,algorithm,k,m,eps,delta,budget,count,"
    "loss_mean,loss_stderr,success_rate,queries_mean,queries_stderr"
)


class ConfigError(ValueError):
    """Invalid experiment description; message says what to fix."""


@dataclass(frozen=True)
class ExperimentConfig:
    algorithm: str
    k: int
    eps: float
    delta: float
    runs: int
    master_seed: int
    env_name: str | None = None
    weights: tuple[float, ...] | None = None
    normalize: bool = False
    mode: FeedbackMode = FeedbackMode("wi")
    budget_checkpoints: tuple[int, ...] | None = None
    budget_scale: float = 1.0
    sweep: str | None = None
    sweep_values: tuple[int, ...] = ()

    def instance(self) -> PLInstance:
        if self.env_name is not None:
            return environment(self.env_name)
        return PLInstance(self.weights, normalize=self.normalize)

    def env_label(self) -> str:
        return self.env_name if self.env_name is not None else "inline"


@dataclass(frozen=True)
class RunRecord:
    """One (repetition, checkpoint) outcome. `budget` is the checkpoint
    (None when unbudgeted) and is carried for aggregation, not serialized."""

    run_id: int
    algorithm: str
    env: str
    n: int
    k: int
    m: int
    eps: float
    delta: float
    seed: int
    queries: int
    loss: float
    eps_best: int
    cap_hit: int
    wall_time_ms: float
    budget: int | None = field(default=None, compare=False)


@dataclass(frozen=True)
class AggregateRow:
    env: str
    algorithm: str
    k: int
    m: int
    eps: float
    delta: float
    budget: int | None
    count: int
    loss_mean: float
    loss_stderr: float
    success_rate: float
    queries_mean: float
    queries_stderr: float


_BOOLEANS = {"true": True, "false": False, "yes": True, "no": False, "1": True, "0": False}

_KNOWN_KEYS = {
    "environment",
    "weights",
    "normalize",
    "algorithm",
    "k",
    "mode",
    "eps",
    "delta",
    "runs",
    "master_seed",
    "budget_checkpoints",
    "budget_scale",
    "sweep",
    "sweep_values",
}


def parse_config(text: str) -> ExperimentConfig:
    """Parse the flat key=value format ('#' starts a comment)."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected key = value, got {line.strip()!r}")
        key, value = (part.strip() for part in body.split("=", 1))
        if key not in _KNOWN_KEYS:
            raise ConfigError(
                f"line {lineno}: unknown key {key!r}; known keys: "
                + ", ".join(sorted(_KNOWN_KEYS))
            )
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value
    return _build_config(raw)


def _need(raw: dict[str, str], key: str) -> str:
    if key not in raw:
        raise ConfigError(f"missing required key {key!r}")
    return raw[key]


def _parse_number(key: str, value: str, cast, predicate, what: str):
    try:
        out = cast(value)
    except ValueError:
        raise ConfigError(f"key {key!r}: cannot parse {value!r}") from None
    if not predicate(out):
        raise ConfigError(f"key {key!r}: must be {what}, got {value}")
    return out


def _parse_list(key: str, value: str, cast) -> tuple:
    try:
        return tuple(cast(part.strip()) for part in value.split(",") if part.strip())
    except ValueError:
        raise ConfigError(f"key {key!r}: cannot parse list {value!r}") from None


def _build_config(raw: dict[str, str]) -> ExperimentConfig:
    if ("environment" in raw) == ("weights" in raw):
        raise ConfigError("give exactly one of 'environment' or 'weights'")
    env_name = raw.get("environment")
    if env_name is not None and env_name not in ENVIRONMENT_NAMES:
        raise ConfigError(
            f"unknown environment {env_name!r}; known: {', '.join(ENVIRONMENT_NAMES)}"
        )
    weights = _parse_list("weights", raw["weights"], float) if "weights" in raw else None
    normalize = False
    if "normalize" in raw:
        flag = raw["normalize"].lower()
        if flag not in _BOOLEANS:
            raise ConfigError(f"key 'normalize': expected true/false, got {raw['normalize']!r}")
        normalize = _BOOLEANS[flag]

    algorithm = _need(raw, "algorithm").lower()
    if algorithm not in ALGORITHMS:
        raise ConfigError(f"unknown algorithm {algorithm!r}; known: {', '.join(ALGORITHMS)}")
    k = _parse_number("k", _need(raw, "k"), int, lambda v: v >= 2, ">= 2")
    eps = _parse_number("eps", _need(raw, "eps"), float, lambda v: 0 < v < 1, "in (0, 1)")
    delta = _parse_number("delta", _need(raw, "delta"), float, lambda v: 0 < v < 1, "in (0, 1)")
    runs = _parse_number("runs", _need(raw, "runs"), int, lambda v: v >= 1, ">= 1")
    master_seed = _parse_number(
        "master_seed", _need(raw, "master_seed"), int, lambda v: v >= 0, ">= 0"
    )
    try:
        mode = FeedbackMode.parse(raw.get("mode", "wi"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    checkpoints = None
    if "budget_checkpoints" in raw:
        checkpoints = _parse_list("budget_checkpoints", raw["budget_checkpoints"], int)
        if not checkpoints or any(c < 1 for c in checkpoints):
            raise ConfigError("key 'budget_checkpoints': need positive query counts")
        checkpoints = tuple(sorted(set(checkpoints)))
    budget_scale = 1.0
    if "budget_scale" in raw:
        budget_scale = _parse_number(
            "budget_scale", raw["budget_scale"], float, lambda v: v > 0, "> 0"
        )
    sweep = raw.get("sweep")
    sweep_values: tuple[int, ...] = ()
    if sweep is not None:
        sweep = sweep.lower()
        if sweep not in SWEEP_AXES:
            raise ConfigError(f"unknown sweep axis {sweep!r}; known: {', '.join(SWEEP_AXES)}")
        if sweep == "budget" and checkpoints is not None:
            raise ConfigError("a budget sweep already defines the checkpoints")
        if "sweep_values" not in raw:
            raise ConfigError("sweep requires sweep_values")
        sweep_values = _parse_list("sweep_values", raw["sweep_values"], int)
        if not sweep_values or any(v < 1 for v in sweep_values):
            raise ConfigError("key 'sweep_values': need positive integers")
    elif "sweep_values" in raw:
        raise ConfigError("sweep_values given without a sweep axis")

    cfg = ExperimentConfig(
        algorithm=algorithm,
        k=k,
        eps=eps,
        delta=delta,
        runs=runs,
        master_seed=master_seed,
        env_name=env_name,
        weights=weights,
        normalize=normalize,
        mode=mode,
        budget_checkpoints=checkpoints,
        budget_scale=budget_scale,
        sweep=sweep,
        sweep_values=sweep_values,
    )
    _validate_cells(cfg)
    return cfg


def _validate_cells(cfg: ExperimentConfig) -> None:
    try:
        inst = cfg.instance()
    except (ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from None
    for cell in expand_cells(cfg):
        if not 2 <= cell.k <= inst.n:
            raise ConfigError(f"need 2 <= k <= n={inst.n}, got k={cell.k}")
        if cell.mode.width(cell.k) > cell.k:
            raise ConfigError(
                f"feedback width {cell.mode.width(cell.k)} exceeds k={cell.k}"
            )


@dataclass(frozen=True)
class Cell:
    """One point of a sweep: fixed k, mode, and checkpoint list."""

    index: int
    k: int
    mode: FeedbackMode
    checkpoints: tuple[int, ...] | None


def expand_cells(cfg: ExperimentConfig) -> list[Cell]:
    if cfg.sweep is None:
        return [Cell(0, cfg.k, cfg.mode, cfg.budget_checkpoints)]
    cells = []
    for idx, value in enumerate(cfg.sweep_values):
        if cfg.sweep == "k":
            cells.append(Cell(idx, value, cfg.mode, cfg.budget_checkpoints))
        elif cfg.sweep == "m":
            cells.append(Cell(idx, cfg.k, FeedbackMode("tr", value), cfg.budget_checkpoints))
        else:  # budget sweep: the values are the checkpoints
            if idx == 0:
                cells.append(Cell(0, cfg.k, cfg.mode, tuple(sorted(set(cfg.sweep_values)))))
    return cells


def run_seed(master_seed: int, run_id: int) -> np.random.SeedSequence:
    """Root stream for one repetition; stable across sweeps and platforms."""
    return np.random.SeedSequence(entropy=(master_seed, run_id))


def _seed_fingerprint(ss: np.random.SeedSequence) -> int:
    return int(ss.generate_state(1, np.uint64)[0])


def _execute(cfg: ExperimentConfig, cell: Cell, run_id: int, timing: bool) -> list[RunRecord]:
    inst = cfg.instance()
    budgets: Sequence[int | None] = cell.checkpoints if cell.checkpoints else (None,)
    records = []
    root = run_seed(cfg.master_seed, run_id)
    fingerprint = _seed_fingerprint(root)
    # one stream pair per repetition, shared by every checkpoint replay, so a
    # budgeted rerun walks the exact prefix of the unbudgeted trajectory
    oracle_ss, algo_ss = root.spawn(2)
    for budget in budgets:
        oracle = QueryOracle(inst, cell.k, cell.mode, seed=oracle_ss, budget=budget)
        rng = np.random.default_rng(algo_ss)
        params = algorithms.PACParams(cfg.eps, cfg.delta)
        began = time.perf_counter()
        if cfg.algorithm == "find-the-pivot":
            res = algorithms.find_the_pivot(oracle, params, rng, scale=cfg.budget_scale)
            best = evaluation.is_eps_best_item(inst, res.item, cfg.eps)
            loss = 0.0 if best else 1.0
            cap_hit = 0
        else:
            runner = (
                algorithms.beat_the_pivot
                if cfg.algorithm == "beat-the-pivot"
                else algorithms.score_and_rank
            )
            res = runner(oracle, params, cell.mode, rng, scale=cfg.budget_scale)
            best, _ = evaluation.is_eps_best_ranking(inst, res.ranking, cfg.eps)
            loss = evaluation.kendall_eps_loss(inst, res.ranking, cfg.eps)
            cap_hit = 1 if res.cap_hits else 0
        elapsed_ms = (time.perf_counter() - began) * 1000.0
        records.append(
            RunRecord(
                run_id=run_id,
                algorithm=cfg.algorithm,
                env=cfg.env_label(),
                n=inst.n,
                k=cell.k,
                m=cell.mode.width(cell.k),
                eps=cfg.eps,
                delta=cfg.delta,
                seed=fingerprint,
                queries=oracle.queries_used,
                loss=loss,
                eps_best=1 if best else 0,
                cap_hit=cap_hit,
                wall_time_ms=elapsed_ms if timing else 0.0,
                budget=budget,
            )
        )
    return records


def run_experiment(
    cfg: ExperimentConfig, jobs: int = 1, timing: bool = False
) -> list[RunRecord]:
    """Execute all (cell, repetition, checkpoint) combinations.

    Records come back in a fixed order regardless of worker scheduling:
    by cell, then run_id, then checkpoint.
    """
    if jobs < 1:
        raise ConfigError("jobs must be >= 1")
    cells = expand_cells(cfg)
    tasks = [(cell, run_id) for cell in cells for run_id in range(cfg.runs)]
    if jobs == 1:
        batches = [_execute(cfg, cell, run_id, timing) for cell, run_id in tasks]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [
                pool.submit(_execute, cfg, cell, run_id, timing) for cell, run_id in tasks
            ]
            # submission order == task order, so results land pre-sorted
            batches = [f.result() for f in futures]
    return [record for batch in batches for record in batch]


def aggregate(records: Iterable[RunRecord]) -> list[AggregateRow]:
    """Per-configuration means and standard errors, grouped on
    (env, algorithm, k, m, eps, delta, budget)."""
    records = list(records)
    if not records:
        raise ValueError("no records to aggregate")
    groups: dict[tuple, list[RunRecord]] = {}
    for rec in records:
        key = (rec.env, rec.algorithm, rec.k, rec.m, rec.eps, rec.delta, rec.budget)
        groups.setdefault(key, []).append(rec)
    out = []
    for key in sorted(groups, key=lambda k: tuple(str(part) for part in k)):
        bunch = groups[key]
        losses = np.array([r.loss for r in bunch], dtype=np.float64)
        queries = np.array([r.queries for r in bunch], dtype=np.float64)
        flags = np.array([r.eps_best for r in bunch], dtype=np.float64)
        count = len(bunch)
        out.append(
            AggregateRow(
                env=key[0],
                algorithm=key[1],
                k=key[2],
                m=key[3],
                eps=key[4],
                delta=key[5],
                budget=key[6],
                count=count,
                loss_mean=float(losses.mean()),
                loss_stderr=_stderr(losses),
                success_rate=float(flags.mean()),
                queries_mean=float(queries.mean()),
                queries_stderr=_stderr(queries),
            )
        )
    return out


def _stderr(values: np.ndarray) -> float:
    if len(values) < 2:
        return 0.0
    return float(values.std(ddof=1) / math.sqrt(len(values)))


def format_float(x: float) -> str:
    """Up to 10 significant digits, '.' decimal separator."""
    return f"{x:.10g}"


def emit_csv(rows: Sequence[RunRecord] | Sequence[AggregateRow], path) -> None:
    """Write run records (or aggregates) with the fixed column schema."""
    lines = []
    if rows and isinstance(rows[0], AggregateRow):
        lines.append(AGGREGATE_HEADER)
        for agg in rows:
            lines.append(
                ",".join(
                    [
                        agg.env,
                        agg.algorithm,
                        str(agg.k),
                        str(agg.m),
                        format_float(agg.eps),
                        format_float(agg.delta),
                        "" if agg.budget is None else str(agg.budget),
                        str(agg.count),
                        format_float(agg.loss_mean),
                        format_float(agg.loss_stderr),
                        format_float(agg.success_rate),
                        format_float(agg.queries_mean),
                        format_float(agg.queries_stderr),
                    ]
                )
            )
    else:
        lines.append(RECORD_HEADER)
        for rec in rows:
            lines.append(
                ",".join(
                    [
                        str(rec.run_id),
                        rec.algorithm,
                        rec.env,
                        str(rec.n),
                        str(rec.k),
                        str(rec.m),
                        format_float(rec.eps),
                        format_float(rec.delta),
                        str(rec.seed),
                        str(rec.queries),
                        format_float(rec.loss),
                        str(rec.eps_best),
                        str(rec.cap_hit),
                        format_float(rec.wall_time_ms),
                    ]
                )
            )
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\n".join(lines) + "\n")
