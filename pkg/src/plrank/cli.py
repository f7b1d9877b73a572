"""Command line front end.

    plrank run  --config exp.cfg --out results.csv [--jobs N] [--seed S] [--timing]
    plrank env  --name geo8
    plrank eval --weights w.txt --ranking r.txt --eps 0.1 [--normalize]

Exit codes: 0 success, 2 configuration problem, 3 I/O failure.

File formats: a weights file holds one decimal per line (the item index is
the 0-based line number); a ranking file holds one 0-based item index per
line, best first. `plrank env` prints in weights-file format, so its output
feeds straight into `plrank eval --weights`.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from . import evaluation, harness
from .environments import ENVIRONMENT_NAMES, environment
from .harness import ConfigError
from .model import PLInstance, Ranking

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plrank",
        description="Active PAC ranking from subset-wise preference feedback",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute an experiment config and write a CSV")
    run.add_argument("--config", required=True, help="key=value experiment file")
    run.add_argument("--out", required=True, help="output CSV path")
    run.add_argument("--jobs", type=int, default=1, help="parallel worker count")
    run.add_argument("--seed", type=int, default=None, help="override master_seed")
    run.add_argument(
        "--timing",
        action="store_true",
        help="record wall times (breaks byte-identical reruns)",
    )
    run.add_argument(
        "--aggregate",
        action="store_true",
        help="write per-configuration means instead of raw run records",
    )

    env = sub.add_parser("env", help="print a named instance's weights")
    env.add_argument("--name", required=True, help=", ".join(ENVIRONMENT_NAMES))

    ev = sub.add_parser("eval", help="judge a ranking file against a weights file")
    ev.add_argument("--weights", required=True)
    ev.add_argument("--ranking", required=True)
    ev.add_argument("--eps", type=float, required=True)
    ev.add_argument(
        "--normalize",
        action="store_true",
        help="rescale weights so the maximum is 1",
    )
    return parser


def _read_text(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return handle.read()
    except OSError as exc:
        raise _IOFailure(f"cannot read {path}: {exc}") from exc


class _IOFailure(Exception):
    pass


def _parse_lines(path: str, cast, what: str):
    values = []
    for lineno, line in enumerate(_read_text(path).splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        try:
            values.append(cast(body))
        except ValueError:
            raise ConfigError(f"{path} line {lineno}: expected {what}, got {body!r}") from None
    if not values:
        raise ConfigError(f"{path}: no values found")
    return values


def _cmd_run(args) -> int:
    cfg = harness.parse_config(_read_text(args.config))
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed must be >= 0")
        cfg = dataclasses.replace(cfg, master_seed=args.seed)
    records = harness.run_experiment(cfg, jobs=args.jobs, timing=args.timing)
    rows = harness.aggregate(records) if args.aggregate else records
    try:
        harness.emit_csv(rows, args.out)
    except OSError as exc:
        raise _IOFailure(f"cannot write {args.out}: {exc}") from exc
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def _cmd_env(args) -> int:
    try:
        inst = environment(args.name)
    except KeyError as exc:
        raise ConfigError(str(exc.args[0])) from None
    for w in inst.weights:
        print(harness.format_float(float(w)))
    return EXIT_OK


def _cmd_eval(args) -> int:
    weights = _parse_lines(args.weights, float, "a decimal weight")
    items = _parse_lines(args.ranking, int, "an item index")
    if args.eps < 0:
        raise ConfigError("--eps must be >= 0")
    try:
        inst = PLInstance(weights, normalize=args.normalize)
        ranking = Ranking(items)
        report = evaluation.evaluate(inst, ranking, args.eps)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    print(f"eps: {harness.format_float(args.eps)}")
    print(f"is_eps_best_ranking: {str(report.is_eps_best).lower()}")
    print(f"is_eps_best_ranking_multiplicative: {str(report.is_eps_best_mult).lower()}")
    print(f"kendall_eps_loss: {harness.format_float(report.kendall_eps_loss)}")
    pairs = " ".join(f"{i},{j}" for i, j in report.violating_pairs)
    print(f"violating_pairs: {pairs}".rstrip())
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handler = {"run": _cmd_run, "env": _cmd_env, "eval": _cmd_eval}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _IOFailure as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
