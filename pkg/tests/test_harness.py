import math

import numpy as np
import pytest

from plrank import ConfigError, aggregate, emit_csv, environment, parse_config, run_experiment
from plrank.harness import AGGREGATE_HEADER, RECORD_HEADER, RunRecord, expand_cells, format_float

BASE_CONFIG = """
# quick experiment
environment = geo8
algorithm   = beat-the-pivot
k           = 4
mode        = wi
eps         = 0.3
delta       = 0.1
runs        = 3
master_seed = 7
budget_scale = 0.01
"""


class TestEnvironments:
    def test_geo8(self):
        w = environment("geo8").weights
        assert w[0] == 1.0
        assert len(w) == 8
        ratios = w[1:] / w[:-1]
        assert np.allclose(ratios, 0.875, rtol=1e-12)

    def test_arith10(self):
        w = environment("arith10").weights
        assert len(w) == 10
        assert w[0] == 1.0
        assert np.allclose(np.diff(w), -0.1, atol=1e-12)
        assert w[-1] == pytest.approx(0.1)

    def test_har20(self):
        w = environment("har20").weights
        assert len(w) == 20
        assert all(w[i] == 1.0 / (i + 1) for i in range(20))

    def test_arith50(self):
        w = environment("arith50").weights
        assert len(w) == 50
        assert w[0] == 1.0
        assert w[-1] == pytest.approx(0.02)
        assert np.allclose(np.diff(w), -0.02, atol=1e-12)

    def test_unknown_name(self):
        with pytest.raises(KeyError, match="unknown environment"):
            environment("geo9")


class TestConfigParsing:
    def test_round_trip(self):
        cfg = parse_config(BASE_CONFIG)
        assert cfg.env_name == "geo8"
        assert cfg.algorithm == "beat-the-pivot"
        assert cfg.k == 4
        assert cfg.mode.kind == "wi"
        assert cfg.runs == 3
        assert cfg.budget_scale == 0.01

    def test_inline_weights(self):
        cfg = parse_config(
            "weights = 1.0, 0.5, 0.25\nalgorithm = find-the-pivot\nk = 2\n"
            "eps = 0.5\ndelta = 0.1\nruns = 1\nmaster_seed = 0\n"
        )
        assert cfg.instance().n == 3

    @pytest.mark.parametrize(
        "mutation,fragment",
        [
            ("environment = nowhere", "unknown environment"),
            ("algorithm = runs-fast", "unknown algorithm"),
            ("k = 1", ">= 2"),
            ("eps = 1.5", "must be in"),
            ("delta = 0", "must be in"),
            ("runs = 0", ">= 1"),
            ("mode = tr:9", "exceeds k"),
            ("sweep = q", "unknown sweep axis"),
            ("frobnicate = 1", "unknown key"),
            ("k = 40", "<= n"),
        ],
    )
    def test_actionable_errors(self, mutation, fragment):
        key = mutation.split("=")[0].strip()
        lines = [
            line
            for line in BASE_CONFIG.splitlines()
            if not line.strip().startswith(key)
        ]
        text = "\n".join(lines) + "\n" + mutation
        with pytest.raises(ConfigError, match=fragment):
            parse_config(text)

    def test_both_env_and_weights_rejected(self):
        with pytest.raises(ConfigError, match="exactly one"):
            parse_config(BASE_CONFIG + "weights = 1.0, 0.5\n")

    def test_missing_required_key(self):
        text = "\n".join(
            line for line in BASE_CONFIG.splitlines() if "eps" not in line
        )
        with pytest.raises(ConfigError, match="missing required key 'eps'"):
            parse_config(text)

    def test_sweep_needs_values(self):
        with pytest.raises(ConfigError, match="sweep_values"):
            parse_config(BASE_CONFIG + "sweep = k\n")

    def test_sweep_expansion(self):
        cfg = parse_config(BASE_CONFIG + "sweep = k\nsweep_values = 4, 6\n")
        cells = expand_cells(cfg)
        assert [c.k for c in cells] == [4, 6]

    def test_m_sweep_builds_top_m_modes(self):
        cfg = parse_config(BASE_CONFIG + "sweep = m\nsweep_values = 1, 2\n")
        cells = expand_cells(cfg)
        assert [c.mode.width(4) for c in cells] == [1, 2]

    def test_budget_sweep_defines_checkpoints(self):
        cfg = parse_config(BASE_CONFIG + "sweep = budget\nsweep_values = 100, 50\n")
        cells = expand_cells(cfg)
        assert len(cells) == 1
        assert cells[0].checkpoints == (50, 100)


class TestRunExperiment:
    def test_one_record_per_run(self):
        records = run_experiment(parse_config(BASE_CONFIG))
        assert len(records) == 3
        assert [r.run_id for r in records] == [0, 1, 2]
        assert all(r.env == "geo8" and r.m == 1 for r in records)

    def test_checkpoints_multiply_records(self):
        cfg = parse_config(BASE_CONFIG + "budget_checkpoints = 200, 800, 3200\n")
        records = run_experiment(cfg)
        assert len(records) == 9
        assert [r.budget for r in records[:3]] == [200, 800, 3200]
        for rec in records:
            assert rec.queries <= rec.budget

    def test_checkpoint_losses_use_shared_trajectory(self):
        cfg = parse_config(BASE_CONFIG + "budget_checkpoints = 400, 10000000\n")
        records = run_experiment(cfg)
        unbudgeted = run_experiment(parse_config(BASE_CONFIG))
        # the huge checkpoint never truncates, so it reproduces the free run
        huge = [r for r in records if r.budget == 10000000]
        assert [r.loss for r in huge] == [r.loss for r in unbudgeted]
        assert [r.queries for r in huge] == [r.queries for r in unbudgeted]

    def test_repeatable_records(self):
        a = run_experiment(parse_config(BASE_CONFIG))
        b = run_experiment(parse_config(BASE_CONFIG))
        assert a == b

    def test_parallel_equals_serial(self):
        cfg = parse_config(BASE_CONFIG)
        assert run_experiment(cfg, jobs=2) == run_experiment(cfg, jobs=1)

    def test_find_the_pivot_records(self):
        cfg = parse_config(
            "environment = geo8\nalgorithm = find-the-pivot\nk = 4\neps = 0.5\n"
            "delta = 0.1\nruns = 2\nmaster_seed = 3\n"
        )
        records = run_experiment(cfg)
        assert all(r.loss in (0.0, 1.0) for r in records)
        assert all(r.loss == 1.0 - r.eps_best for r in records)

    def test_timing_disabled_by_default(self):
        records = run_experiment(parse_config(BASE_CONFIG))
        assert all(r.wall_time_ms == 0.0 for r in records)
        timed = run_experiment(parse_config(BASE_CONFIG), timing=True)
        assert any(r.wall_time_ms > 0.0 for r in timed)

    def test_k_sweep_rederives_per_run_randomness(self):
        # cells share the per-run root seed and nothing else
        cfg = parse_config(BASE_CONFIG + "sweep = k\nsweep_values = 4, 6\n")
        records = run_experiment(cfg)
        by_cell = {}
        for rec in records:
            by_cell.setdefault(rec.k, {})[rec.run_id] = rec
        for run_id in range(cfg.runs):
            a, b = by_cell[4][run_id], by_cell[6][run_id]
            assert a.seed == b.seed
            assert a.queries != b.queries  # different k, fresh trajectory


class TestAggregate:
    def _record(self, run_id, loss, eps_best, queries=100, budget=None):
        return RunRecord(
            run_id=run_id,
            algorithm="beat-the-pivot",
            env="geo8",
            n=8,
            k=4,
            m=1,
            eps=0.3,
            delta=0.1,
            seed=run_id,
            queries=queries,
            loss=loss,
            eps_best=eps_best,
            cap_hit=0,
            wall_time_ms=0.0,
            budget=budget,
        )

    def test_all_zero_losses(self):
        rows = aggregate([self._record(i, 0.0, 1) for i in range(50)])
        assert len(rows) == 1
        assert rows[0].loss_mean == 0.0
        assert rows[0].loss_stderr == 0.0
        assert rows[0].count == 50

    def test_success_rate(self):
        recs = [self._record(i, 0.0, 1) for i in range(45)]
        recs += [self._record(45 + i, 0.2, 0) for i in range(5)]
        rows = aggregate(recs)
        assert rows[0].success_rate == pytest.approx(0.9)

    def test_groups_split_on_budget(self):
        recs = [self._record(i, 0.1, 1, budget=10) for i in range(3)]
        recs += [self._record(i, 0.2, 1, budget=20) for i in range(3)]
        rows = aggregate(recs)
        assert len(rows) == 2
        assert {r.budget for r in rows} == {10, 20}

    def test_empty_input_rejected(self):
        with pytest.raises(ValueError):
            aggregate([])

    def test_stderr_matches_sample_formula(self):
        losses = [0.0, 0.1, 0.3, 0.2]
        rows = aggregate([self._record(i, l, 1) for i, l in enumerate(losses)])
        expect = np.std(losses, ddof=1) / math.sqrt(4)
        assert rows[0].loss_stderr == pytest.approx(expect)


class TestEmitCsv:
    def test_exact_header(self, tmp_path):
        out = tmp_path / "r.csv"
        emit_csv([], out)
        assert out.read_text().splitlines() == [RECORD_HEADER]
        assert RECORD_HEADER == (
            "run_id,algorithm,env,n,k,m,eps,delta,seed,queries,loss,"
            "eps_best,cap_hit,wall_time_ms"
        )

    def test_float_formatting(self):
        assert format_float(0.1) == "0.1"
        assert format_float(1 / 3) == "0.3333333333"
        assert format_float(0.0) == "0"
        assert format_float(2.0) == "2"

    def test_record_rows(self, tmp_path):
        records = run_experiment(parse_config(BASE_CONFIG))
        out = tmp_path / "records.csv"
        emit_csv(records, out)
        lines = out.read_text().splitlines()
        assert lines[0] == RECORD_HEADER
        assert len(lines) == 4
        first = lines[1].split(",")
        assert first[0] == "0"
        assert first[1] == "beat-the-pivot"
        assert first[2] == "geo8"
        assert first[6] == "0.3"

    def test_aggregate_rows(self, tmp_path):
        rows = aggregate(run_experiment(parse_config(BASE_CONFIG)))
        out = tmp_path / "agg.csv"
        emit_csv(rows, out)
        lines = out.read_text().splitlines()
        assert lines[0] == AGGREGATE_HEADER
        assert len(lines) == 2

    def test_byte_identical_reruns(self, tmp_path):
        cfg = parse_config(BASE_CONFIG)
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        emit_csv(run_experiment(cfg), a)
        emit_csv(run_experiment(cfg), b)
        assert a.read_bytes() == b.read_bytes()
