import csv
import io
import json
import math

import pytest

from sparsebound.errors import ConfigError, DomainError
from sparsebound.harness import (
    CSV_COLUMNS,
    ExperimentConfig,
    canonical_json,
    compare_adaptive_gap,
    run_trials,
    strip_wall_time,
    sweep,
    wilson_interval,
)

GT = {"name": "group_testing", "crossover": 0.0}


def gt_config(**overrides):
    base = dict(
        n=8, k=2, model=GT, strategy={"name": "bernoulli", "p": 0.5}, decoder="ml",
        t=(1,), trials=2000, seed=99,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


def wilson_oracle(x, n, z=1.959963984540054):
    p = x / n
    centre = (p + z * z / (2 * n)) / (1 + z * z / n)
    half = z / (1 + z * z / n) * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n))
    return centre - half, centre + half


class TestRunTrials:
    def test_many_tests_rarely_fail(self):
        row = run_trials(gt_config(t=(30,)), workers=1).rows[0]
        assert row["empirical_pe"] < 0.01

    def test_one_test_respects_fano(self):
        row = run_trials(gt_config(), workers=1).rows[0]
        assert row["mi"]["value"] == pytest.approx(0.5623351446188083, abs=1e-12)
        assert row["fano_bound"] == pytest.approx(0.6232, abs=1e-4)
        lo, hi = row["pe_interval"]
        assert row["empirical_pe"] >= row["fano_bound"] - 3 * (hi - lo) / 2
        assert row["fano_consistent"]

    def test_single_trial_is_reproducible(self):
        c = gt_config(trials=1, t=(3,))
        a = strip_wall_time(run_trials(c, workers=1).to_dict())
        b = strip_wall_time(run_trials(c, workers=1).to_dict())
        assert canonical_json(a) == canonical_json(b)
        assert len(a["rows"]) == 1

    def test_accounting(self):
        report = run_trials(gt_config(t=(1, 2, 4), trials=300), workers=1)
        for i, row in enumerate(report.rows):
            assert row["seed"] == 99 + i
            assert 0 <= row["error_count"] <= row["trials"]
            assert row["empirical_pe"] == row["error_count"] / row["trials"]
            lo, hi = row["pe_interval"]
            assert lo <= row["empirical_pe"] <= hi

    def test_worker_count_does_not_change_results(self):
        c = gt_config(t=(8,), trials=3000, seed=5)
        a = strip_wall_time(run_trials(c, workers=1).to_dict())
        b = strip_wall_time(run_trials(c, workers=2).to_dict())
        assert canonical_json(a) == canonical_json(b)

    def test_revealed_trials(self):
        row = run_trials(gt_config(revealed_size=1, t=(2,)), workers=1).rows[0]
        assert row["revealed_size"] == 1
        assert row["mi"]["value"] == pytest.approx(0.5 * math.log(2), abs=1e-12)
        assert row["fano_consistent"]

    def test_splitting_reports_tests_used(self):
        c = gt_config(
            n=32, k=2, strategy={"name": "binary_splitting"}, decoder="splitting", t=(40,),
            trials=200, mi_estimation={"method": "plug-in", "samples": 500},
        )
        row = run_trials(c, workers=1).rows[0]
        assert row["error_count"] == 0
        assert row["mean_tests_used"] <= math.log2(math.comb(32, 2)) + 2
        assert row["mi"]["method"] == "plug-in"

    def test_linear_rows_carry_feasibility(self):
        c = ExperimentConfig(
            n=8, k=2, model={"name": "linear_cs", "snr": 10.0}, strategy={"name": "gaussian"},
            decoder="ml", t=(6,), trials=50, seed=1,
        )
        row = run_trials(c, workers=1).rows[0]
        assert row["mi"]["method"] == "closed-form"
        assert isinstance(row["cs_feasible"], bool)


class TestSweep:
    def test_t_sweep_is_roughly_monotone(self):
        report = sweep(gt_config(trials=1000), "t", range(1, 11), workers=1)
        rows = report.rows
        assert [r["t"] for r in rows] == list(range(1, 11))
        assert [r["seed"] for r in rows] == list(range(99, 109))
        for a, b in zip(rows, rows[1:]):
            sa = math.sqrt(a["empirical_pe"] * (1 - a["empirical_pe"]) / 1000)
            sb = math.sqrt(b["empirical_pe"] * (1 - b["empirical_pe"]) / 1000)
            assert b["empirical_pe"] <= a["empirical_pe"] + 3 * math.hypot(sa, sb)

    def test_empty_range(self):
        with pytest.raises(ConfigError):
            sweep(gt_config(), "t", [])

    def test_snr_sweep_tags_feasibility(self):
        c = ExperimentConfig(
            n=8, k=2, model={"name": "linear_cs", "snr": 1.0}, strategy={"name": "gaussian"},
            decoder="ml", t=(10,), trials=20, seed=3,
        )
        report = sweep(c, "snr", [0.1, 1.0, 100.0], workers=1)
        assert [r["snr"] for r in report.rows] == [0.1, 1.0, 100.0]
        verdicts = [r["cs_feasible"] for r in report.rows]
        assert verdicts == sorted(verdicts)

    def test_snr_sweep_needs_snr_model(self):
        with pytest.raises(ConfigError):
            sweep(gt_config(), "snr", [1.0])

    def test_csv(self):
        report = sweep(gt_config(trials=50), "t", [1, 2], workers=1)
        rows = list(csv.DictReader(io.StringIO(report.to_csv())))
        assert tuple(rows[0]) == CSV_COLUMNS
        assert [int(r["t"]) for r in rows] == [1, 2]


class TestCompare:
    def test_identical_configs_have_zero_gap(self):
        c = gt_config(t=(3, 6), trials=400)
        gap = compare_adaptive_gap(c, c, workers=1)
        assert [r["gap"] for r in gap["rows"]] == [0.0, 0.0]

    def test_mismatched_dims(self):
        with pytest.raises(DomainError):
            compare_adaptive_gap(gt_config(), gt_config(n=9), workers=1)

    def test_gap_interval(self):
        a = gt_config(t=(12,), trials=500, n=16)
        b = gt_config(
            t=(12,), trials=500, n=16, strategy={"name": "binary_splitting"}, decoder="splitting",
            mi_estimation={"method": "none"},
        )
        row = compare_adaptive_gap(a, b, workers=1)["rows"][0]
        lo, hi = row["gap_interval"]
        assert lo <= row["gap"] <= hi
        assert row["gap"] == pytest.approx(row["nonadaptive_pe"] - row["adaptive_pe"])


class TestConfig:
    def test_round_trip(self):
        c = gt_config(t=(1, 2))
        assert ExperimentConfig.from_json(canonical_json(c.to_dict())) == c
        assert c.digest() == ExperimentConfig.from_dict(c.to_dict()).digest()

    def test_unknown_field(self):
        d = gt_config().to_dict()
        d["colour"] = "blue"
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict(d)

    def test_schema_version_required(self):
        d = gt_config().to_dict()
        del d["schema_version"]
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict(d)
        d["schema_version"] = 2
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict(d)

    @pytest.mark.parametrize(
        "overrides",
        [
            {"trials": 0},
            {"revealed_size": 2},
            {"t": ()},
            {"decoder": "lasso"},
            {"strategy": {"name": "bernoulli", "q": 0.1}},
            {"strategy": {"name": "magic"}},
            {"model": {"name": "group_testing", "crossover": 0.7}},
            {"bound_form": "loose"},
            {"decoder": "splitting"},
        ],
    )
    def test_invalid(self, overrides):
        with pytest.raises(ConfigError):
            gt_config(**overrides)


class TestWilson:
    @pytest.mark.parametrize("x,n", [(0, 10), (10, 10), (3, 17), (500, 2000), (1, 1)])
    def test_matches_formula(self, x, n):
        assert wilson_interval(x, n) == pytest.approx(wilson_oracle(x, n), abs=1e-14)

    def test_bounds(self):
        lo, hi = wilson_interval(0, 50)
        assert lo == pytest.approx(0.0, abs=1e-15) and 0 < hi < 0.1


def test_canonical_json_is_sorted_and_finite():
    text = canonical_json({"b": 1, "a": [1.5, {"d": None, "c": "x"}]})
    assert text.index('"a"') < text.index('"b"') and text.index('"c"') < text.index('"d"')
    assert canonical_json(json.loads(text)) == text
    with pytest.raises(ValueError):
        canonical_json({"x": float("inf")})
