"""Fano-consistency suite: simulated error rates must sit above the finite Fano bound.

Noiseless group testing with N = 10, K = 2, Bernoulli(p) designs for
p in {0.3, 0.5}, exhaustive ML decoding and T = 1..12. The suite runs once
without side information (j = 0) and once with one support item revealed to
the decoder (j = 1), each against its own bound computed from the exact MI.
"""

from __future__ import annotations

import time
from itertools import product

from . import __version__
from .core import LN2
from .harness import ExperimentConfig, canonical_json, run_trials

SUITE_N, SUITE_K = 10, 2
SUITE_P = (0.3, 0.5)
SUITE_J = (0, 1)
SUITE_T = tuple(range(1, 13))
DEFAULT_TRIALS = 2000
DEFAULT_SEED = 20240611


def suite_configs(seed: int = DEFAULT_SEED, trials: int = DEFAULT_TRIALS) -> list[ExperimentConfig]:
    configs = []
    for idx, (p, j) in enumerate(product(SUITE_P, SUITE_J)):
        configs.append(
            ExperimentConfig(
                n=SUITE_N,
                k=SUITE_K,
                model={"name": "group_testing", "crossover": 0.0},
                strategy={"name": "bernoulli", "p": p},
                decoder="ml",
                t=SUITE_T,
                trials=trials,
                seed=seed + 1000 * idx,
                revealed_size=j,
                mi_estimation={"method": "exact"},
                bound_form="finite-fano",
            )
        )
    return configs


def run_verify(seed: int = DEFAULT_SEED, trials: int = DEFAULT_TRIALS, workers: int | None = None) -> dict:
    """Run every suite cell and return a report with per-cell verdicts."""
    started = time.perf_counter()
    cells = []
    max_mi = 0.0
    for config in suite_configs(seed, trials):
        report = run_trials(config, workers)
        for row in report.rows:
            lo, hi = row["pe_interval"]
            half = (hi - lo) / 2
            max_mi = max(max_mi, row["mi"]["value"])
            cells.append({
                "p": config.strategy["p"],
                "j": config.revealed_size,
                "t": row["t"],
                "seed": row["seed"],
                "trials": row["trials"],
                "error_count": row["error_count"],
                "empirical_pe": row["empirical_pe"],
                "wilson_half_width": half,
                "mi": row["mi"]["value"],
                "fano_bound": row["fano_bound"],
                "consistent": row["fano_consistent"],
            })
    violations = [c for c in cells if not c["consistent"]]
    return {
        "suite": "fano-consistency",
        "seed": seed,
        "trials": trials,
        "cells": cells,
        "violations": len(violations),
        "binary_cap": {"max_mi": max_mi, "cap": LN2, "ok": max_mi <= LN2},
        "passed": not violations and max_mi <= LN2,
        "units": "nats",
        "metadata": {"version": __version__, "wall_time_s": time.perf_counter() - started},
    }


def report_json(report: dict) -> str:
    return canonical_json(report)
