"""Monte-Carlo estimation of the error probability and comparison with the bounds.

A trial draws the support uniformly, draws beta_S from its prior, optionally
reveals a uniformly random j-subset of the support to the decoder, runs the
strategy for T steps and records whether the decoded index is wrong.

Seeding: row ``i`` of a run uses seed ``config.seed + i``; trial ``r`` of that
row draws from the sub-stream ``(row_seed, r)``. Trial results therefore do
not depend on how trials are split across workers.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import __version__
from .bounds import FORMS, bound_term, cs_feasibility, fano_error_lower_bound, uniform_allocation_cap
from .core import MeasurementHistory, ProblemDims, make_rng, rank_support
from .decoders import comp_decode, ml_decode
from .errors import ConfigError, DomainError, SparseBoundError
from .infotheory import (
    DiscreteDesign,
    GaussianDesign,
    MiEstimate,
    binary_channel_mi_mc,
    exact_conditional_mi,
    plugin_sequence_mi,
)
from .models import (
    GroupTestingModel,
    LinearCsModel,
    ObservationModel,
    OneBitCsModel,
    coefficient_prior,
    draw_coefficients,
    model_from_dict,
)
from .strategies import (
    BernoulliStrategy,
    BinarySplittingStrategy,
    GaussianStrategy,
    Strategy,
    TwoStageCsStrategy,
)

SCHEMA_VERSION = 1
WORKERS_ENV = "SPARSEBOUND_WORKERS"
Z95 = 1.959963984540054
DEFAULT_PLUGIN_SAMPLES = 10**5
MI_STREAM = 2**32  # spawn key of the MI-estimation stream; trial keys stay below it
# below this many trial-steps a row runs in-process
PARALLEL_THRESHOLD = 20_000

STRATEGY_PARAMS = {
    "bernoulli": {"p"},
    "gaussian": set(),
    "binary_splitting": set(),
    "two_stage": {"split"},
}
DECODERS = ("ml", "comp", "splitting")
MI_METHODS = ("auto", "exact", "plug-in", "closed-form", "monte-carlo", "none")


@dataclass(frozen=True)
class ExperimentConfig:
    n: int
    k: int
    model: dict
    strategy: dict
    decoder: str
    t: tuple[int, ...]
    trials: int
    seed: int
    revealed_size: int = 0
    mi_estimation: dict = field(default_factory=lambda: {"method": "auto"})
    bound_form: str = "finite-fano"
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        t = (self.t,) if isinstance(self.t, int) else tuple(self.t)
        object.__setattr__(self, "t", t)
        self.validate()

    def validate(self):
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {self.schema_version}")
        try:
            ProblemDims(self.n, self.k, candidate_cap=None)
            model_from_dict(self.model)
        except DomainError as exc:
            raise ConfigError(str(exc)) from None
        name = self.strategy.get("name")
        if name not in STRATEGY_PARAMS:
            raise ConfigError(f"unknown strategy {name!r}; expected one of {sorted(STRATEGY_PARAMS)}")
        extra = set(self.strategy) - {"name"} - STRATEGY_PARAMS[name]
        if extra:
            raise ConfigError(f"unknown parameters for strategy {name!r}: {sorted(extra)}")
        if self.decoder not in DECODERS:
            raise ConfigError(f"unknown decoder {self.decoder!r}; expected one of {DECODERS}")
        if self.decoder == "splitting" and name != "binary_splitting":
            raise ConfigError("the splitting decoder needs the binary_splitting strategy")
        if not self.t or any(int(v) != v or v < 1 for v in self.t):
            raise ConfigError(f"t must be a nonempty list of positive integers, got {self.t}")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if not 0 <= self.revealed_size < self.k:
            raise ConfigError(f"revealed_size must lie in [0, K), got {self.revealed_size}")
        if self.bound_form not in FORMS:
            raise ConfigError(f"bound_form must be one of {FORMS}")
        mi_extra = set(self.mi_estimation) - {"method", "samples"}
        if mi_extra or self.mi_estimation.get("method", "auto") not in MI_METHODS:
            raise ConfigError(f"bad mi_estimation {self.mi_estimation}")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        if "schema_version" not in data:
            raise ConfigError("config must declare schema_version")
        missing = {"n", "k", "model", "strategy", "decoder", "t", "trials", "seed"} - set(data)
        if missing:
            raise ConfigError(f"missing config fields: {sorted(missing)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "n": self.n,
            "k": self.k,
            "model": dict(self.model),
            "strategy": dict(self.strategy),
            "decoder": self.decoder,
            "t": list(self.t),
            "trials": self.trials,
            "seed": self.seed,
            "revealed_size": self.revealed_size,
            "mi_estimation": dict(self.mi_estimation),
            "bound_form": self.bound_form,
        }

    def digest(self) -> str:
        return hashlib.sha256(canonical_json(self.to_dict()).encode()).hexdigest()


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False)


def wilson_interval(successes: int, n: int, z: float = Z95) -> tuple[float, float]:
    if n <= 0:
        raise DomainError("Wilson interval needs n >= 1")
    p = successes / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def build_strategy(config: ExperimentConfig, t: int) -> Strategy:
    spec = config.strategy
    name = spec["name"]
    dims = ProblemDims(config.n, config.k, candidate_cap=None)
    model = model_from_dict(config.model)
    if name == "bernoulli":
        return BernoulliStrategy(config.n, spec.get("p", 1.0 / config.k))
    if name == "gaussian":
        return GaussianStrategy(config.n, config.k, t)
    if name == "binary_splitting":
        return BinarySplittingStrategy(dims, model)
    if not isinstance(model, LinearCsModel):
        raise ConfigError("the two_stage strategy is defined for linear CS")
    return TwoStageCsStrategy(dims, model.snr, t, spec.get("split", 0.5))


def _decoder_dims(config: ExperimentConfig) -> ProblemDims:
    if config.decoder == "ml":
        return ProblemDims(config.n, config.k)
    return ProblemDims(config.n, config.k, candidate_cap=None)


def run_single_trial(
    config: ExperimentConfig,
    model: ObservationModel,
    strategy: Strategy,
    dims: ProblemDims,
    t: int,
    rng: np.random.Generator,
) -> tuple[bool, int]:
    """One trial; returns (error, number of non-empty measurements)."""
    n, k = config.n, config.k
    support = np.sort(rng.choice(n, k, replace=False))
    omega = rank_support(dims, support)
    beta = draw_coefficients(model, k, rng)
    j = config.revealed_size
    revealed = tuple(sorted(int(v) for v in rng.choice(support, j, replace=False))) if j else ()

    if strategy.adaptive:
        history = MeasurementHistory(n)
        used = 0
        for _ in range(t):
            x = strategy.next_design(history, rng)
            if isinstance(strategy, BinarySplittingStrategy) and strategy.done:
                break
            history.append(x, model.sample(x[support], beta, rng))
            used += 1
    else:
        x = strategy.design_matrix(t, rng)
        y = model.sample(x[:, support], beta, rng)
        history = MeasurementHistory(n, list(zip(x, np.atleast_1d(y).tolist())))
        used = t

    if config.decoder == "ml":
        estimate = ml_decode(history, model, dims, revealed)
    elif config.decoder == "comp":
        estimate = comp_decode(history, dims)
    else:
        if not strategy.done and len(history):
            strategy.next_design(history, rng)  # feeds the last outcome back
        estimate = rank_support(dims, strategy.estimate()) if strategy.done else None
    return estimate != omega, used


def _run_chunk(config_dict: dict, t: int, row_seed: int, start: int, stop: int) -> tuple[int, int]:
    config = ExperimentConfig.from_dict(config_dict)
    model = model_from_dict(config.model)
    strategy = build_strategy(config, t)
    dims = _decoder_dims(config)
    errors = used = 0
    for r in range(start, stop):
        err, u = run_single_trial(config, model, strategy, dims, t, make_rng(row_seed, r))
        errors += err
        used += u
    return errors, used


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw is None:
        return os.cpu_count() or 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None


def _count_errors(config, t, row_seed, pool, workers) -> tuple[int, int]:
    if pool is None or config.trials * t < PARALLEL_THRESHOLD:
        return _run_chunk(config.to_dict(), t, row_seed, 0, config.trials)
    n_chunks = min(config.trials, 4 * workers)
    bounds = np.linspace(0, config.trials, n_chunks + 1).astype(int)
    futures = [
        pool.submit(_run_chunk, config.to_dict(), t, row_seed, int(a), int(b))
        for a, b in zip(bounds[:-1], bounds[1:])
        if b > a
    ]
    results = [f.result() for f in futures]
    return sum(r[0] for r in results), sum(r[1] for r in results)


def _mi_for_row(config: ExperimentConfig, model: ObservationModel, t: int, row_seed: int) -> MiEstimate | None:
    method = config.mi_estimation.get("method", "auto")
    samples = int(config.mi_estimation.get("samples", DEFAULT_PLUGIN_SAMPLES))
    name = config.strategy["name"]
    k, j = config.k, config.revealed_size
    if method == "none":
        return None
    if method == "auto":
        if isinstance(model, LinearCsModel):
            method = "closed-form"
        elif name == "bernoulli":
            method = "exact"
        elif name == "gaussian":
            method = "monte-carlo"
        else:
            method = "plug-in"
    rng = make_rng(row_seed, MI_STREAM)

    if method == "closed-form":
        if not isinstance(model, LinearCsModel):
            raise ConfigError("closed-form MI is the linear CS power-constrained cap")
        return MiEstimate(uniform_allocation_cap(model.snr, config.n, k, j, t), "closed-form")
    if method == "exact":
        if name != "bernoulli" or model.output_alphabet != "binary":
            raise ConfigError("exact MI needs a binary-output model and a Bernoulli design")
        dist = DiscreteDesign.bernoulli(config.strategy.get("p", 1.0 / k))
        values = [
            exact_conditional_mi(model, dist, k, j, beta).value
            for beta in coefficient_prior(model, k)
        ]
        return MiEstimate(math.fsum(values) / len(values), "exact-enumeration")
    if method == "monte-carlo":
        if not (isinstance(model, OneBitCsModel) and name == "gaussian"):
            raise ConfigError("monte-carlo MI is implemented for 1-bit CS with Gaussian designs")
        # the isotropic design makes every sign pattern equivalent
        return binary_channel_mi_mc(
            model, GaussianDesign.isotropic(k, 1.0 / t), k, j, np.ones(k), samples, rng
        )
    return _plugin_mi(config, model, t, samples, rng)


def _plugin_mi(config, model, t, samples, rng) -> MiEstimate:
    if model.output_alphabet != "binary" or config.strategy["name"] in ("gaussian", "two_stage"):
        raise ConfigError("plug-in MI needs a binary-output model and a finite-alphabet design")
    n, k, j = config.n, config.k, config.revealed_size
    support = np.sort(rng.choice(n, k, replace=False))
    beta = draw_coefficients(model, k, rng)
    strategy = build_strategy(config, t)
    xs = np.zeros((samples, t, k), dtype=np.int8)
    ys = np.zeros((samples, t), dtype=np.int8)
    for m in range(samples):
        if strategy.adaptive:
            history = MeasurementHistory(n)
            for step in range(t):
                x = strategy.next_design(history, rng)
                y = model.sample(x[support], beta, rng)
                history.append(x, y)
                xs[m, step] = x[support]
                ys[m, step] = y
        else:
            x = strategy.design_matrix(t, rng)[:, support]
            xs[m] = x
            ys[m] = model.sample(x, beta, rng)
    profile = plugin_sequence_mi((xs, ys), range(k), range(j), model, rng)
    ses = [e.std_error for e in profile.per_step]
    se = math.sqrt(sum(s * s for s in ses)) / len(ses)
    return MiEstimate(profile.average, "plug-in", samples, se)


@dataclass
class ExperimentReport:
    config: dict
    rows: list
    metadata: dict

    def to_dict(self) -> dict:
        return {"config": self.config, "rows": self.rows, "metadata": self.metadata}

    def to_json(self) -> str:
        return canonical_json(self.to_dict())

    def to_csv(self) -> str:
        return rows_to_csv(self.rows)


CSV_COLUMNS = (
    "t", "snr", "seed", "trials", "error_count", "empirical_pe", "pe_low", "pe_high",
    "fano_bound", "fano_consistent", "mi", "mi_method", "mi_std_error", "bound_t",
    "cs_feasible", "mean_tests_used",
)


def rows_to_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        mi = row.get("mi") or {}
        writer.writerow({
            "t": row["t"],
            "snr": row.get("snr", ""),
            "seed": row["seed"],
            "trials": row["trials"],
            "error_count": row["error_count"],
            "empirical_pe": row["empirical_pe"],
            "pe_low": row["pe_interval"][0],
            "pe_high": row["pe_interval"][1],
            "fano_bound": row.get("fano_bound", ""),
            "fano_consistent": row.get("fano_consistent", ""),
            "mi": mi.get("value", ""),
            "mi_method": mi.get("method", ""),
            "mi_std_error": mi.get("std_error", ""),
            "bound_t": (row.get("bound_t") or {}).get("t_bound", ""),
            "cs_feasible": row.get("cs_feasible", ""),
            "mean_tests_used": row.get("mean_tests_used", ""),
        })
    return buf.getvalue()


def _row(config, model, t, row_seed, errors, used) -> dict:
    n_trials = config.trials
    lo, hi = wilson_interval(errors, n_trials)
    pe = errors / n_trials
    row = {
        "t": t,
        "seed": row_seed,
        "trials": n_trials,
        "error_count": errors,
        "empirical_pe": pe,
        "pe_interval": [lo, hi],
        "revealed_size": config.revealed_size,
    }
    if hasattr(model, "snr"):
        row["snr"] = model.snr
    mi = _mi_for_row(config, model, t, row_seed)
    if mi is not None:
        j = config.revealed_size
        fano = fano_error_lower_bound(t, max(mi.value, 0.0), config.n, config.k, j)
        half = (hi - lo) / 2
        row["mi"] = mi.to_dict()
        row["fano_bound"] = fano
        row["fano_consistent"] = pe >= fano - 3 * half
        dims = ProblemDims(config.n, config.k, candidate_cap=None)
        excerpt = bound_term(dims, j, max(mi.value, 0.0), config.bound_form).to_dict()
        excerpt["form"] = config.bound_form
        row["bound_t"] = excerpt
    if isinstance(model, LinearCsModel):
        row["cs_feasible"] = cs_feasibility(t, model.snr, config.n, config.k, config.bound_form).feasible
    if config.strategy["name"] == "binary_splitting":
        row["mean_tests_used"] = used / n_trials
    return row


def run_trials(config: ExperimentConfig, workers: int | None = None) -> ExperimentReport:
    """Estimate P_e for every T in ``config.t`` and attach MI and bound values."""
    started = time.perf_counter()
    model = model_from_dict(config.model)
    workers = worker_count() if workers is None else workers
    pool = ProcessPoolExecutor(workers) if workers > 1 else None
    rows = []
    try:
        for i, t in enumerate(config.t):
            row_seed = config.seed + i
            try:
                errors, used = _count_errors(config, t, row_seed, pool, workers)
            except SparseBoundError as exc:
                raise type(exc)(f"{exc} (row seed {row_seed}, T={t})") from exc
            rows.append(_row(config, model, t, row_seed, errors, used))
    finally:
        if pool is not None:
            pool.shutdown()
    metadata = {
        "config_hash": config.digest(),
        "version": __version__,
        "wall_time_s": time.perf_counter() - started,
    }
    return ExperimentReport(config.to_dict(), rows, metadata)


def sweep(
    config: ExperimentConfig, param: str, values: Sequence, workers: int | None = None
) -> ExperimentReport:
    """Run ``config`` at every grid value of ``param`` ("t" or "snr").

    Grid point ``i`` uses seed ``config.seed + i``.
    """
    values = list(values)
    if not values:
        raise ConfigError("sweep range is empty")
    if param not in ("t", "snr"):
        raise ConfigError(f"can only sweep 't' or 'snr', got {param!r}")
    if param == "snr" and "snr" not in config.model:
        raise ConfigError(f"model {config.model.get('name')!r} has no snr to sweep")
    if param == "snr" and len(config.t) != 1:
        raise ConfigError("an snr sweep needs a single T")
    started = time.perf_counter()
    rows = []
    for i, v in enumerate(values):
        if param == "t":
            point = replace(config, t=(int(v),), seed=config.seed + i)
        else:
            point = replace(config, model={**config.model, "snr": float(v)}, seed=config.seed + i)
        rows.extend(run_trials(point, workers).rows)
    metadata = {
        "config_hash": config.digest(),
        "version": __version__,
        "sweep": {"param": param, "values": values},
        "wall_time_s": time.perf_counter() - started,
    }
    return ExperimentReport(config.to_dict(), rows, metadata)


def compare_adaptive_gap(
    nonadaptive: ExperimentConfig, adaptive: ExperimentConfig, workers: int | None = None
) -> dict:
    """Error-probability gap (nonadaptive minus adaptive) at matched budgets."""
    for attr in ("n", "k", "model", "trials", "seed", "t"):
        if getattr(nonadaptive, attr) != getattr(adaptive, attr):
            raise DomainError(f"configs differ in {attr}: cannot compare")
    ra = run_trials(nonadaptive, workers)
    rb = run_trials(adaptive, workers)
    rows = []
    for a, b in zip(ra.rows, rb.rows):
        pa, pb, n = a["empirical_pe"], b["empirical_pe"], nonadaptive.trials
        gap = pa - pb
        se = math.sqrt(pa * (1 - pa) / n + pb * (1 - pb) / n)
        rows.append({
            "t": a["t"],
            "nonadaptive_pe": pa,
            "adaptive_pe": pb,
            "gap": gap,
            "gap_interval": [gap - Z95 * se, gap + Z95 * se],
            "nonadaptive_fano_bound": a.get("fano_bound"),
            "adaptive_fano_bound": b.get("fano_bound"),
            "nonadaptive_bound_t": a.get("bound_t"),
            "adaptive_bound_t": b.get("bound_t"),
        })
    return {
        "nonadaptive": ra.to_dict(),
        "adaptive": rb.to_dict(),
        "rows": rows,
    }


def strip_wall_time(obj):
    """Copy of a report with every ``wall_time_s`` entry removed."""
    if isinstance(obj, dict):
        return {k: strip_wall_time(v) for k, v in obj.items() if k != "wall_time_s"}
    if isinstance(obj, list):
        return [strip_wall_time(v) for v in obj]
    return obj

