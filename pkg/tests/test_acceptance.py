"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line."""

import math
import time

import numpy as np
import pytest

from sparsebound.bounds import (
    PowerAllocation,
    adaptive_lower_bound,
    circulant_eigenvalues,
    cs_feasibility,
    dirichlet_allocations,
    min_feasible_t,
    nonadaptive_lower_bound,
    sequence_mi_cap,
    snr_necessary,
)
from sparsebound.core import LN2, MeasurementHistory, ProblemDims, make_rng
from sparsebound.decoders import comp_decode, ml_decode
from sparsebound.harness import ExperimentConfig, canonical_json, run_trials, strip_wall_time
from sparsebound.infotheory import (
    DiscreteDesign,
    GaussianDesign,
    SequenceMiProfile,
    binary_channel_mi_mc,
    exact_conditional_mi,
    linear_cs_mi_closed_form,
    linear_cs_mi_mc,
    plugin_sequence_mi,
)
from sparsebound.models import GroupTestingModel, OneBitCsModel
from sparsebound.strategies import BinarySplittingStrategy
from sparsebound.verify import run_verify

SEED = 20240611


@pytest.fixture(scope="module")
def verify_run():
    started = time.perf_counter()
    report = run_verify(SEED)
    return report, time.perf_counter() - started


def test_fano_consistency(verify_run, criterion):
    report, elapsed = verify_run
    cells = report["cells"]
    bad = [c for c in cells if not c["empirical_pe"] >= c["fano_bound"] - 3 * c["wilson_half_width"]]
    shape_ok = len(cells) == 48 and {c["j"] for c in cells} == {0, 1} and {c["p"] for c in cells} == {0.3, 0.5}
    ok = not bad and shape_ok and elapsed < 120 and all(c["trials"] == 2000 for c in cells)
    criterion(1, "Fano consistency", ok, f"{len(cells)} cells, {len(bad)} violations, {elapsed:.1f}s")
    assert ok


def _splitting_traces(n, k, support, t, m, rng):
    strategy = BinarySplittingStrategy(ProblemDims(n, k, candidate_cap=None), GroupTestingModel())
    histories = []
    for _ in range(m):
        h = MeasurementHistory(n)
        for _ in range(t):
            x = strategy.next_design(h, rng)
            h.append(x, int(x[list(support)].any()))
        histories.append(h)
    return histories


def test_binary_cap(verify_run, criterion):
    report, _ = verify_run
    estimates = [(c["mi"], 0.0) for c in report["cells"]]
    rng = make_rng(SEED, 2)
    for k in range(1, 6):
        for j in range(k):
            for p in (0.1, 0.3, 0.5, 0.9):
                estimates.append((exact_conditional_mi(GroupTestingModel(0.05), DiscreteDesign.bernoulli(p), k, j).value, 0.0))
            beta = rng.choice([-1.0, 1.0], k)
            for snr in (0.1, 10.0, 1e4):
                est = binary_channel_mi_mc(
                    OneBitCsModel(snr), GaussianDesign.isotropic(k, 1.0), k, j, beta, 20_000, rng
                )
                estimates.append((est.value, est.std_error))
    profile = plugin_sequence_mi(_splitting_traces(16, 2, (4, 9), 8, 5000, rng), (4, 9), (), GroupTestingModel(), rng)
    estimates.extend((e.value, e.std_error) for e in profile.per_step)
    over = [v for v, se in estimates if v > LN2 + 3 * se]

    checks = []
    for n, k, approx in ((8, 2, 4.807), (1024, 10, 78.2)):
        oracle = math.log2(math.comb(n, k))
        got = adaptive_lower_bound(ProblemDims(n, k, candidate_cap=None), {j: LN2 for j in range(k)}).overall
        checks.append(abs(got - oracle) <= 1e-9 * oracle and got >= oracle * (1 - 1e-9) and abs(got - approx) < 0.06)
    ok = not over and all(checks)
    criterion(
        2, "binary cap", ok,
        f"{len(estimates)} MI estimates, {len(over)} above ln 2 + 3se; bounds {math.log2(28):.3f}, "
        f"{math.log2(math.comb(1024, 10)):.3f} tests",
    )
    assert ok


def test_adaptive_achievability(criterion):
    config = ExperimentConfig(
        n=1024, k=10, model={"name": "group_testing", "crossover": 0.0},
        strategy={"name": "binary_splitting"}, decoder="splitting", t=(400,),
        trials=1000, seed=SEED, mi_estimation={"method": "none"},
    )
    row = run_trials(config).rows[0]
    mean = row["mean_tests_used"]
    ok = row["error_count"] == 0 and 78.2 <= mean <= 78.2 + 2 * 10
    criterion(3, "adaptive achievability", ok, f"{row['error_count']} errors / 1000, mean tests {mean:.2f}")
    assert ok


def test_circulant_eigenstructure(criterion):
    rng = make_rng(SEED, 4)
    worst = 0.0
    for _ in range(100):
        d = int(rng.integers(1, 9))
        diag = float(rng.uniform(0.0, 10.0))
        rho = float(rng.uniform(-diag / max(d - 1, 1), diag))
        got = np.sort(circulant_eigenvalues(d, diag, rho))
        want = np.linalg.eigvalsh(np.full((d, d), rho) + (diag - rho) * np.eye(d))
        worst = max(worst, float(np.max(np.abs(got - want))))
    ok = worst <= 1e-10
    criterion(4, "circulant eigenstructure", ok, f"max abs deviation {worst:.2e} over 100 cases")
    assert ok


def _random_covariance(k, diag, rng):
    if rng.random() < 0.5:
        rho = float(rng.uniform(-diag / max(k - 1, 1), diag)) if k > 1 else 0.0
        return GaussianDesign.circulant(k, diag, rho).covariance
    a = rng.normal(size=(k, k + 1))
    cov = a @ a.T
    scale = np.sqrt(np.diag(cov))
    return diag * cov / np.outer(scale, scale)


def test_jensen_dominance(criterion):
    rng = make_rng(SEED, 5)
    worst = -math.inf
    violations = 0
    for _ in range(50):
        snr = float(rng.uniform(0.1, 10.0))
        k = int(rng.integers(1, 7))
        j = int(rng.integers(0, k))
        n = int(rng.integers(k, 65))
        power = float(rng.uniform(0.01, 1.0))
        cov = _random_covariance(k, n * power / k, rng)
        est = linear_cs_mi_mc(snr, cov, j, 100_000, rng)
        cap = linear_cs_mi_closed_form(snr, n, k, j, power)
        # K - j = 1 has no sign randomness: equality up to rounding, se = 0
        tol = 3 * est.std_error + 1e-12 * max(1.0, cap)
        worst = max(worst, est.value - cap - 3 * est.std_error)
        violations += est.value > cap + tol
    ok = violations == 0
    criterion(5, "Jensen dominance and rho-independence", ok, f"{violations} violations, max(mc - cap - 3se) = {worst:.2e}")
    assert ok


def test_uniform_allocation_optimality(criterion):
    rng = make_rng(SEED, 6)
    violations = 0
    for t in (1, 4, 16, 64):
        for gain in (0.1, 1.0, 10.0, 100.0):
            # gain = SNR N / K with N = K, j = 0
            uniform = sequence_mi_cap(gain, 8, 8, 0, PowerAllocation.uniform(t))
            for alloc in dirichlet_allocations(t, 1000, rng):
                violations += sequence_mi_cap(gain, 8, 8, 0, alloc) > uniform
    ok = violations == 0
    criterion(6, "uniform allocation optimality", ok, f"{violations} violations over 16000 allocations")
    assert ok


def test_reduction_identity(criterion):
    rng = make_rng(SEED, 7)
    mismatches = 0
    for _ in range(100):
        n = int(rng.integers(2, 5000))
        k = int(rng.integers(1, min(n, 40) + 1))
        mis = {j: float(rng.uniform(0.0, 3.0)) for j in range(k)}
        steps = int(rng.integers(1, 200))
        form = ("asymptotic", "finite-fano")[int(rng.integers(0, 2))]
        dims = ProblemDims(n, k, candidate_cap=None)
        profiles = {j: SequenceMiProfile.constant(v, steps, "plug-in") for j, v in mis.items()}
        a = adaptive_lower_bound(dims, profiles, form)
        b = nonadaptive_lower_bound(dims, mis, form)
        mismatches += canonical_json(a.to_dict()) != canonical_json(b.to_dict()) or a != b
    ok = mismatches == 0
    criterion(7, "reduction identity", ok, f"{mismatches} mismatches over 100 inputs")
    assert ok


def test_cs_feasibility_region(criterion):
    n, k = 64, 32
    details = []
    ok = True
    for form in ("asymptotic", "finite-fano"):
        threshold = snr_necessary(n, k, form)
        low = 0.97 * threshold
        # every lhs increases with T, so infeasibility at the endpoint covers 1..10^6
        grid = np.unique(np.logspace(0, 6, 400).astype(int))
        lhs = np.array([[term.lhs for term in cs_feasibility(int(t), low, n, k, form).per_i_terms] for t in grid])
        monotone = bool(np.all(np.diff(lhs, axis=0) >= 0))
        endpoint = not cs_feasibility(10**6, low, n, k, form).feasible
        t_all = np.arange(1, 10**6 + 1, dtype=float)
        i1 = t_all * 0.5 * np.log1p(low * n / (k * t_all))
        rhs1 = cs_feasibility(1, low, n, k, form).per_i_terms[0].rhs
        exhaustive = bool(np.all(i1 < rhs1))
        snrs = threshold * np.linspace(1.5, 15.0, 10)
        ts = [min_feasible_t(float(s), n, k, form) for s in snrs]
        finite = ts[0] is not None and all(t is not None for t in ts)
        nonincreasing = finite and all(b <= a for a, b in zip(ts, ts[1:]))
        ok &= monotone and endpoint and exhaustive and finite and nonincreasing
        details.append(f"{form}: threshold {threshold:.4f}, min T at 1.5x = {ts[0]}")
    criterion(8, "CS feasibility region", ok, "; ".join(details))
    assert ok


def test_decoder_oracle_equivalence(criterion):
    rng = make_rng(SEED, 9)
    compared = mismatched = 0
    for _ in range(1000):
        n = int(rng.integers(2, 13))
        k = int(rng.integers(1, min(3, n) + 1))
        dims = ProblemDims(n, k)
        support = np.sort(rng.choice(n, k, replace=False))
        p = float(rng.uniform(0.05, 0.6))
        h = MeasurementHistory(n)
        for _ in range(int(rng.integers(0, 3 * n + 1))):
            x = rng.random(n) < p
            h.append(x, int(x[support].any()))
        c = comp_decode(h, dims)
        if c is not None:
            compared += 1
            mismatched += c != ml_decode(h, GroupTestingModel(), dims)
    ok = mismatched == 0 and compared > 0
    criterion(9, "COMP/ML oracle equivalence", ok, f"{compared} unambiguous instances, {mismatched} mismatches")
    assert ok


def test_reproducibility(verify_run, criterion):
    first, _ = verify_run
    second = run_verify(SEED)
    a = canonical_json(strip_wall_time(first))
    b = canonical_json(strip_wall_time(second))
    ok = a == b and first["metadata"]["wall_time_s"] >= 0
    criterion(10, "reproducibility", ok, f"{len(a)} bytes, identical={a == b}")
    assert ok
