"""Sample-complexity lower bounds and the finite Fano error bound.

Two forms are offered throughout:

``asymptotic``
    ``T >= log C(N-j, K-j) / I_j``, maximised over the revealed size j.
``finite-fano``
    Keeps the one-bit slack from bounding the entropy of the error event,
    ``T >= (log C(N-j, K-j) - ln 2) / I_j``. This is the form that holds as
    a literal inequality at finite N, so experiments are checked against it.

A bound that cannot be met because the information is zero while something
remains to be identified is reported as :data:`UNBOUNDED`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .core import LN2, ProblemDims, log_binom
from .errors import DomainError
from .infotheory import SequenceMiProfile, _half_log1p

FORMS = ("asymptotic", "finite-fano")
UNBOUNDED = math.inf
DEFAULT_T_CAP = 10**7


def _slack(form: str) -> float:
    if form not in FORMS:
        raise DomainError(f"form must be one of {FORMS}, got {form!r}")
    return LN2 if form == "finite-fano" else 0.0


def _json_number(x: float):
    return "unbounded" if x == math.inf else x


@dataclass(frozen=True)
class BoundTerm:
    j: int
    numerator: float
    mi: float
    t_bound: float

    def to_dict(self) -> dict:
        return {
            "j": self.j,
            "numerator": self.numerator,
            "mi": self.mi,
            "t_bound": _json_number(self.t_bound),
        }


@dataclass(frozen=True)
class BoundReport:
    per_subset_terms: tuple[BoundTerm, ...]
    form: str
    overall: float = field(init=False)
    argmax_j: int = field(init=False)

    def __post_init__(self):
        best = max(self.per_subset_terms, key=lambda term: term.t_bound)
        object.__setattr__(self, "overall", best.t_bound)
        object.__setattr__(self, "argmax_j", best.j)

    def to_dict(self, units: str = "nats") -> dict:
        scale = 1.0 if units == "nats" else 1.0 / LN2
        terms = []
        for term in self.per_subset_terms:
            d = term.to_dict()
            d["numerator"] *= scale
            d["mi"] *= scale
            terms.append(d)
        return {
            "form": self.form,
            "overall": _json_number(self.overall),
            "argmax_j": self.argmax_j,
            "per_subset_terms": terms,
            "units": units,
        }


def bound_term(dims: ProblemDims, j: int, mi: float, form: str = "asymptotic") -> BoundTerm:
    """One term of the maximisation: the T needed to learn the K-j unrevealed items."""
    slack = _slack(form)
    k = dims.sparsity
    if not 0 <= j < k:
        raise DomainError(f"revealed size j must lie in [0, {k}), got {j}")
    if not mi >= 0:
        raise DomainError(f"mutual information must be nonnegative, got {mi}")
    numerator = log_binom(dims.n_vars - j, k - j)
    effective = max(numerator - slack, 0.0)
    if effective == 0.0:
        t = 0.0
    elif mi == 0.0:
        t = UNBOUNDED
    else:
        t = effective / mi
    return BoundTerm(j, numerator, float(mi), t)


def nonadaptive_lower_bound(
    dims: ProblemDims, mi_per_subset: Mapping[int, float], form: str = "asymptotic"
) -> BoundReport:
    """Lower bound on T for IID designs from I_j, j = 0..K-1."""
    k = dims.sparsity
    missing = [j for j in range(k) if j not in mi_per_subset]
    if missing:
        raise DomainError(f"mutual information missing for revealed sizes {missing}")
    terms = tuple(bound_term(dims, j, float(mi_per_subset[j]), form) for j in range(k))
    return BoundReport(terms, form)


def adaptive_lower_bound(
    dims: ProblemDims,
    avg_mi_per_subset: Mapping[int, float | SequenceMiProfile],
    form: str = "asymptotic",
) -> BoundReport:
    """Lower bound on T for adaptive designs from the per-sequence average MI."""
    averages = {
        j: v.average if isinstance(v, SequenceMiProfile) else v
        for j, v in avg_mi_per_subset.items()
    }
    return nonadaptive_lower_bound(dims, averages, form)


def binary_output_bound(dims: ProblemDims, form: str = "asymptotic") -> BoundReport:
    """Bound for binary-output models, where every I_j is at most ln 2.

    In asymptotic form this is ``log2 C(N, K)`` tests, the constant-explicit
    version of the ``K log(N/K)`` scaling for group testing and 1-bit CS.
    """
    return adaptive_lower_bound(dims, {j: LN2 for j in range(dims.sparsity)}, form)


def fano_error_lower_bound(t: int, avg_mi: float, n: int, k: int, j: int) -> float:
    """``max(0, 1 - (T * avg_mi + ln 2) / log C(N-j, K-j))``."""
    if t < 0:
        raise DomainError(f"T must be nonnegative, got {t}")
    if not avg_mi >= 0:
        raise DomainError(f"average MI must be nonnegative, got {avg_mi}")
    if not 1 <= k <= n:
        raise DomainError(f"need 1 <= K <= N, got N={n}, K={k}")
    if not 0 <= j < k:
        raise DomainError(f"revealed size j must lie in [0, {k}), got {j}")
    h = log_binom(n - j, k - j)
    if h == 0.0:
        return 0.0
    return max(0.0, 1.0 - (t * avg_mi + LN2) / h)


def circulant_eigenvalues(d: int, diag: float, rho: float, tol: float = 1e-12) -> list[float]:
    """Eigenvalues of the d x d matrix with constant diagonal and off-diagonal.

    The all-ones direction carries ``diag + (d-1) rho``; the remaining d-1
    Fourier directions carry ``diag - rho``.
    """
    if int(d) != d or d < 1:
        raise DomainError(f"dimension must be a positive integer, got {d}")
    if d == 1:
        if diag < -tol:
            raise DomainError(f"eigenvalue 0 is negative: {diag}")
        return [float(diag)]
    first = diag + (d - 1) * rho
    rest = diag - rho
    scale = tol * max(1.0, abs(diag), abs(rho) * d)
    if first < -scale:
        raise DomainError(f"eigenvalue 0 (all-ones direction) is negative: {first}")
    if rest < -scale:
        raise DomainError(f"eigenvalues 1..{d - 1} are negative: {rest}")
    return [float(first)] + [float(rest)] * (d - 1)


@dataclass(frozen=True)
class PowerAllocation:
    weights: tuple[float, ...]

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        if not w:
            raise DomainError("an allocation needs at least one step")
        if any(x < 0 for x in w) or abs(math.fsum(w) - 1.0) > 1e-12:
            raise DomainError("allocation weights must be nonnegative and sum to 1")
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, t: int) -> "PowerAllocation":
        return cls((1.0 / t,) * t)

    def __len__(self):
        return len(self.weights)


def sequence_mi_cap(snr: float, n: int, k: int, j: int, allocation: PowerAllocation) -> float:
    """Average over steps of the per-step linear CS cap under ``allocation``."""
    if not snr >= 0:
        raise DomainError(f"snr must be nonnegative, got {snr}")
    if not 1 <= k <= n or not 0 <= j < k:
        raise DomainError(f"invalid (N, K, j) = ({n}, {k}, {j})")
    per_step = _half_log1p(snr, k, j, n, allocation.weights)
    return math.fsum(per_step) / len(allocation)


@dataclass(frozen=True)
class FeasibilityTerm:
    i: int
    lhs: float
    rhs: float
    satisfied: bool

    def to_dict(self):
        return {"i": self.i, "lhs": self.lhs, "rhs": self.rhs, "satisfied": self.satisfied}


@dataclass(frozen=True)
class CsFeasibilityReport:
    t: int
    snr: float
    per_i_terms: tuple[FeasibilityTerm, ...]
    form: str
    feasible: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "feasible", all(term.satisfied for term in self.per_i_terms))

    def to_dict(self):
        return {
            "t": self.t,
            "snr": self.snr,
            "form": self.form,
            "feasible": self.feasible,
            "per_i_terms": [term.to_dict() for term in self.per_i_terms],
            "units": "nats",
        }


def _cs_lhs(t, snr, n, k, i):
    t = np.asarray(t, dtype=float)
    return t * 0.5 * np.log1p(snr * i * n / (k * t))


def cs_feasibility(t: int, snr: float, n: int, k: int, form: str = "asymptotic") -> CsFeasibilityReport:
    """Necessary condition on (T, SNR) for linear CS, checked for every i = K - j.

    Requires ``T * 0.5 ln(1 + snr i N / (K T)) >= log C(N-K+i, i)`` (minus
    ln 2 in finite form) for all i in 1..K.
    """
    slack = _slack(form)
    if int(t) != t or t < 1:
        raise DomainError(f"T must be a positive integer, got {t}")
    if not snr > 0 or not math.isfinite(snr):
        raise DomainError(f"snr must be positive and finite, got {snr}")
    if not 1 <= k <= n:
        raise DomainError(f"need 1 <= K <= N, got N={n}, K={k}")
    terms = []
    for i in range(1, k + 1):
        lhs = float(_cs_lhs(t, snr, n, k, i))
        rhs = log_binom(n - k + i, i) - slack
        terms.append(FeasibilityTerm(i, lhs, rhs, lhs >= rhs))
    return CsFeasibilityReport(int(t), float(snr), tuple(terms), form)


def min_feasible_t(
    snr: float, n: int, k: int, form: str = "asymptotic", cap: int = DEFAULT_T_CAP
) -> int | None:
    """Smallest T <= ``cap`` passing :func:`cs_feasibility`, or ``None``.

    Every left-hand side increases with T, so feasibility is monotone and a
    doubling search followed by bisection finds the threshold.
    """
    def ok(t):
        return cs_feasibility(t, snr, n, k, form).feasible

    if not ok(cap):
        return None
    hi = 1
    while not ok(hi):
        hi = min(2 * hi, cap)
    lo = hi // 2  # infeasible, or 0
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def snr_necessary(n: int, k: int, form: str = "asymptotic") -> float:
    """SNR below which no T satisfies the i = 1 feasibility condition.

    As T grows the i = 1 left-hand side tends to ``snr N / (2K)``, giving
    ``2K (ln(N-K+1) - slack) / N``. The factor 2 and the N-K+1 argument come
    from this instantiation; the scaling is ``K log N / N``.
    """
    slack = _slack(form)
    if not 1 <= k < n:
        raise DomainError(f"need 1 <= K < N, got N={n}, K={k}")
    return max(2.0 * k * (math.log(n - k + 1) - slack) / n, 0.0)


def uniform_allocation_cap(snr: float, n: int, k: int, j: int, t: int) -> float:
    """``0.5 ln(1 + snr (K-j) N / (K T))``, the cap under equal per-step power."""
    return float(_half_log1p(snr, k, j, n, 1.0 / t))


def dirichlet_allocations(t: int, count: int, rng: np.random.Generator) -> Sequence[PowerAllocation]:
    raw = rng.dirichlet(np.ones(t), size=count)
    raw /= raw.sum(axis=1, keepdims=True)
    return [PowerAllocation(tuple(row)) for row in raw]
