"""Conditional mutual information I(X_{S'}; Y | X_{S~}, beta_S).

Coordinates of the on-support design are ordered so that the first
``s_tilde_size`` of them form the revealed subset S~ and the rest form
S' = S minus S~. Every value here is in nats.

Estimators:

* :func:`exact_conditional_mi` enumerates a finite design alphabet.
* :func:`binary_channel_mi_mc` handles 1-bit CS with Gaussian designs.
* :func:`linear_cs_mi_closed_form` is the power-constrained cap for linear CS,
  and :func:`linear_cs_mi_mc` the Gaussian-design value it caps.
* :func:`plugin_sequence_mi` estimates per-step values from simulated traces,
  which is the only route for adaptive strategies.

The plug-in estimator carries no bias correction. Its bias is upward and of
order (alphabet size) / M, negligible at the sample sizes used here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Sequence

import numpy as np
from scipy.special import ndtr

from .core import LN2
from .errors import DomainError, ResourceCapError, UnsupportedOperationError
from .models import ObservationModel, OneBitCsModel

CLAMP_TOLERANCE = 1e-9
ENUMERATION_CAP = 2**22
BOOTSTRAP_RESAMPLES = 200
METHODS = ("exact-enumeration", "closed-form", "plug-in", "monte-carlo")


@dataclass(frozen=True)
class MiEstimate:
    value: float
    method: str
    samples: int | None = None
    std_error: float | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise DomainError(f"unknown MI method {self.method!r}")
        v = float(self.value)
        if -CLAMP_TOLERANCE <= v < 0:
            v = 0.0
        elif v < 0 and self.std_error is None:
            raise DomainError(f"deterministic MI value is negative: {v}")
        object.__setattr__(self, "value", v)

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "method": self.method,
            "samples": self.samples,
            "std_error": self.std_error,
            "units": "nats",
        }


@dataclass(frozen=True)
class SequenceMiProfile:
    per_step: tuple[MiEstimate, ...]
    average: float = field(init=False)

    def __post_init__(self):
        values = [e.value for e in self.per_step]
        if not values:
            raise DomainError("a sequence profile needs at least one step")
        # a constant profile averages to exactly that constant
        if min(values) == max(values):
            avg = values[0]
        else:
            avg = math.fsum(values) / len(values)
        object.__setattr__(self, "average", avg)

    @classmethod
    def constant(cls, value: float, steps: int, method: str = "exact-enumeration"):
        return cls(tuple(MiEstimate(value, method) for _ in range(steps)))

    def to_dict(self) -> dict:
        return {
            "per_step": [e.to_dict() for e in self.per_step],
            "average": self.average,
            "units": "nats",
        }


@dataclass(frozen=True)
class DiscreteDesign:
    """IID product design over a finite alphabet on each support coordinate."""

    alphabet: tuple[float, ...]
    pmf: tuple[float, ...]

    def __post_init__(self):
        if len(self.alphabet) != len(self.pmf) or not self.alphabet:
            raise DomainError("alphabet and pmf must be nonempty and of equal length")
        if any(p < 0 for p in self.pmf) or abs(math.fsum(self.pmf) - 1.0) > 1e-12:
            raise DomainError(f"pmf must be nonnegative and sum to 1, got {self.pmf}")

    @classmethod
    def bernoulli(cls, p: float) -> "DiscreteDesign":
        if not 0.0 <= p <= 1.0:
            raise DomainError(f"Bernoulli parameter must lie in [0, 1], got {p}")
        return cls((0.0, 1.0), (1.0 - p, p))


@dataclass(frozen=True)
class GaussianDesign:
    """Zero-mean jointly Gaussian design on the K support coordinates."""

    covariance: np.ndarray

    def __post_init__(self):
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        if cov.shape[0] != cov.shape[1]:
            raise DomainError(f"covariance must be square, got {cov.shape}")
        if not np.allclose(cov, cov.T, atol=1e-12, rtol=0):
            raise DomainError("covariance must be symmetric")
        if cov.size and np.linalg.eigvalsh(cov).min() < -1e-10 * max(1.0, np.abs(cov).max()):
            raise DomainError("covariance must be positive semidefinite")
        object.__setattr__(self, "covariance", cov)

    @classmethod
    def isotropic(cls, k: int, variance: float) -> "GaussianDesign":
        return cls(variance * np.eye(k))

    @classmethod
    def circulant(cls, k: int, diag: float, rho: float) -> "GaussianDesign":
        return cls(np.full((k, k), rho) + (diag - rho) * np.eye(k))


def binary_entropy(p):
    """``-p ln p - (1-p) ln(1-p)`` with ``0 ln 0 = 0``; vectorised."""
    arr = np.asarray(p, dtype=float)
    if np.any((arr < 0) | (arr > 1)) or np.any(np.isnan(arr)):
        raise DomainError("binary_entropy needs probabilities in [0, 1]")
    q = 1.0 - arr
    h = -(np.where(arr > 0, arr * np.log(np.where(arr > 0, arr, 1.0)), 0.0)
          + np.where(q > 0, q * np.log(np.where(q > 0, q, 1.0)), 0.0))
    return h if h.ndim else float(h)


def _check_split(k: int, s_tilde_size: int):
    if not 0 <= s_tilde_size < k:
        raise DomainError(f"need 0 <= |S~| < K, got |S~|={s_tilde_size}, K={k}")


def exact_conditional_mi(
    model: ObservationModel,
    dist: DiscreteDesign,
    k: int,
    s_tilde_size: int,
    beta: Sequence[float] | None = None,
    cap: int = ENUMERATION_CAP,
) -> MiEstimate:
    """Exact I(X_{S'}; Y | X_{S~}, beta_S) for a binary channel by enumeration."""
    if not isinstance(dist, DiscreteDesign):
        raise UnsupportedOperationError("exact enumeration needs a discrete design")
    if model.output_alphabet != "binary":
        raise UnsupportedOperationError(f"{model.name} does not have a binary output")
    _check_split(k, s_tilde_size)
    a = len(dist.alphabet)
    if a**k > cap:
        raise ResourceCapError(f"alphabet^K = {a}^{k} exceeds enumeration cap {cap}")
    beta = np.ones(k) if beta is None else np.asarray(beta, dtype=float)
    if beta.shape != (k,):
        raise DomainError(f"beta_S must have length {k}")

    configs = np.array(list(product(dist.alphabet, repeat=k)), dtype=float)
    weights = np.prod(np.array(list(product(dist.pmf, repeat=k))), axis=1)
    p1 = np.asarray(model.positive_probability(configs, beta), dtype=float)

    h_given_all = float(np.dot(weights, binary_entropy(p1)))
    # product order puts the S~ coordinates in the slow-varying positions
    w = weights.reshape(a**s_tilde_size, a ** (k - s_tilde_size))
    joint1 = (w * p1.reshape(w.shape)).sum(axis=1)
    mass = w.sum(axis=1)
    live = mass > 0
    cond = np.clip(joint1[live] / mass[live], 0.0, 1.0)
    h_given_revealed = float(np.dot(mass[live], binary_entropy(cond)))
    return MiEstimate(h_given_revealed - h_given_all, "exact-enumeration")


def _bootstrap_mean_se(values: np.ndarray, rng: np.random.Generator) -> float:
    n = len(values)
    idx = rng.integers(0, n, size=(BOOTSTRAP_RESAMPLES, n))
    means = values[idx].mean(axis=1)
    return float(means.std(ddof=1))


def _conditional_gaussian(cov: np.ndarray, s_tilde_size: int):
    """Regression matrix and Schur-complement covariance of X_{S'} given X_{S~}."""
    j = s_tilde_size
    a = cov[:j, :j]
    b = cov[:j, j:]
    c = cov[j:, j:]
    if j == 0:
        return np.zeros((0, cov.shape[0])), c
    gain = np.linalg.pinv(a, hermitian=True) @ b  # E[X_{S'} | x_{S~}] = x_{S~} @ gain
    schur = c - b.T @ gain
    return gain, 0.5 * (schur + schur.T)


def binary_channel_mi_mc(
    model: OneBitCsModel,
    dist: GaussianDesign,
    k: int,
    s_tilde_size: int,
    beta: Sequence[float],
    samples: int,
    rng: np.random.Generator,
) -> MiEstimate:
    """Monte-Carlo I(X_{S'}; Y | X_{S~}, beta_S) for 1-bit CS under a Gaussian design.

    Both conditional output probabilities are exact for each sampled design:
    given x_{S~}, the pre-quantizer value is Gaussian, so P(Y=1 | x_{S~}) is a
    probit of the conditional mean and variance. Only the outer expectation
    over the design is sampled.
    """
    if not isinstance(dist, GaussianDesign):
        raise UnsupportedOperationError("binary_channel_mi_mc needs a Gaussian design")
    if not isinstance(model, OneBitCsModel):
        raise UnsupportedOperationError("binary_channel_mi_mc is defined for 1-bit CS")
    _check_split(k, s_tilde_size)
    if samples < 1000:
        raise DomainError(f"need at least 1000 samples, got {samples}")
    cov = dist.covariance
    if cov.shape != (k, k):
        raise DomainError(f"covariance must be {k}x{k}, got {cov.shape}")
    if not np.any(cov):
        raise DomainError("degenerate (all-zero) design covariance")
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (k,):
        raise DomainError(f"beta_S must have length {k}")

    j = s_tilde_size
    x = rng.multivariate_normal(np.zeros(k), cov, size=samples, method="eigh")
    full_mean = x @ beta
    h_full = binary_entropy(ndtr(math.sqrt(model.snr) * full_mean))

    gain, schur = _conditional_gaussian(cov, j)
    beta_rev, beta_rest = beta[:j], beta[j:]
    cond_mean = x[:, :j] @ beta_rev + (x[:, :j] @ gain) @ beta_rest
    cond_var = max(float(beta_rest @ schur @ beta_rest), 0.0)
    z = math.sqrt(model.snr) * cond_mean / math.sqrt(1.0 + model.snr * cond_var)
    h_revealed = binary_entropy(ndtr(z))

    diff = h_revealed - h_full
    return MiEstimate(
        float(diff.mean()), "monte-carlo", samples, _bootstrap_mean_se(diff, rng)
    )


def _half_log1p(snr, k, s_tilde_size, n, power):
    return 0.5 * np.log1p(snr * (k - s_tilde_size) * n * np.asarray(power, dtype=float) / k)


def linear_cs_mi_closed_form(snr: float, n: int, k: int, s_tilde_size: int, power: float) -> float:
    """Per-step cap ``0.5 ln(1 + snr (K - |S~|) N P_t / K)``."""
    if not snr >= 0 or not math.isfinite(snr):
        raise DomainError(f"snr must be nonnegative and finite, got {snr}")
    if not 0 < power <= 1:
        raise DomainError(f"per-step power share must lie in (0, 1], got {power}")
    if not 1 <= k <= n:
        raise DomainError(f"need 1 <= K <= N, got N={n}, K={k}")
    _check_split(k, s_tilde_size)
    return float(_half_log1p(snr, k, s_tilde_size, n, power))


def linear_cs_mi_mc(
    snr: float,
    covariance,
    s_tilde_size: int,
    samples: int,
    rng: np.random.Generator,
) -> MiEstimate:
    """Monte-Carlo ``E_beta[0.5 ln(1 + snr beta' Sigma_{S'|S~} beta)]``, Rademacher beta.

    This is the exact per-step value for a jointly Gaussian design with the
    given covariance on the support, conditioning on X_{S~} through the
    Schur complement.
    """
    if not snr > 0:
        raise DomainError(f"snr must be positive, got {snr}")
    dist = covariance if isinstance(covariance, GaussianDesign) else GaussianDesign(covariance)
    cov = dist.covariance
    k = cov.shape[0]
    _check_split(k, s_tilde_size)
    if samples < 1:
        raise DomainError("need at least one sample")
    _, schur = _conditional_gaussian(cov, s_tilde_size)
    signs = rng.choice(np.array([-1.0, 1.0]), size=(samples, k - s_tilde_size))
    quad = np.einsum("si,ij,sj->s", signs, schur, signs)
    vals = 0.5 * np.log1p(snr * np.maximum(quad, 0.0))
    se = _bootstrap_mean_se(vals, rng)
    return MiEstimate(float(vals.mean()), "monte-carlo", samples, se)


def _encode_rows(values: np.ndarray) -> np.ndarray:
    """Map each row of a 2-D array to a dense integer code."""
    if values.shape[1] == 0:
        return np.zeros(values.shape[0], dtype=np.int64)
    _, codes = np.unique(values, axis=0, return_inverse=True)
    return codes.reshape(-1)


def _plugin_cmi_from_counts(counts: np.ndarray) -> float:
    """I(A; Y | C) from a count table indexed ``[c, a, y]``."""
    total = counts.sum()
    p = counts / total
    p_c = p.sum(axis=(1, 2))
    p_cy = p.sum(axis=1)
    p_ca = p.sum(axis=2)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = p * p_c[:, None, None] / (p_ca[:, :, None] * p_cy[:, None, :])
        terms = np.where(p > 0, p * np.log(np.where(p > 0, ratio, 1.0)), 0.0)
    return float(terms.sum())


def plugin_conditional_mi(
    x_revealed, x_rest, y, rng: np.random.Generator | None = None
) -> MiEstimate:
    """Plug-in I(X_{S'}; Y | X_{S~}) from M joint samples of one time step.

    With ``rng`` the standard error comes from multinomial resampling of the
    joint table.
    """
    x_revealed = np.asarray(x_revealed).reshape(len(y), -1)
    x_rest = np.asarray(x_rest).reshape(len(y), -1)
    y = np.asarray(y)
    if np.issubdtype(y.dtype, np.floating) and not np.all(np.isin(y, (0.0, 1.0))):
        raise UnsupportedOperationError("plug-in MI needs a finite output alphabet")
    m = len(y)
    c = _encode_rows(x_revealed)
    a = _encode_rows(x_rest)
    _, yc = np.unique(y, return_inverse=True)
    shape = (c.max() + 1, a.max() + 1, yc.max() + 1)
    flat = np.ravel_multi_index((c, a, yc.reshape(-1)), shape)
    counts = np.bincount(flat, minlength=math.prod(shape)).astype(float)
    value = _plugin_cmi_from_counts(counts.reshape(shape))
    se = None
    if rng is not None:
        boot = rng.multinomial(m, counts / m, size=BOOTSTRAP_RESAMPLES)
        vals = [_plugin_cmi_from_counts(b.reshape(shape).astype(float)) for b in boot]
        se = float(np.std(vals, ddof=1))
    if se is None:
        return MiEstimate(max(value, 0.0), "plug-in", m)
    return MiEstimate(value, "plug-in", m, se)


def plugin_sequence_mi(
    traces,
    support: Sequence[int],
    revealed: Sequence[int],
    model: ObservationModel | None = None,
    rng: np.random.Generator | None = None,
    min_traces: int = 100,
) -> SequenceMiProfile:
    """Per-step plug-in estimates of I(X^(t)_{S'}; Y^(t) | X^(t)_{S~}) and their mean.

    ``traces`` is a list of M :class:`~sparsebound.strategies.MeasurementHistory`
    runs that share the support, the revealed subset and beta_S, or a pair of
    arrays ``(X, Y)`` shaped ``(M, T, N)`` and ``(M, T)``.
    """
    if model is not None and model.output_alphabet != "binary":
        raise UnsupportedOperationError("plug-in sequence MI needs a binary-output model")
    if isinstance(traces, tuple) and len(traces) == 2:
        xs, ys = (np.asarray(v) for v in traces)
    else:
        if len({len(h) for h in traces}) > 1:
            raise DomainError("all traces must have the same length T")
        xs = np.stack([h.designs() for h in traces])
        ys = np.stack([h.outcomes() for h in traces])
    if xs.ndim != 3 or ys.shape != xs.shape[:2]:
        raise DomainError(f"trace shapes do not line up: X {xs.shape}, Y {ys.shape}")
    if xs.shape[0] < min_traces:
        raise DomainError(f"need at least {min_traces} traces, got {xs.shape[0]}")
    if np.issubdtype(xs.dtype, np.floating) and not np.all(xs == np.round(xs)):
        raise UnsupportedOperationError("plug-in MI needs finite-alphabet designs")
    support = list(support)
    revealed = list(revealed)
    rest = [i for i in support if i not in revealed]
    steps = []
    for t in range(xs.shape[1]):
        steps.append(
            plugin_conditional_mi(xs[:, t][:, revealed], xs[:, t][:, rest], ys[:, t], rng)
        )
    return SequenceMiProfile(tuple(steps))


def binary_cap() -> float:
    """Largest possible MI of a binary output, ``ln 2``."""
    return LN2
