"""Measurement strategies X^(t) = f_t(X^(1:t-1), Y^(1:t-1)) and the history they build."""

from __future__ import annotations

import math

import numpy as np
from scipy.special import softmax

from .core import DEFAULT_CANDIDATE_CAP, MeasurementHistory, ProblemDims, candidate_supports
from .decoders import support_log_likelihoods
from .errors import DomainError, UnsupportedOperationError
from .models import GroupTestingModel, LinearCsModel, ObservationModel


def bernoulli_design(n: int, p: float, rng: np.random.Generator) -> np.ndarray:
    """Boolean test vector with IID Bernoulli(p) inclusions."""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"inclusion probability must lie in [0, 1], got {p}")
    return rng.random(n) < p


def gaussian_design(
    n: int,
    k: int,
    power: float,
    rng: np.random.Generator,
    on_support_only: bool = False,
    support_hint=None,
) -> np.ndarray:
    """Gaussian design with total expected power ``n * power``.

    The plain variant draws IID N(0, power) entries. The concentrated variant
    puts all of that power on ``support_hint``, zero elsewhere.
    """
    if power < 0:
        raise DomainError(f"power must be nonnegative, got {power}")
    if not on_support_only:
        return rng.normal(0.0, math.sqrt(power), n)
    if support_hint is None or len(support_hint) == 0:
        raise DomainError("the concentrated design needs a support hint")
    hint = np.asarray(support_hint, dtype=np.int64)
    x = np.zeros(n)
    x[hint] = rng.normal(0.0, math.sqrt(n * power / len(hint)), len(hint))
    return x


class Strategy:
    """Base class. ``next_design`` sees the whole history of the current run.

    A strategy is reset automatically whenever it receives an empty history.
    """

    adaptive = False
    name = "abstract"

    def next_design(self, history: MeasurementHistory, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def design_matrix(self, t: int, rng: np.random.Generator) -> np.ndarray:
        """All T designs at once; only defined for nonadaptive strategies."""
        raise UnsupportedOperationError(f"{self.name} is adaptive")


class BernoulliStrategy(Strategy):
    name = "bernoulli"

    def __init__(self, n: int, p: float):
        if not 0.0 <= p <= 1.0:
            raise DomainError(f"inclusion probability must lie in [0, 1], got {p}")
        self.n, self.p = n, p

    def next_design(self, history, rng):
        return bernoulli_design(self.n, self.p, rng)

    def design_matrix(self, t, rng):
        # same stream as t successive next_design calls
        return rng.random((t, self.n)) < self.p


class GaussianStrategy(Strategy):
    """Nonadaptive IID Gaussian rows; uniform power allocation unless given."""

    name = "gaussian"

    def __init__(self, n: int, k: int, t: int, allocation=None):
        self.n, self.k, self.t = n, k, t
        self.weights = (1.0 / t,) * t if allocation is None else tuple(allocation.weights)
        if len(self.weights) != t:
            raise DomainError("allocation length must equal T")

    def next_design(self, history, rng):
        return gaussian_design(self.n, self.k, self.weights[len(history)], rng)

    def design_matrix(self, t, rng):
        if t != self.t:
            raise DomainError(f"strategy was built for T={self.t}, asked for {t}")
        return np.stack([gaussian_design(self.n, self.k, p, rng) for p in self.weights])


class BinarySplittingStrategy(Strategy):
    """Generalised binary splitting for noiseless group testing.

    With n unresolved items and d unfound defectives: if n <= 2d - 2 test
    items one at a time; otherwise test a group of size 2^a with
    a = floor(log2((n - d + 1) / d)). A negative group is cleared; a positive
    one is bisected down to a single defective. Tests whose outcome is
    already implied by the known count d are skipped. Item order is shuffled
    once per run so that the on-support designs are random.
    """

    adaptive = True
    name = "binary_splitting"

    def __init__(self, dims: ProblemDims, model: ObservationModel | None = None):
        if model is not None and not (
            isinstance(model, GroupTestingModel) and model.crossover == 0
        ):
            raise UnsupportedOperationError("binary splitting needs noiseless group testing")
        self.n, self.k = dims.n_vars, dims.sparsity
        self._gen = None
        self._pending = False
        self.found: list[int] = []
        self.done = False

    def _procedure(self, rng):
        pool = list(rng.permutation(self.n))
        d = self.k
        while d > 0:
            n = len(pool)
            if n == d:
                self.found.extend(pool)
                break
            if n <= 2 * d - 2:
                item = pool.pop(0)
                if (yield [item]):
                    self.found.append(item)
                    d -= 1
                continue
            a = int(math.floor(math.log2((n - d + 1) / d)))
            group = pool[: 2**a]
            # a group covering the whole pool is known to be positive
            if len(group) < n and not (yield group):
                del pool[: len(group)]
                continue
            while len(group) > 1:
                half = group[: len(group) // 2]
                if (yield half):
                    group = half
                else:
                    cleared = set(half)
                    pool = [i for i in pool if i not in cleared]
                    group = group[len(half):]
            pool.remove(group[0])
            self.found.append(group[0])
            d -= 1
        self.done = True

    def next_design(self, history, rng):
        if len(history) == 0 or self._gen is None:
            self.found, self.done, self._pending = [], False, False
            self._gen = self._procedure(rng)
            group = self._advance(None)
        else:
            group = self._advance(int(history.steps[-1][1]) if self._pending else None)
        x = np.zeros(self.n, dtype=bool)
        if group is not None:
            x[group] = True
        return x

    def _advance(self, outcome):
        if self.done:
            self._pending = False
            return None
        try:
            group = next(self._gen) if outcome is None else self._gen.send(bool(outcome))
        except StopIteration:
            self._pending = False
            return None
        self._pending = True
        return group

    def estimate(self) -> tuple[int, ...]:
        if not self.done:
            raise DomainError("binary splitting has not finished; no estimate yet")
        return tuple(sorted(int(i) for i in self.found))


class TwoStageCsStrategy(Strategy):
    """Two-stage adaptive strategy for linear CS under a total power budget.

    Stage 1 spends ``ceil(split * T)`` steps on plain Gaussian rows. Stage 2
    ranks coordinates by their posterior probability of lying in the
    support given the stage-1 data (exhaustive over supports, Rademacher
    beta) and concentrates each remaining row's power on the top ``2K``.
    When C(N, K) exceeds ``exhaustive_cap`` the ranking falls back to the
    matched filter ``|sum_t x_n y_t|``. Every row gets the uniform share 1/T
    of the unit power budget.
    """

    adaptive = True
    name = "two_stage"

    def __init__(
        self,
        dims: ProblemDims,
        snr: float,
        t: int,
        split: float = 0.5,
        exhaustive_cap: int = DEFAULT_CANDIDATE_CAP,
    ):
        if not 0.0 < split < 1.0:
            raise DomainError(f"split must lie in (0, 1), got {split}")
        if t < 2:
            raise DomainError(f"two stages need T >= 2, got {t}")
        self.dims = dims
        self.model = LinearCsModel(snr)
        self.n, self.k, self.t = dims.n_vars, dims.sparsity, t
        self.stage1 = min(t, math.ceil(split * t))
        self.n_candidates = min(2 * self.k, self.n)
        self.exhaustive_cap = exhaustive_cap
        self._candidates = None

    def scores(self, history: MeasurementHistory) -> np.ndarray:
        if self.dims.n_candidates <= self.exhaustive_cap:
            post = softmax(support_log_likelihoods(history, self.model, self.dims))
            cands = candidate_supports(self.n, self.k)
            return np.bincount(
                cands.ravel(), weights=np.repeat(post, self.k), minlength=self.n
            )
        x = history.designs()
        y = history.outcomes().astype(float)
        return np.abs(y @ x)

    def candidates(self, history: MeasurementHistory) -> np.ndarray:
        """Top-2K coordinates after stage 1, sorted by index."""
        stage1 = MeasurementHistory(self.n, history.steps[: self.stage1])
        score = self.scores(stage1)
        # stable sort keeps ties in index order
        return np.sort(np.argsort(-score, kind="stable")[: self.n_candidates])

    def next_design(self, history, rng):
        step = len(history)
        if step == 0:
            self._candidates = None
        power = 1.0 / self.t
        if step < self.stage1:
            return gaussian_design(self.n, self.k, power, rng)
        if self._candidates is None:
            self._candidates = self.candidates(history)
        return gaussian_design(
            self.n, self.k, power, rng, on_support_only=True, support_hint=self._candidates
        )
