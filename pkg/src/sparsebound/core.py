"""Problem dimensions, support indexing and the seeding contract.

Supports are K-subsets of ``{0, ..., N-1}`` stored as sorted tuples of ints.
A support index ``omega`` is the lexicographic rank of the subset among all
``C(N, K)`` subsets, so ``omega = 0`` is ``(0, 1, ..., K-1)``.

All information quantities in the package are in nats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, ResourceCapError

DEFAULT_CANDIDATE_CAP = 10**7
LN2 = math.log(2.0)

SupportSet = tuple[int, ...]


@dataclass(frozen=True)
class ProblemDims:
    """Number of variables ``n_vars`` (N) and sparsity ``sparsity`` (K).

    ``candidate_cap`` bounds ``C(N, K)`` so that exhaustive decoding stays
    tractable. Pass ``None`` for dims that are only used by closed-form
    bounds or by non-exhaustive strategies.
    """

    n_vars: int
    sparsity: int
    candidate_cap: int | None = field(default=DEFAULT_CANDIDATE_CAP, compare=False)

    def __post_init__(self):
        n, k = self.n_vars, self.sparsity
        if int(n) != n or int(k) != k:
            raise DomainError(f"dims must be integers, got N={n!r}, K={k!r}")
        if not 1 <= k <= n:
            raise DomainError(f"need 1 <= K <= N, got N={n}, K={k}")
        if self.candidate_cap is not None and self.n_candidates > self.candidate_cap:
            raise ResourceCapError(
                f"C({n},{k}) = {self.n_candidates} exceeds candidate cap {self.candidate_cap}"
            )

    @property
    def n_candidates(self) -> int:
        return math.comb(self.n_vars, self.sparsity)


def validate_support(dims: ProblemDims, members: Iterable[int]) -> SupportSet:
    s = tuple(int(m) for m in members)
    if len(s) != dims.sparsity:
        raise DomainError(f"support must have {dims.sparsity} members, got {len(s)}")
    if any(b <= a for a, b in zip(s, s[1:])):
        raise DomainError(f"support members must be strictly increasing: {s}")
    if s and (s[0] < 0 or s[-1] >= dims.n_vars):
        raise DomainError(f"support members must lie in [0, {dims.n_vars}): {s}")
    return s


def validate_revealed(support: Sequence[int], revealed: Iterable[int]) -> SupportSet:
    """Check that ``revealed`` is a sorted proper subset of ``support``."""
    r = tuple(int(m) for m in revealed)
    if any(b <= a for a, b in zip(r, r[1:])):
        raise DomainError(f"revealed members must be strictly increasing: {r}")
    if not set(r) <= set(support):
        raise DomainError(f"revealed subset {r} is not contained in support {tuple(support)}")
    if len(r) >= len(support):
        raise DomainError("revealed subset must be a proper subset of the support")
    return r


def unrank_support(dims: ProblemDims, omega: int) -> SupportSet:
    """Return the ``omega``-th K-subset of ``range(N)`` in lexicographic order."""
    n, k = dims.n_vars, dims.sparsity
    omega = int(omega)
    if not 0 <= omega < math.comb(n, k):
        raise DomainError(f"support index {omega} outside [0, C({n},{k}))")
    members = []
    c = 0
    for i in range(k):
        remaining = k - i - 1
        while True:
            block = math.comb(n - c - 1, remaining)
            if omega < block:
                break
            omega -= block
            c += 1
        members.append(c)
        c += 1
    return tuple(members)


def rank_support(dims: ProblemDims, support: Iterable[int]) -> int:
    """Inverse of :func:`unrank_support`."""
    s = validate_support(dims, support)
    n, k = dims.n_vars, dims.sparsity
    omega = 0
    prev = -1
    for i, c in enumerate(s):
        for skipped in range(prev + 1, c):
            omega += math.comb(n - skipped - 1, k - i - 1)
        prev = c
    return omega


def log_binom(n: int, k: int) -> float:
    """Natural log of ``C(n, k)`` via log-gamma."""
    if int(n) != n or int(k) != k or n < 0 or k < 0:
        raise DomainError(f"log_binom needs nonnegative integers, got ({n}, {k})")
    if k > n:
        raise DomainError(f"log_binom needs k <= n, got ({n}, {k})")
    if k == 0 or k == n:
        return 0.0
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


@lru_cache(maxsize=32)
def candidate_supports(n_vars: int, sparsity: int) -> np.ndarray:
    """All K-subsets as a ``(C(N,K), K)`` int array; row ``i`` has rank ``i``."""
    arr = np.fromiter(
        (c for comb in combinations(range(n_vars), sparsity) for c in comb),
        dtype=np.int64,
        count=math.comb(n_vars, sparsity) * sparsity,
    )
    arr = arr.reshape(-1, sparsity)
    arr.flags.writeable = False
    return arr


def make_rng(seed: int, *spawn_key: int) -> np.random.Generator:
    """Generator for ``seed`` and a spawn key identifying the sub-stream.

    Sub-streams depend only on ``(seed, spawn_key)``, never on the order in
    which they are created, so trial-level parallelism cannot change results.
    """
    if not 0 <= int(seed) < 2**64:
        raise DomainError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(spawn_key)))


def nats_to_bits(value: float) -> float:
    return value / LN2


@dataclass
class MeasurementHistory:
    """Ordered (design, outcome) pairs for one run."""

    n_vars: int
    steps: list = field(default_factory=list)

    def append(self, x, y) -> None:
        x = np.asarray(x)
        if x.shape != (self.n_vars,):
            raise DomainError(f"design must have length {self.n_vars}, got shape {x.shape}")
        self.steps.append((x, y))

    def __len__(self):
        return len(self.steps)

    def designs(self) -> np.ndarray:
        if not self.steps:
            return np.zeros((0, self.n_vars))
        return np.stack([x for x, _ in self.steps])

    def outcomes(self) -> np.ndarray:
        return np.array([y for _, y in self.steps])

    @classmethod
    def from_arrays(cls, designs, outcomes) -> "MeasurementHistory":
        designs = np.asarray(designs)
        h = cls(designs.shape[1])
        for x, y in zip(designs, outcomes):
            h.append(x, y.item() if hasattr(y, "item") else y)
        return h
