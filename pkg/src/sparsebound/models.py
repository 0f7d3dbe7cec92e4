"""Observation channels P(Y | X_S, beta_S).

Each model sees only the on-support design values ``x_s`` (last axis of
length K), which is what makes the output conditionally independent of the
off-support coordinates. Every method broadcasts over leading axes so the
decoders can evaluate many candidate supports and sign patterns at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr, ndtr

from .errors import DomainError, UnsupportedOperationError


def _log(p):
    p = np.asarray(p, dtype=float)
    out = np.full(p.shape, -np.inf)
    np.log(p, out=out, where=p > 0)
    return out if out.ndim else float(out)


def _check_shapes(x_s, beta):
    x_s = np.asarray(x_s, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if x_s.ndim == 0 or beta.ndim == 0 or x_s.shape[-1] != beta.shape[-1]:
        raise DomainError(
            f"x_S and beta_S must share their last dimension, got {x_s.shape} and {beta.shape}"
        )
    return x_s, beta


class ObservationModel:
    """Common interface of the three channels.

    ``output_alphabet`` is ``"binary"`` or ``"real"``. Binary models also
    implement :meth:`positive_probability`.
    """

    output_alphabet = "binary"
    name = "abstract"

    def positive_probability(self, x_s, beta):
        raise UnsupportedOperationError(f"{self.name} does not have a binary output")

    def log_likelihood(self, y, x_s, beta):
        p1 = self.positive_probability(x_s, beta)
        y = np.asarray(y)
        return np.where(y == 1, _log(p1), _log(1.0 - p1))

    def sample(self, x_s, beta, rng: np.random.Generator):
        p1 = np.asarray(self.positive_probability(x_s, beta))
        y = (rng.random(p1.shape) < p1).astype(np.int8)
        return y if y.ndim else int(y)

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class GroupTestingModel(ObservationModel):
    """Boolean OR of the on-support inclusions, flipped with prob ``crossover``."""

    crossover: float = 0.0
    name = "group_testing"

    def __post_init__(self):
        if not 0.0 <= self.crossover < 0.5:
            raise DomainError(f"crossover must lie in [0, 0.5), got {self.crossover}")

    def positive_probability(self, x_s, beta=None):
        x_s = np.asarray(x_s)
        if beta is not None:
            _check_shapes(x_s, beta)
        hit = np.any(x_s != 0, axis=-1)
        c = self.crossover
        return np.where(hit, 1.0 - c, c)

    def log_likelihood(self, y, x_s, beta=None):
        return super().log_likelihood(y, x_s, beta)

    def sample(self, x_s, beta=None, rng=None):
        x_s = np.asarray(x_s)
        if beta is not None:
            _check_shapes(x_s, beta)
        y = np.any(x_s != 0, axis=-1).astype(np.int8)
        if self.crossover > 0:
            y ^= (rng.random(y.shape) < self.crossover).astype(np.int8)
        return y if y.ndim else int(y)

    def to_dict(self):
        return {"name": self.name, "crossover": self.crossover}


def _check_snr(snr):
    if not snr > 0 or not math.isfinite(snr):
        raise DomainError(f"snr must be a positive finite number, got {snr}")


@dataclass(frozen=True)
class OneBitCsModel(ObservationModel):
    """``y = 1`` iff ``<x_S, beta_S> + w >= 0`` with ``w ~ N(0, 1/snr)``."""

    snr: float
    name = "one_bit_cs"

    def __post_init__(self):
        _check_snr(self.snr)

    def positive_probability(self, x_s, beta):
        x_s, beta = _check_shapes(x_s, beta)
        z = math.sqrt(self.snr) * np.sum(x_s * beta, axis=-1)
        return ndtr(z)

    def log_likelihood(self, y, x_s, beta):
        x_s, beta = _check_shapes(x_s, beta)
        z = math.sqrt(self.snr) * np.sum(x_s * beta, axis=-1)
        sign = np.where(np.asarray(y) == 1, 1.0, -1.0)
        return log_ndtr(sign * z)

    def sample(self, x_s, beta, rng):
        x_s, beta = _check_shapes(x_s, beta)
        m = np.sum(x_s * beta, axis=-1)
        w = rng.normal(0.0, 1.0 / math.sqrt(self.snr), np.shape(m))
        y = (m + w >= 0).astype(np.int8)
        return y if y.ndim else int(y)

    def to_dict(self):
        return {"name": self.name, "snr": self.snr}


@dataclass(frozen=True)
class LinearCsModel(ObservationModel):
    """``y = <x_S, beta_S> + w`` with ``w ~ N(0, 1/snr)``."""

    snr: float
    name = "linear_cs"
    output_alphabet = "real"

    def __post_init__(self):
        _check_snr(self.snr)

    def log_likelihood(self, y, x_s, beta):
        x_s, beta = _check_shapes(x_s, beta)
        r = np.asarray(y, dtype=float) - np.sum(x_s * beta, axis=-1)
        return 0.5 * math.log(self.snr / (2 * math.pi)) - 0.5 * self.snr * r * r

    def sample(self, x_s, beta, rng):
        x_s, beta = _check_shapes(x_s, beta)
        m = np.sum(x_s * beta, axis=-1)
        y = m + rng.normal(0.0, 1.0 / math.sqrt(self.snr), np.shape(m))
        return y if np.ndim(y) else float(y)

    def to_dict(self):
        return {"name": self.name, "snr": self.snr}


MODELS = {
    "group_testing": GroupTestingModel,
    "one_bit_cs": OneBitCsModel,
    "linear_cs": LinearCsModel,
}


def model_from_dict(spec: dict) -> ObservationModel:
    spec = dict(spec)
    name = spec.pop("name", None)
    if name not in MODELS:
        raise DomainError(f"unknown model {name!r}; expected one of {sorted(MODELS)}")
    try:
        return MODELS[name](**spec)
    except TypeError as exc:
        raise DomainError(f"bad parameters for model {name!r}: {exc}") from None


def draw_coefficients(model: ObservationModel, k: int, rng: np.random.Generator) -> np.ndarray:
    """Latent beta_S: Rademacher for the CS models, a ones placeholder otherwise."""
    if isinstance(model, GroupTestingModel):
        return np.ones(k)
    return rng.choice(np.array([-1.0, 1.0]), size=k)


def coefficient_prior(model: ObservationModel, k: int) -> np.ndarray:
    """Equiprobable beta_S patterns as a ``(P, K)`` array."""
    if isinstance(model, GroupTestingModel):
        return np.ones((1, k))
    idx = np.arange(2**k)[:, None] >> np.arange(k)[None, ::-1] & 1
    return np.where(idx == 1, 1.0, -1.0)
