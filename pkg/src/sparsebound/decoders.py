"""Decoders g(X^T, Y^T) returning a support index."""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

from .core import (
    DEFAULT_CANDIDATE_CAP,
    MeasurementHistory,
    ProblemDims,
    candidate_supports,
    rank_support,
)
from .errors import ResourceCapError
from .models import GroupTestingModel, ObservationModel, coefficient_prior

# bounds the (T, candidates, sign patterns) working array of one chunk
_CHUNK_ELEMENTS = 2**22


def _check_caps(dims: ProblemDims, model: ObservationModel, cap: int | None):
    if cap is None:
        cap = dims.candidate_cap or DEFAULT_CANDIDATE_CAP
    if dims.n_candidates > cap:
        raise ResourceCapError(f"C(N,K) = {dims.n_candidates} exceeds cap {cap}")
    if not isinstance(model, GroupTestingModel) and 2**dims.sparsity > cap:
        raise ResourceCapError(f"2^K sign patterns exceed cap {cap}")


def support_log_likelihoods(
    history: MeasurementHistory, model: ObservationModel, dims: ProblemDims
) -> np.ndarray:
    """log P(Y^T | X^T, S) for every candidate S, in rank order.

    beta_S is marginalised exactly over its prior's equiprobable patterns.
    """
    cands = candidate_supports(dims.n_vars, dims.sparsity)
    n_cands = len(cands)
    t = len(history)
    if t == 0:
        return np.zeros(n_cands)
    x = history.designs()
    y = history.outcomes()
    patterns = coefficient_prior(model, dims.sparsity)
    n_pat = len(patterns)
    out = np.empty(n_cands)
    step = max(1, _CHUNK_ELEMENTS // max(1, t * n_pat * dims.sparsity))
    for start in range(0, n_cands, step):
        idx = cands[start : start + step]
        x_s = x[:, idx][:, :, None, :]  # (T, C, 1, K)
        ll = model.log_likelihood(y[:, None, None], x_s, patterns[None, None, :, :])
        per_pattern = np.sum(ll, axis=0)  # (C, P)
        if n_pat == 1:
            out[start : start + len(idx)] = per_pattern[:, 0]
        else:
            out[start : start + len(idx)] = logsumexp(per_pattern, axis=1) - np.log(n_pat)
    return out


def ml_decode(
    history: MeasurementHistory,
    model: ObservationModel,
    dims: ProblemDims,
    revealed=None,
    cap: int | None = None,
) -> int:
    """Exhaustive maximum-likelihood support index.

    Only supersets of ``revealed`` are considered. Ties, including the
    all-tied empty history, go to the smallest index.
    """
    _check_caps(dims, model, cap)
    scores = support_log_likelihoods(history, model, dims)
    if revealed:
        cands = candidate_supports(dims.n_vars, dims.sparsity)
        rev = np.asarray(sorted(revealed))
        allowed = np.flatnonzero(np.isin(cands, rev).sum(axis=1) == len(rev))
        return int(allowed[np.argmax(scores[allowed])])
    return int(np.argmax(scores))


def comp_decode(history: MeasurementHistory, dims: ProblemDims) -> int | None:
    """COMP for noiseless group testing.

    Every item in a negative test is cleared. Returns the support index if
    exactly K items survive, otherwise ``None`` (ambiguous).
    """
    if len(history) == 0:
        survivors = np.arange(dims.n_vars)
    else:
        x = history.designs().astype(bool)
        y = history.outcomes().astype(bool)
        cleared = np.any(x[~y], axis=0)
        survivors = np.flatnonzero(~cleared)
    if len(survivors) != dims.sparsity:
        return None
    return rank_support(dims, survivors)

