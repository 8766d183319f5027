"""Linear-chain CRF: forward log-partition, Viterbi, marginals, gradients.

All arithmetic is log-space float64. Ties in Viterbi are broken toward the
lowest tag index at every backtracking step, so decoding is deterministic
and directly comparable with the exhaustive oracle.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .corpus import LabelSet
from .errors import NumericError, ValidationError

# Soft -inf: large enough to kill a transition at decode time, small enough
# to keep exp()/gradients finite.
MASK_SCORE = -1e4


@dataclass
class CrfParams:
    transitions: np.ndarray  # (num_tags, num_tags), score of tag_i -> tag_j
    start_scores: np.ndarray  # (num_tags,)
    end_scores: np.ndarray  # (num_tags,)

    def __post_init__(self):
        k = len(self.start_scores)
        if self.transitions.shape != (k, k) or self.end_scores.shape != (k,):
            raise ValidationError("CRF parameter shapes are inconsistent")

    @property
    def num_tags(self):
        return len(self.start_scores)


@dataclass(frozen=True)
class PathScore:
    tags: tuple[int, ...]
    score: float


def _check_finite(arr, stage):
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"non-finite values in {stage}")


def path_score(emissions: np.ndarray, crf: CrfParams, tags) -> float:
    """Unnormalized log-score of one tag sequence."""
    tags = list(tags)
    s = crf.start_scores[tags[0]] + crf.end_scores[tags[-1]]
    s += sum(emissions[t, y] for t, y in enumerate(tags))
    s += sum(crf.transitions[tags[t - 1], tags[t]] for t in range(1, len(tags)))
    return float(s)


def _forward_alphas(emissions, crf):
    T = emissions.shape[0]
    alpha = np.empty_like(emissions)
    alpha[0] = crf.start_scores + emissions[0]
    for t in range(1, T):
        alpha[t] = emissions[t] + logsumexp(alpha[t - 1][:, None] + crf.transitions, axis=0)
    return alpha


def _backward_betas(emissions, crf):
    T = emissions.shape[0]
    beta = np.empty_like(emissions)
    beta[T - 1] = crf.end_scores
    for t in range(T - 2, -1, -1):
        beta[t] = logsumexp(crf.transitions + (emissions[t + 1] + beta[t + 1])[None, :], axis=1)
    return beta


def log_partition(emissions: np.ndarray, crf: CrfParams) -> float:
    """log sum over all tag sequences of exp(path score)."""
    _check_finite(emissions, "emissions")
    _check_finite(crf.transitions, "transitions")
    alpha = _forward_alphas(emissions, crf)
    return float(logsumexp(alpha[-1] + crf.end_scores))


def nll(emissions: np.ndarray, crf: CrfParams, gold_tags) -> float:
    """Negative log-likelihood of the gold path; always >= 0."""
    gold_tags = list(gold_tags)
    if len(gold_tags) != emissions.shape[0]:
        raise ValidationError("gold tag sequence length does not match emissions")
    if any(y < 0 or y >= crf.num_tags for y in gold_tags):
        raise ValidationError("gold tag index out of range")
    return log_partition(emissions, crf) - path_score(emissions, crf, gold_tags)


def marginals(emissions: np.ndarray, crf: CrfParams) -> np.ndarray:
    """Per-position tag probabilities via forward-backward; rows sum to 1."""
    alpha = _forward_alphas(emissions, crf)
    beta = _backward_betas(emissions, crf)
    log_z = logsumexp(alpha[-1] + crf.end_scores)
    m = np.exp(alpha + beta - log_z)
    # Normalize away residual rounding so rows sum to 1 tightly.
    return m / m.sum(axis=1, keepdims=True)


def nll_gradients(emissions: np.ndarray, crf: CrfParams, gold_tags):
    """nll value plus its analytic gradients w.r.t. emissions and CRF params.

    d/d emissions = marginals - onehot(gold)
    d/d transitions = expected pairwise counts - observed counts
    """
    T, K = emissions.shape
    gold_tags = list(gold_tags)
    alpha = _forward_alphas(emissions, crf)
    beta = _backward_betas(emissions, crf)
    log_z = logsumexp(alpha[-1] + crf.end_scores)
    value = float(log_z) - path_score(emissions, crf, gold_tags)

    marg = np.exp(alpha + beta - log_z)
    d_emis = marg.copy()
    for t, y in enumerate(gold_tags):
        d_emis[t, y] -= 1.0

    d_trans = np.zeros((K, K))
    for t in range(T - 1):
        pair = np.exp(
            alpha[t][:, None]
            + crf.transitions
            + (emissions[t + 1] + beta[t + 1])[None, :]
            - log_z
        )
        d_trans += pair
    for t in range(1, T):
        d_trans[gold_tags[t - 1], gold_tags[t]] -= 1.0

    d_start = marg[0].copy()
    d_start[gold_tags[0]] -= 1.0
    d_end = marg[-1].copy()
    d_end[gold_tags[-1]] -= 1.0
    return value, d_emis, d_trans, d_start, d_end


def viterbi(emissions: np.ndarray, crf: CrfParams) -> PathScore:
    """Maximum-score tag sequence; ties resolved toward the lowest index."""
    _check_finite(emissions, "emissions")
    T, K = emissions.shape
    v = crf.start_scores + emissions[0]
    backptr = np.zeros((T, K), dtype=int)
    for t in range(1, T):
        scores = v[:, None] + crf.transitions  # (prev, cur)
        backptr[t] = np.argmax(scores, axis=0)  # first max = lowest index
        v = emissions[t] + scores[backptr[t], np.arange(K)]
    v = v + crf.end_scores
    last = int(np.argmax(v))
    best_score = float(v[last])
    tags = [last]
    for t in range(T - 1, 0, -1):
        tags.append(int(backptr[t, tags[-1]]))
    return PathScore(tuple(reversed(tags)), best_score)


def bio_transition_mask(labels: LabelSet) -> np.ndarray:
    """(num_tags+1, num_tags) additive mask; row num_tags masks start scores.

    Invalid moves (O -> I-X, B-X -> I-Y, I-X -> I-Y, start -> I-X) get
    MASK_SCORE; everything else 0.
    """
    tags = labels.tags
    K = len(tags)
    mask = np.zeros((K + 1, K))
    for j, tj in enumerate(tags):
        if not tj.startswith("I-"):
            continue
        label = tj[2:]
        for i, ti in enumerate(tags):
            ok = ti == f"B-{label}" or ti == f"I-{label}"
            if not ok:
                mask[i, j] = MASK_SCORE
        mask[K, j] = MASK_SCORE  # cannot start a sentence with I-
    return mask


def masked(crf: CrfParams, labels: LabelSet) -> CrfParams:
    """CRF parameters with the hard BIO mask applied (decode-time default)."""
    mask = bio_transition_mask(labels)
    return CrfParams(
        transitions=crf.transitions + mask[:-1],
        start_scores=crf.start_scores + mask[-1],
        end_scores=crf.end_scores.copy(),
    )


def brute_force_oracle(emissions: np.ndarray, crf: CrfParams):
    """Exhaustive enumeration over all num_tags**T paths.

    Returns (log_partition, PathScore, marginals) under the same tie rule as
    viterbi: among max-score paths, the one minimal in reversed-sequence
    lexicographic order (which is what lowest-index backtracking yields).
    """
    T, K = emissions.shape
    n_paths = K**T
    if n_paths > 10**6:
        raise ValidationError(f"instance too large for brute force: {K}^{T} paths")

    paths = np.array(list(itertools.product(range(K), repeat=T)), dtype=int)
    scores = crf.start_scores[paths[:, 0]] + crf.end_scores[paths[:, -1]]
    for t in range(T):
        scores = scores + emissions[t, paths[:, t]]
    for t in range(1, T):
        scores = scores + crf.transitions[paths[:, t - 1], paths[:, t]]

    log_z = float(logsumexp(scores))

    best_i = 0
    for i in range(1, n_paths):
        if scores[i] > scores[best_i]:
            best_i = i
        elif scores[i] == scores[best_i]:
            if tuple(paths[i][::-1]) < tuple(paths[best_i][::-1]):
                best_i = i
    best = PathScore(tuple(int(y) for y in paths[best_i]), float(scores[best_i]))

    weights = np.exp(scores - log_z)
    marg = np.zeros((T, K))
    for t in range(T):
        np.add.at(marg[t], paths[:, t], weights)
    return log_z, best, marg
