"""Two-phase multi-label prediction over a trained ModelStore.

Prediction runs in two phases: :func:`predict_m` scores every candidate
target size and keeps the best, then :func:`predict_yk` greedily picks
one label at a time, each step conditioned on the features, the size, and
the labels already chosen.  Both phases combine the store's univariate
estimators; all arithmetic is in log space and every discrete probability
is add-one smoothed by default (pass ``smoothing=False`` for the raw
frequency ratios, at the price of -inf scores for unseen events).

Smoothing support sizes: |Y| + 1 for target sizes, |Y| for label priors,
|Y| + 1 for size-given-label, and |Y| - 1 for label pairs, where the pair
distribution forbids the conditioning label itself.

Degenerate Gaussian conditions (fewer than two observations carry no
variance estimate) follow a comparability rule: if every class of a
prediction step is degenerate, all of them compete on their smoothed
discrete factors alone; otherwise the degenerate ones are excluded from
that argmax, because a score with density factors and one without are not
comparable.

Prediction never mutates the store, so any number of predictions may run
concurrently against a quiescent model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import GAUSSIAN, ModelStore, dense_features, token_counts
from .stats import LOG_2PI, smoothed_log_ratio

NEG_INF = float("-inf")


@dataclass
class PredictionTrace:
    """Everything one prediction decided and why.

    ``chosen`` lists (label, per-step log-score) in selection order;
    ``size_log_scores`` holds the log-score of every candidate size;
    ``step_normalized`` carries, per step, the softmax weight the chosen
    label had among that step's candidates (reporting only -- softmax
    cannot change an argmax).
    """

    predicted_size: int
    chosen: list = field(default_factory=list)
    size_log_scores: np.ndarray | None = None
    step_normalized: list = field(default_factory=list)

    @property
    def label_set(self) -> frozenset:
        return frozenset(label for label, _ in self.chosen)

    @property
    def joint_log_score(self) -> float:
        """Size score plus the accumulated per-step label scores."""
        size_part = float(self.size_log_scores[self.predicted_size])
        return size_part + sum(score for _, score in self.chosen)


class _ScoringContext:
    """Per-query score tables shared by the cascade and the oracle.

    Built once per (store, features, smoothing) triple: candidate-size
    log-scores, per-label priors and feature log-likelihoods, the
    size-given-label matrix, and the pair matrix ``pair[y, c]`` holding
    log P(c in Y | y in Y) for chosen label c and candidate y.
    """

    def __init__(self, store: ModelStore, features, smoothing: bool = True):
        if store.total < 1:
            raise ValueError("store has no training examples")
        self.store = store
        self.smoothing = smoothing
        size = store.universe_size
        total = store.total

        gaussian = store.likelihood_model == GAUSSIAN
        self.gaussian_mode = gaussian
        if gaussian:
            x = dense_features(features, store.n)
            floor = store.variance_floor()
            size_ll = _gaussian_row_sums(x, store.size_counts, store.mean_given_size,
                                         store.m2_given_size, floor)
            label_ll = _gaussian_row_sums(x, store.label_counts, store.mean_given_label,
                                          store.m2_given_label, floor)
            self.size_degenerate = store.size_counts < 2
            self.label_degenerate = store.label_counts < 2
        else:
            tokens = token_counts(features, store.n)
            size_ll = np.array(
                [store.size_tokens.log_likelihood(m, tokens) for m in range(size + 1)]
            )
            label_ll = np.array(
                [store.label_tokens.log_likelihood(y, tokens) for y in range(size)]
            )
            self.size_degenerate = np.zeros(size + 1, dtype=bool)
            self.label_degenerate = np.zeros(size, dtype=bool)
        self.label_density = label_ll

        if smoothing:
            size_prior = smoothed_log_ratio(store.size_counts, total, size + 1)
            self.label_prior = smoothed_log_ratio(store.label_counts, total, size)
            self.size_term = smoothed_log_ratio(
                store.size_given_label, store.label_counts[:, None], size + 1
            )
            self.pair_term = smoothed_log_ratio(
                store.pair_counts, store.label_counts[:, None], size - 1
            )
        else:
            size_prior = _raw_log_ratio(store.size_counts, np.full(size + 1, total))
            self.label_prior = _raw_log_ratio(store.label_counts, np.full(size, total))
            self.size_term = _raw_log_ratio(
                store.size_given_label, np.broadcast_to(store.label_counts[:, None],
                                                        store.size_given_label.shape)
            )
            self.pair_term = _raw_log_ratio(
                store.pair_counts, np.broadcast_to(store.label_counts[:, None],
                                                   store.pair_counts.shape)
            )
        # The conditioning label itself is forbidden as a pair partner.
        np.fill_diagonal(self.pair_term, NEG_INF)

        if gaussian and not self.size_degenerate.all():
            self.size_log_scores = size_prior + size_ll
            self.size_log_scores[self.size_degenerate] = NEG_INF
        elif gaussian:
            self.size_log_scores = size_prior.copy()
        else:
            self.size_log_scores = size_prior + size_ll

    def base_scores(self, chosen_indices, candidate_indices) -> np.ndarray:
        """Size-independent part of the per-candidate step scores.

        Label prior, pair terms against the chosen set, and the feature
        log-likelihood under the degenerate rule, which is evaluated over
        this step's candidate set: densities are dropped for everyone
        when all candidates are degenerate, otherwise degenerate
        candidates score -inf.
        """
        cand = np.asarray(candidate_indices, dtype=int)
        scores = self.label_prior[cand].copy()
        # Ascending order makes the float accumulation depend only on the
        # chosen SET, so every path to the same prefix scores identically.
        for c in sorted(chosen_indices):
            scores += self.pair_term[cand, c]
        if self.gaussian_mode:
            degenerate = self.label_degenerate[cand]
            if not degenerate.all():
                scores += self.label_density[cand]
                scores[degenerate] = NEG_INF
        else:
            scores += self.label_density[cand]
        return scores

    def step_scores(self, m: int, chosen_indices, candidate_indices) -> np.ndarray:
        """Per-candidate log-scores for the next cascade step at size m."""
        cand = np.asarray(candidate_indices, dtype=int)
        return self.base_scores(chosen_indices, cand) + self.size_term[cand, m]


def _gaussian_row_sums(x, counts, mean, m2, floor) -> np.ndarray:
    """Sum over features of log N(x_i; mean, var) per condition row.

    Rows with fewer than two observations produce placeholder values the
    caller must mask (the division guard only avoids warnings).
    """
    denom = np.maximum(counts - 1, 1).astype(float)[:, None]
    var = np.maximum(m2 / denom, floor[None, :])
    diff = x[None, :] - mean
    return -0.5 * np.sum(LOG_2PI + np.log(var) + diff * diff / var, axis=1)


def _raw_log_ratio(numer, denom) -> np.ndarray:
    """log(numer / denom) with zero or empty denominators scoring -inf."""
    numer = np.asarray(numer, dtype=float)
    denom = np.asarray(denom, dtype=float)
    valid = (numer > 0) & (denom > 0)
    out = np.full(numer.shape, NEG_INF)
    out[valid] = np.log(numer[valid]) - np.log(denom[valid])
    return out


def predict_m(store: ModelStore, features, smoothing: bool = True):
    """Most probable target size and the full per-size log-score vector.

    Ties break toward the smaller size.
    """
    ctx = _ScoringContext(store, features, smoothing)
    return int(np.argmax(ctx.size_log_scores)), ctx.size_log_scores


def predict_yk(store: ModelStore, features, m: int, chosen, smoothing: bool = True,
               _ctx: _ScoringContext | None = None):
    """Best next label given the size and the labels already chosen.

    Scans every label outside ``chosen``; ties break by universe order.
    If no candidate scores finitely, falls back to the smoothed-prior
    argmax (the returned score is then -inf).
    """
    universe = store.universe
    chosen = list(chosen)
    chosen_set = set(chosen)
    if len(chosen_set) != len(chosen):
        raise ValueError("chosen labels must be distinct")
    if not len(chosen) < m <= universe.size:
        raise ValueError(
            f"need |chosen| < m <= |universe|, got |chosen|={len(chosen)}, m={m}"
        )
    chosen_idx = [universe.index_of(label) for label in chosen]
    chosen_idx_set = set(chosen_idx)
    ctx = _ctx if _ctx is not None else _ScoringContext(store, features, smoothing)
    candidates = [i for i in range(universe.size) if i not in chosen_idx_set]
    scores = ctx.step_scores(m, chosen_idx, candidates)
    best = int(np.argmax(scores))
    if scores[best] == NEG_INF:
        priors = ctx.label_prior[np.asarray(candidates)]
        best = int(np.argmax(priors))
    return universe.labels[candidates[best]], float(scores[best])


def predict_y(store: ModelStore, features, true_m: int | None = None,
              smoothing: bool = True) -> PredictionTrace:
    """Full two-phase prediction; ``true_m`` skips the size phase.

    Passing the observed target size isolates label-selection quality
    from size-prediction quality (the size phase is still scored for the
    trace, it just no longer decides).
    """
    ctx = _ScoringContext(store, features, smoothing)
    if true_m is None:
        m_hat = int(np.argmax(ctx.size_log_scores))
    else:
        m_hat = int(true_m)
        if not 0 <= m_hat <= store.universe_size:
            raise ValueError(f"true_m {true_m} outside [0, {store.universe_size}]")
    trace = PredictionTrace(predicted_size=m_hat, size_log_scores=ctx.size_log_scores)
    chosen_idx: list[int] = []
    remaining = list(range(store.universe_size))
    for _ in range(m_hat):
        scores = ctx.step_scores(m_hat, chosen_idx, remaining)
        best = int(np.argmax(scores))
        if scores[best] == NEG_INF:
            best = int(np.argmax(ctx.label_prior[np.asarray(remaining)]))
        trace.chosen.append((store.universe.labels[remaining[best]], float(scores[best])))
        trace.step_normalized.append(_softmax_weight(scores, best))
        chosen_idx.append(remaining[best])
        del remaining[best]
    return trace


def joint_log_score(store: ModelStore, features, ordered_labels, m: int | None = None,
                    smoothing: bool = True) -> float:
    """Log-score of one explicit label sequence under the cascade factorization.

    Evaluates the size score for ``m`` (= the sequence length) plus each
    label's step score given the prefix before it, exactly as the greedy
    search would have scored that path.
    """
    ordered_labels = list(ordered_labels)
    if m is None:
        m = len(ordered_labels)
    if m != len(ordered_labels):
        raise ValueError(f"m={m} does not match {len(ordered_labels)} labels")
    if len(set(ordered_labels)) != len(ordered_labels):
        raise ValueError("labels must be distinct")
    indices = [store.universe.index_of(label) for label in ordered_labels]
    ctx = _ScoringContext(store, features, smoothing)
    score = float(ctx.size_log_scores[m])
    chosen: list[int] = []
    remaining = set(range(store.universe_size))
    for yi in indices:
        candidates = sorted(remaining)
        step = ctx.step_scores(m, chosen, candidates)
        score += float(step[candidates.index(yi)])
        chosen.append(yi)
        remaining.discard(yi)
    return score


def _softmax_weight(scores: np.ndarray, index: int) -> float:
    finite = scores[np.isfinite(scores)]
    if finite.size == 0:
        return float("nan")
    top = float(finite.max())
    z = float(np.exp(finite - top).sum())
    if not math.isfinite(scores[index]):
        return 0.0
    return float(math.exp(scores[index] - top) / z)
