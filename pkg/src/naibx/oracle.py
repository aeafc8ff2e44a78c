"""Brute-force references for correctness testing.

Two exact-but-expensive predictors live here: a label-powerset classifier
(every distinct observed label subset becomes one multi-class target) and
an exhaustive maximizer of the cascade score over all subsets and all
selection orders.  Both exist to test the greedy cascade, not to serve
production traffic, and both refuse label universes large enough to make
the powerset blow up.
"""

from __future__ import annotations

import numpy as np

from .cascade import NEG_INF, _ScoringContext
from .model import Instance, LabelUniverse, ModelStore, dense_features
from .stats import LOG_2PI, VARIANCE_FLOOR_ABS, VARIANCE_FLOOR_REL

# Subset enumeration grows as 2^|universe|; past this it is no longer a
# usable test oracle.
MAX_ORACLE_LABELS = 12


class BudgetError(ValueError):
    """Raised when an exhaustive computation would exceed the size guard."""


class PowersetModel:
    """Multi-class Gaussian classifier over observed label subsets.

    Each canonical subset key maps to a class count and per-feature
    running moments.  Subsets never seen in training are unreachable: no
    smoothing mass is spread over the 2^|universe| space.
    """

    def __init__(self, universe, n: int):
        if not isinstance(universe, LabelUniverse):
            universe = LabelUniverse(tuple(universe))
        if universe.size > MAX_ORACLE_LABELS:
            raise BudgetError(
                f"powerset space grows as 2^|universe|; refusing |universe| = "
                f"{universe.size} > {MAX_ORACLE_LABELS}"
            )
        if n < 1:
            raise ValueError("feature dimension n must be >= 1")
        self.universe = universe
        self.n = int(n)
        self.total = 0
        # canonical key (sorted universe indices) -> [count, mean row, m2 row]
        self.class_table: dict[tuple, list] = {}
        self.mean_global = np.zeros(n)
        self.m2_global = np.zeros(n)

    def _canonical_key(self, target) -> tuple:
        target = tuple(target)
        if len(set(target)) != len(target):
            raise ValueError(f"duplicate labels in target {target!r}")
        return tuple(sorted(self.universe.index_of(label) for label in target))

    def add_example(self, instance: Instance) -> "PowersetModel":
        if instance.target is None:
            raise ValueError("training instances must carry a target label set")
        key = self._canonical_key(instance.target)
        x = dense_features(instance.features, self.n)
        entry = self.class_table.setdefault(key, [0, np.zeros(self.n), np.zeros(self.n)])
        entry[0] += 1
        delta = x - entry[1]
        entry[1] += delta / entry[0]
        entry[2] += delta * (x - entry[1])
        self.total += 1
        delta = x - self.mean_global
        self.mean_global += delta / self.total
        self.m2_global += delta * (x - self.mean_global)
        return self

    def train(self, instances) -> "PowersetModel":
        for instance in instances:
            self.add_example(instance)
        return self

    def _variance_floor(self) -> np.ndarray:
        if self.total < 2:
            return np.full(self.n, VARIANCE_FLOOR_ABS)
        global_var = self.m2_global / (self.total - 1)
        return np.maximum(VARIANCE_FLOOR_ABS, VARIANCE_FLOOR_REL * global_var)

    def predict(self, features) -> frozenset:
        """Highest-scoring observed subset; ties break by canonical subset order."""
        if not self.class_table:
            raise ValueError("powerset model has no training examples")
        x = dense_features(features, self.n)
        keys = sorted(self.class_table, key=lambda key: (len(key), key))
        floor = self._variance_floor()
        k = len(keys)
        counts = np.array([self.class_table[key][0] for key in keys])
        priors = np.log(counts + 1.0) - np.log(self.total + k)
        degenerate = counts < 2
        scores = priors.copy()
        if not degenerate.all():
            for pos, key in enumerate(keys):
                if degenerate[pos]:
                    scores[pos] = NEG_INF
                    continue
                count, mean, m2 = self.class_table[key]
                var = np.maximum(m2 / (count - 1), floor)
                scores[pos] += -0.5 * np.sum(LOG_2PI + np.log(var) + (x - mean) ** 2 / var)
        best = keys[int(np.argmax(scores))]
        return frozenset(self.universe.labels[i] for i in best)


def powerset_predict(pm: PowersetModel, features) -> frozenset:
    """Predict with the label-powerset classifier (see PowersetModel.predict)."""
    return pm.predict(features)


def best_subset(store: ModelStore, features, max_size: int | None = None,
                smoothing: bool = True):
    """Exact maximizer of the cascade score over subsets and orders.

    Enumerates every subset of at most ``max_size`` labels and, via a
    dynamic program over prefix sets that is exactly equivalent to trying
    all orderings, the best selection order of each subset.  Shares the
    cascade's scoring tables, so the greedy output can never beat the
    returned score.  Returns (label set, best log-score).
    """
    size = store.universe_size
    if size > MAX_ORACLE_LABELS:
        raise BudgetError(
            f"subset enumeration grows as 2^|universe|; refusing |universe| = "
            f"{size} > {MAX_ORACLE_LABELS}"
        )
    if max_size is None:
        max_size = size
    if not 0 <= max_size <= size:
        raise ValueError(f"max_size {max_size} outside [0, {size}]")
    ctx = _ScoringContext(store, features, smoothing)

    # Depth-first enumeration of every ordering of every subset, smallest
    # subsets first.  Prefix step scores depend only on the prefix SET, so
    # they are memoized per bitmask; the running sums use the exact same
    # scalar additions as joint_log_score, which guarantees the greedy
    # path can never score above the value returned here.
    base_memo: dict = {}

    def base_for(mask: int):
        cached = base_memo.get(mask)
        if cached is None:
            prefix = _bits(mask, size)
            candidates = [i for i in range(size) if not mask & (1 << i)]
            cached = (candidates, ctx.base_scores(prefix, candidates))
            base_memo[mask] = cached
        return cached

    best_mask = 0
    best_score = float(ctx.size_log_scores[0])

    def explore(mask: int, depth: int, partial: float, m: int) -> None:
        nonlocal best_mask, best_score
        if depth == m:
            if partial > best_score:
                best_score = partial
                best_mask = mask
            return
        candidates, base = base_for(mask)
        for pos, y in enumerate(candidates):
            explore(mask | (1 << y), depth + 1,
                    partial + (base[pos] + ctx.size_term[y, m]), m)

    for m in range(1, max_size + 1):
        explore(0, 0, float(ctx.size_log_scores[m]), m)
    labels = frozenset(store.universe.labels[i] for i in _bits(best_mask, size))
    return labels, best_score


def _bits(mask: int, size: int) -> list[int]:
    return [i for i in range(size) if mask & (1 << i)]
