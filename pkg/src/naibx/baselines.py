"""Binary Relevance and Classifier Chain baselines with Gaussian NBC bases.

Binary Relevance trains one independent present/absent classifier per
label.  A Classifier Chain walks the labels in a fixed order, and the
classifier at each position also consumes the binary decisions of the
earlier positions as extra features; those bits are modelled as add-one
smoothed Bernoulli factors (they are binary by construction, a Gaussian
would be a poor fit).  Chain order is exposed because it can change
predictions; the default is universe order.
"""

from __future__ import annotations

import numpy as np

from .model import Instance, LabelUniverse, dense_features
from .stats import LOG_2PI, VARIANCE_FLOOR_ABS, VARIANCE_FLOOR_REL

NEG_INF = float("-inf")
ABSENT, PRESENT = 0, 1


class _GaussianPair:
    """Present/absent Gaussian NBC state for one binary decision."""

    def __init__(self, n: int):
        self.n = n
        self.counts = np.zeros(2, dtype=np.int64)
        self.mean = np.zeros((2, n))
        self.m2 = np.zeros((2, n))

    def update(self, cls: int, x: np.ndarray) -> None:
        self.counts[cls] += 1
        delta = x - self.mean[cls]
        self.mean[cls] += delta / self.counts[cls]
        self.m2[cls] += delta * (x - self.mean[cls])

    def class_scores(self, x: np.ndarray, floor: np.ndarray) -> np.ndarray:
        """Smoothed log-prior plus feature log-likelihood per class.

        Degenerate rule as everywhere else: both classes degenerate means
        priors only; one degenerate means it is out of the running.
        """
        total = int(self.counts.sum())
        scores = np.log(self.counts + 1.0) - np.log(total + 2.0)
        degenerate = self.counts < 2
        if degenerate.all():
            return scores
        for cls in (ABSENT, PRESENT):
            if degenerate[cls]:
                scores[cls] = NEG_INF
                continue
            var = np.maximum(self.m2[cls] / (self.counts[cls] - 1), floor)
            scores[cls] += -0.5 * np.sum(
                LOG_2PI + np.log(var) + (x - self.mean[cls]) ** 2 / var
            )
        return scores


class _GlobalMoments:
    def __init__(self, n: int):
        self.count = 0
        self.mean = np.zeros(n)
        self.m2 = np.zeros(n)

    def update(self, x: np.ndarray) -> None:
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (x - self.mean)

    def floor(self) -> np.ndarray:
        if self.count < 2:
            return np.full(self.mean.shape, VARIANCE_FLOOR_ABS)
        return np.maximum(VARIANCE_FLOOR_ABS, VARIANCE_FLOOR_REL * self.m2 / (self.count - 1))


class BinaryRelevance:
    """One independent present/absent Gaussian NBC per label."""

    def __init__(self, universe, n: int):
        if not isinstance(universe, LabelUniverse):
            universe = LabelUniverse(tuple(universe))
        if n < 1:
            raise ValueError("feature dimension n must be >= 1")
        self.universe = universe
        self.n = int(n)
        self.total = 0
        self._pairs = [_GaussianPair(n) for _ in range(universe.size)]
        self._global = _GlobalMoments(n)

    def add_example(self, instance: Instance) -> "BinaryRelevance":
        if instance.target is None:
            raise ValueError("training instances must carry a target label set")
        target = set(instance.target)
        unknown = [label for label in target if label not in self.universe]
        if unknown:
            raise ValueError(f"labels {unknown!r} not in universe")
        x = dense_features(instance.features, self.n)
        for i, label in enumerate(self.universe):
            self._pairs[i].update(PRESENT if label in target else ABSENT, x)
        self._global.update(x)
        self.total += 1
        return self

    def train(self, instances) -> "BinaryRelevance":
        for instance in instances:
            self.add_example(instance)
        return self

    def predict(self, features) -> frozenset:
        """Labels whose present-score strictly beats their absent-score."""
        if self.total < 1:
            raise ValueError("binary relevance bank has no training examples")
        x = dense_features(features, self.n)
        floor = self._global.floor()
        predicted = []
        for i, label in enumerate(self.universe):
            scores = self._pairs[i].class_scores(x, floor)
            if scores[PRESENT] > scores[ABSENT]:
                predicted.append(label)
        return frozenset(predicted)


def br_train(bank: BinaryRelevance, instances) -> BinaryRelevance:
    return bank.train(instances)


def br_predict(bank: BinaryRelevance, features) -> frozenset:
    return bank.predict(features)


class ClassifierChain:
    """Sequential binary classifiers, each fed the earlier decisions.

    Position k models its label with a Gaussian NBC over the n input
    features plus k-1 Bernoulli factors, one per earlier position's bit.
    Training conditions on the observed earlier bits; prediction feeds
    the predicted ones.
    """

    def __init__(self, universe, n: int, order=None):
        if not isinstance(universe, LabelUniverse):
            universe = LabelUniverse(tuple(universe))
        if n < 1:
            raise ValueError("feature dimension n must be >= 1")
        self.universe = universe
        self.n = int(n)
        if order is None:
            order = universe.labels
        order = tuple(order)
        if sorted(order) != sorted(universe.labels):
            raise ValueError("order must be a permutation of the label universe")
        self.order = order
        self.total = 0
        self._pairs = [_GaussianPair(n) for _ in order]
        # bit_ones[k][cls][j]: training examples at position k with class
        # cls whose j-th earlier label was present
        self._bit_ones = [np.zeros((2, k), dtype=np.int64) for k in range(len(order))]
        self._global = _GlobalMoments(n)

    def add_example(self, instance: Instance) -> "ClassifierChain":
        if instance.target is None:
            raise ValueError("training instances must carry a target label set")
        target = set(instance.target)
        unknown = [label for label in target if label not in self.universe]
        if unknown:
            raise ValueError(f"labels {unknown!r} not in universe")
        x = dense_features(instance.features, self.n)
        bits = [1 if label in target else 0 for label in self.order]
        for k in range(len(self.order)):
            cls = bits[k]
            self._pairs[k].update(cls, x)
            for j in range(k):
                if bits[j]:
                    self._bit_ones[k][cls, j] += 1
        self._global.update(x)
        self.total += 1
        return self

    def train(self, instances) -> "ClassifierChain":
        for instance in instances:
            self.add_example(instance)
        return self

    def predict(self, features) -> frozenset:
        if self.total < 1:
            raise ValueError("classifier chain has no training examples")
        x = dense_features(features, self.n)
        floor = self._global.floor()
        decided: list[int] = []
        predicted = []
        for k, label in enumerate(self.order):
            scores = self._pairs[k].class_scores(x, floor)
            counts = self._pairs[k].counts
            for cls in (ABSENT, PRESENT):
                for j, bit in enumerate(decided):
                    ones = self._bit_ones[k][cls, j]
                    p_one = (ones + 1.0) / (counts[cls] + 2.0)
                    scores[cls] += np.log(p_one if bit else 1.0 - p_one)
            if scores[PRESENT] > scores[ABSENT]:
                predicted.append(label)
                decided.append(1)
            else:
                decided.append(0)
        return frozenset(predicted)


def cc_train(chain: ClassifierChain, instances) -> ClassifierChain:
    return chain.train(instances)


def cc_predict(chain: ClassifierChain, features) -> frozenset:
    return chain.predict(features)
