"""Parameter store and incremental learning for the label cascade.

A :class:`ModelStore` keeps every sufficient statistic the cascade needs:
the example count, per-size and per-label counts, pairwise label
co-occurrence counts, size-given-label counts, and per-condition feature
summaries (running Gaussian moments, or token-count tables in
bag-of-words mode).  :meth:`ModelStore.add_example` folds in one
observation in O(m * (n + m)) time; :func:`merge` combines stores trained
on disjoint shards.

Training is single-writer; a quiescent store supports any number of
concurrent readers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .stats import (
    VARIANCE_FLOOR_ABS,
    VARIANCE_FLOOR_REL,
    GaussianMoments,
    merge_moment_arrays,
)
from .textmodel import BERNOULLI, MULTINOMIAL, TokenCountTable

GAUSSIAN = "gaussian"
LIKELIHOOD_MODELS = (GAUSSIAN, BERNOULLI, MULTINOMIAL)


@dataclass(frozen=True)
class LabelUniverse:
    """Ordered, fixed set of admissible label identifiers."""

    labels: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        if not self.labels:
            raise ValueError("label universe must be non-empty")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("label identifiers must be distinct")
        object.__setattr__(self, "_index", {label: i for i, label in enumerate(self.labels)})

    @property
    def size(self) -> int:
        return len(self.labels)

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self) -> Iterator[str]:
        return iter(self.labels)

    def __contains__(self, label) -> bool:
        return label in self._index

    def index_of(self, label) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise ValueError(f"label {label!r} not in universe") from None


@dataclass
class Instance:
    """One observation: a feature vector and an optional target label set.

    ``features`` is either a dense float array of length n or a sparse
    ``{index: value}`` map; ``target`` is a collection of label ids, or
    None at prediction time.  Targets are kept as given and validated at
    training time (duplicates are rejected there, not silently dropped).
    """

    features: np.ndarray | dict
    target: tuple | None = None

    def __post_init__(self):
        if not isinstance(self.features, dict):
            self.features = np.asarray(self.features, dtype=float)
        if self.target is not None and not isinstance(self.target, tuple):
            self.target = tuple(self.target)


def dense_features(features, n: int) -> np.ndarray:
    """Dense length-n view of ``features``; sparse gaps become explicit 0.0."""
    if isinstance(features, dict):
        out = np.zeros(n, dtype=float)
        for index, value in features.items():
            index = int(index)
            if not 0 <= index < n:
                raise ValueError(f"sparse feature index {index} outside dimension {n}")
            out[index] = value
    else:
        out = np.asarray(features, dtype=float)
        if out.shape != (n,):
            raise ValueError(f"expected feature vector of length {n}, got shape {out.shape}")
    if not np.all(np.isfinite(out)):
        raise ValueError("feature values must be finite")
    return out


def token_counts(features, n: int) -> dict:
    """Sparse ``{index: count}`` view of ``features`` for bag-of-words mode.

    Zero entries are dropped; negative or non-finite counts are rejected.
    """
    if isinstance(features, dict):
        items = features.items()
    else:
        arr = np.asarray(features, dtype=float)
        if arr.shape != (n,):
            raise ValueError(f"expected feature vector of length {n}, got shape {arr.shape}")
        items = ((int(i), arr[i]) for i in np.nonzero(arr)[0])
    tokens = {}
    for index, value in items:
        index = int(index)
        if not 0 <= index < n:
            raise ValueError(f"token index {index} outside vocabulary of size {n}")
        value = float(value)
        if not np.isfinite(value) or value < 0:
            raise ValueError(f"token counts must be finite and >= 0, got {value} at {index}")
        if value > 0:
            tokens[index] = value
    return tokens


class ModelStore:
    """All sufficient statistics for cascade training and prediction.

    Gaussian mode stores per-(feature, condition) running moments as
    (labels x n) and (sizes x n) mean/M2 matrices whose row counts are the
    per-label / per-size example counters, plus global per-feature moments
    that drive the variance floor.  Bag-of-words mode stores token-count
    tables for the same conditions instead.  Either way the count tables
    are identical: the cascade structure is likelihood-agnostic.
    """

    def __init__(self, universe: LabelUniverse, n: int, likelihood_model: str = GAUSSIAN):
        if not isinstance(universe, LabelUniverse):
            universe = LabelUniverse(tuple(universe))
        if n < 1:
            raise ValueError("feature dimension n must be >= 1")
        if likelihood_model not in LIKELIHOOD_MODELS:
            raise ValueError(
                f"likelihood_model must be one of {LIKELIHOOD_MODELS}, got {likelihood_model!r}"
            )
        self.universe = universe
        self.n = int(n)
        self.likelihood_model = likelihood_model
        self.variance_floor_abs = VARIANCE_FLOOR_ABS
        self.variance_floor_rel = VARIANCE_FLOOR_REL

        size = universe.size
        self.total = 0
        self.size_counts = np.zeros(size + 1, dtype=np.int64)
        self.label_counts = np.zeros(size, dtype=np.int64)
        self.pair_counts = np.zeros((size, size), dtype=np.int64)
        self.size_given_label = np.zeros((size, size + 1), dtype=np.int64)

        if likelihood_model == GAUSSIAN:
            self.mean_given_label = np.zeros((size, n))
            self.m2_given_label = np.zeros((size, n))
            self.mean_given_size = np.zeros((size + 1, n))
            self.m2_given_size = np.zeros((size + 1, n))
            self.mean_global = np.zeros(n)
            self.m2_global = np.zeros(n)
            self.label_tokens = None
            self.size_tokens = None
        else:
            self.mean_given_label = None
            self.m2_given_label = None
            self.mean_given_size = None
            self.m2_given_size = None
            self.mean_global = None
            self.m2_global = None
            self.label_tokens = TokenCountTable(n, likelihood_model)
            self.size_tokens = TokenCountTable(n, likelihood_model)

    @property
    def universe_size(self) -> int:
        return self.universe.size

    def _validate_target(self, target) -> list[int]:
        if target is None:
            raise ValueError("training instances must carry a target label set")
        target = tuple(target)
        if len(set(target)) != len(target):
            raise ValueError(f"duplicate labels in target {target!r}")
        return [self.universe.index_of(label) for label in target]

    def add_example(self, instance: Instance) -> "ModelStore":
        """Fold one labelled observation into the store.

        Validation happens before any mutation, so a rejected example
        leaves every counter untouched.
        """
        indices = self._validate_target(instance.target)
        if self.likelihood_model == GAUSSIAN:
            x = dense_features(instance.features, self.n)
            tokens = None
        else:
            x = None
            tokens = token_counts(instance.features, self.n)

        m = len(indices)
        self.total += 1
        self.size_counts[m] += 1
        if self.likelihood_model == GAUSSIAN:
            _welford_row(self.mean_given_size[m], self.m2_given_size[m], self.size_counts[m], x)
            _welford_row(self.mean_global, self.m2_global, self.total, x)
        else:
            self.size_tokens.update(m, tokens)
        for j, yi in enumerate(indices):
            self.label_counts[yi] += 1
            if self.likelihood_model == GAUSSIAN:
                _welford_row(
                    self.mean_given_label[yi], self.m2_given_label[yi], self.label_counts[yi], x
                )
            else:
                self.label_tokens.update(yi, tokens)
            self.size_given_label[yi, m] += 1
            for k, yj in enumerate(indices):
                if k != j:
                    self.pair_counts[yi, yj] += 1
        return self

    def feature_given_label(self, i: int, label) -> GaussianMoments:
        """Moment triple of feature i conditioned on ``label`` being in the target."""
        self._require_gaussian()
        y = self.universe.index_of(label)
        return GaussianMoments(
            int(self.label_counts[y]),
            float(self.mean_given_label[y, i]),
            float(self.m2_given_label[y, i]),
        )

    def feature_given_size(self, i: int, m: int) -> GaussianMoments:
        """Moment triple of feature i conditioned on the target having size m."""
        self._require_gaussian()
        if not 0 <= m <= self.universe_size:
            raise ValueError(f"size {m} outside [0, {self.universe_size}]")
        return GaussianMoments(
            int(self.size_counts[m]),
            float(self.mean_given_size[m, i]),
            float(self.m2_given_size[m, i]),
        )

    def variance_floor(self) -> np.ndarray:
        """Per-feature variance floor from the running global variance."""
        self._require_gaussian()
        if self.total < 2:
            return np.full(self.n, self.variance_floor_abs)
        global_var = self.m2_global / (self.total - 1)
        return np.maximum(self.variance_floor_abs, self.variance_floor_rel * global_var)

    def _require_gaussian(self) -> None:
        if self.likelihood_model != GAUSSIAN:
            raise ValueError("operation requires the gaussian likelihood model")

    def scalar_cell_count(self) -> int:
        """Number of stored scalars, for the space-budget check."""
        cells = 1  # total
        for table in (self.size_counts, self.label_counts, self.pair_counts, self.size_given_label):
            cells += table.size
        if self.likelihood_model == GAUSSIAN:
            for table in (
                self.mean_given_label,
                self.m2_given_label,
                self.mean_given_size,
                self.m2_given_size,
                self.mean_global,
                self.m2_global,
            ):
                cells += table.size
        else:
            for table in (self.label_tokens, self.size_tokens):
                cells += sum(len(row) for row in table.counts.values())
                cells += len(table.condition_totals)
        return cells

    def validate(self) -> None:
        """Check the structural invariants; raises ValueError on violation."""
        if self.total != int(self.size_counts.sum()):
            raise ValueError("total example count != sum of per-size counts")
        if np.any(np.diag(self.pair_counts) != 0):
            raise ValueError("pair count diagonal must be zero")
        if np.any(self.pair_counts != self.pair_counts.T):
            raise ValueError("pair counts must be symmetric")
        if np.any(self.size_given_label.sum(axis=1) != self.label_counts):
            raise ValueError("per-label size counts must sum to the label counts")
        if np.any(self.size_counts < 0) or np.any(self.label_counts < 0):
            raise ValueError("negative counters")
        if self.likelihood_model == GAUSSIAN:
            for name, table in (("m2_given_label", self.m2_given_label),
                                ("m2_given_size", self.m2_given_size),
                                ("m2_global", self.m2_global)):
                if np.any(table < 0):
                    raise ValueError(f"{name} must be non-negative")

    def config_matches(self, other: "ModelStore") -> bool:
        return (
            self.universe.labels == other.universe.labels
            and self.n == other.n
            and self.likelihood_model == other.likelihood_model
        )


def _welford_row(mean_row: np.ndarray, m2_row: np.ndarray, count: int, x: np.ndarray) -> None:
    # count is the post-increment number of observations for this condition
    delta = x - mean_row
    mean_row += delta / count
    m2_row += delta * (x - mean_row)


def new_model(universe, n: int, likelihood_model: str = GAUSSIAN) -> ModelStore:
    """Empty store for ``universe`` and feature dimension ``n``."""
    return ModelStore(universe, n, likelihood_model)


def add_example(store: ModelStore, instance: Instance) -> ModelStore:
    """Fold one observation into ``store`` (mutates and returns it)."""
    return store.add_example(instance)


def train(store: ModelStore, instances: Iterable[Instance]) -> ModelStore:
    """Stream a dataset through add_example."""
    for instance in instances:
        store.add_example(instance)
    return store


def merge(a: ModelStore, b: ModelStore) -> ModelStore:
    """Combine two stores trained on disjoint streams.

    The result equals (to float round-off on moments, exactly on
    counters) a single store trained on the concatenated streams.
    """
    if not a.config_matches(b):
        raise ValueError("cannot merge stores with different universe, n, or likelihood model")
    out = ModelStore(a.universe, a.n, a.likelihood_model)
    out.variance_floor_abs = a.variance_floor_abs
    out.variance_floor_rel = a.variance_floor_rel
    out.total = a.total + b.total
    out.size_counts = a.size_counts + b.size_counts
    out.label_counts = a.label_counts + b.label_counts
    out.pair_counts = a.pair_counts + b.pair_counts
    out.size_given_label = a.size_given_label + b.size_given_label
    if a.likelihood_model == GAUSSIAN:
        _, out.mean_given_label, out.m2_given_label = merge_moment_arrays(
            a.label_counts[:, None], a.mean_given_label, a.m2_given_label,
            b.label_counts[:, None], b.mean_given_label, b.m2_given_label,
        )
        _, out.mean_given_size, out.m2_given_size = merge_moment_arrays(
            a.size_counts[:, None], a.mean_given_size, a.m2_given_size,
            b.size_counts[:, None], b.mean_given_size, b.m2_given_size,
        )
        _, out.mean_global, out.m2_global = merge_moment_arrays(
            a.total, a.mean_global, a.m2_global, b.total, b.mean_global, b.m2_global
        )
    else:
        out.label_tokens = a.label_tokens.merged(b.label_tokens)
        out.size_tokens = a.size_tokens.merged(b.size_tokens)
    return out
