"""Shared univariate online estimators.

Two primitives: running Gaussian moments (single-pass count/mean/M2) and
additively smoothed categorical frequencies with an optional forbidden
value.  Every predictor in the package scores classes by combining these,
always in log space: an n-fold probability product underflows float64 for
n in the hundreds, a sum of logs does not.

Instances are plain data and safe to hand between threads; updating a
given instance requires exclusive access, quiescent reads are free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

LOG_2PI = math.log(2.0 * math.pi)

# Variance floor policy: per-condition sample variances are floored at
# max(VARIANCE_FLOOR_ABS, VARIANCE_FLOOR_REL * global variance of that
# feature) so constant features cannot produce singular densities.
VARIANCE_FLOOR_ABS = 1e-9
VARIANCE_FLOOR_REL = 1e-6


@dataclass
class GaussianMoments:
    """Running count, mean, and sum of squared deviations (M2).

    ``m2 / (count - 1)`` is the sample variance once two or more values
    have been seen.  With fewer than two values the state is degenerate:
    it carries no variance estimate and density evaluation is subject to
    the caller's degenerate-state policy.
    """

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    def update(self, value: float) -> "GaussianMoments":
        if not math.isfinite(value):
            raise ValueError(f"cannot update moments with non-finite value {value!r}")
        self.count += 1
        delta = value - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (value - self.mean)
        return self

    @property
    def variance(self) -> float:
        """Sample variance; 0.0 while the state is degenerate (count < 2)."""
        if self.count < 2:
            return 0.0
        return self.m2 / (self.count - 1)

    def merged(self, other: "GaussianMoments") -> "GaussianMoments":
        """Combine two states as if their streams had been concatenated."""
        count, mean, m2 = merge_moment_arrays(
            self.count, self.mean, self.m2, other.count, other.mean, other.m2
        )
        return GaussianMoments(int(count), float(mean), float(m2))


def gaussian_update(state: GaussianMoments, value: float) -> GaussianMoments:
    """Fold one observation into ``state`` (mutates and returns it)."""
    return state.update(value)


def gaussian_log_density(
    state: GaussianMoments,
    value: float,
    variance_floor: float,
    degenerate: str = "skip",
) -> float | None:
    """Log N(value; state.mean, var) with var = max(sample variance, floor).

    Degenerate states (count < 2) have no variance estimate; policy
    ``"skip"`` returns None so the caller can drop the factor, policy
    ``"floor"`` evaluates at ``variance_floor`` around the stored mean.
    """
    if not variance_floor > 0.0:
        raise ValueError("variance_floor must be positive")
    if state.count < 2:
        if degenerate == "skip":
            return None
        if degenerate != "floor":
            raise ValueError(f"unknown degenerate policy {degenerate!r}")
        var = variance_floor
    else:
        var = max(state.m2 / (state.count - 1), variance_floor)
    return -0.5 * (LOG_2PI + math.log(var) + (value - state.mean) ** 2 / var)


def merge_moment_arrays(count_a, mean_a, m2_a, count_b, mean_b, m2_b):
    """Pairwise combination of running-moment tables.

    Accepts scalars or broadcastable arrays; counts may differ per row.
    Returns (count, mean, m2) equal, up to float error, to the moments of
    the concatenated streams.  Empty + empty stays all-zero.
    """
    count_a = np.asarray(count_a, dtype=float)
    count_b = np.asarray(count_b, dtype=float)
    mean_a = np.asarray(mean_a, dtype=float)
    mean_b = np.asarray(mean_b, dtype=float)
    total = count_a + count_b
    safe_total = np.where(total > 0, total, 1.0)
    delta = mean_b - mean_a
    mean = mean_a + delta * (count_b / safe_total)
    m2 = (
        np.asarray(m2_a, dtype=float)
        + np.asarray(m2_b, dtype=float)
        + delta * delta * (count_a * count_b / safe_total)
    )
    mean = np.where(total > 0, mean, 0.0)
    m2 = np.where(total > 0, m2, 0.0)
    return total, mean, m2


@dataclass
class SmoothedCategorical:
    """Add-one smoothed counts over a fixed finite support.

    Probabilities follow (count + 1) / (total + K) with K the support
    size.  When ``excluded`` names a forbidden value, that value has
    probability exactly 0 and the divisor drops to total + K - 1, so the
    remaining support still normalizes to 1.
    """

    support: tuple
    counts: dict = field(default_factory=dict)
    total: int = 0
    excluded: object = None

    def __post_init__(self):
        self.support = tuple(self.support)
        if not self.support:
            raise ValueError("support must be non-empty")
        self._members = frozenset(self.support)
        if len(self._members) != len(self.support):
            raise ValueError("support values must be distinct")
        if self.excluded is not None and self.excluded not in self._members:
            raise ValueError(f"excluded value {self.excluded!r} not in support")
        unknown = set(self.counts) - self._members
        if unknown:
            raise ValueError(f"counts for values outside the support: {sorted(map(repr, unknown))}")
        observed = sum(self.counts.values())
        if self.total == 0:
            self.total = observed
        elif self.total != observed:
            raise ValueError(f"total {self.total} != sum of counts {observed}")

    @property
    def support_size(self) -> int:
        return len(self.support)

    def add(self, value, k: int = 1) -> "SmoothedCategorical":
        if value not in self._members:
            raise ValueError(f"{value!r} not in support")
        if self.excluded is not None and value == self.excluded:
            raise ValueError(f"cannot observe the excluded value {value!r}")
        if k < 1:
            raise ValueError("k must be >= 1")
        self.counts[value] = self.counts.get(value, 0) + k
        self.total += k
        return self

    def probability(self, value) -> float:
        if value not in self._members:
            raise ValueError(f"{value!r} not in support")
        if self.excluded is not None:
            if value == self.excluded:
                return 0.0
            return (self.counts.get(value, 0) + 1) / (self.total + self.support_size - 1)
        return (self.counts.get(value, 0) + 1) / (self.total + self.support_size)

    def log_probability(self, value) -> float:
        p = self.probability(value)
        return math.log(p) if p > 0.0 else float("-inf")

    def probabilities(self) -> dict:
        return {value: self.probability(value) for value in self.support}


def smoothed_probability(cat: SmoothedCategorical, value) -> float:
    """Probability of ``value`` under add-one smoothing (see the class)."""
    return cat.probability(value)


def smoothed_log_ratio(counts, total, k):
    """log((counts + 1) / (total + k)) elementwise.

    The vectorized core of add-one smoothing; ``counts`` and ``total``
    broadcast, ``k`` is the support size (already reduced by one when a
    forbidden value applies).
    """
    counts = np.asarray(counts, dtype=float)
    total = np.asarray(total, dtype=float)
    with np.errstate(divide="ignore"):
        return np.log(counts + 1.0) - np.log(total + k)
