"""Token-count likelihood models for bag-of-words features.

A :class:`TokenCountTable` accumulates per-condition token frequencies and
evaluates document log-likelihoods under one of two models:

* ``multinomial`` — token draws; a document scores the sum of
  count * log p(word | condition), with p Laplace-smoothed over the
  vocabulary.
* ``bernoulli`` — per-document word presence; a document scores every
  vocabulary word, present or absent, with p(present | condition)
  add-one smoothed over the two outcomes.

Training only updates frequency tables; all probability estimation is
deferred to evaluation time.
"""

from __future__ import annotations

import math

MULTINOMIAL = "multinomial"
BERNOULLI = "bernoulli"
BOW_MODES = (MULTINOMIAL, BERNOULLI)


class TokenCountTable:
    """Per-condition token counts plus condition totals.

    ``condition_totals`` holds the sum of accumulated token counts under
    the multinomial model and the number of documents under the Bernoulli
    model.  Conditions may be any hashable identifier.
    """

    def __init__(self, vocabulary_size: int, mode: str = MULTINOMIAL):
        if vocabulary_size < 1:
            raise ValueError("vocabulary_size must be >= 1")
        if mode not in BOW_MODES:
            raise ValueError(f"mode must be one of {BOW_MODES}, got {mode!r}")
        self.vocabulary_size = int(vocabulary_size)
        self.mode = mode
        self.counts: dict = {}
        self.condition_totals: dict = {}
        # Bernoulli only: cached sum over the vocabulary of log p(absent),
        # recomputed lazily after each update to keep evaluation O(|doc|).
        self._absent_sums: dict = {}

    def _check_tokens(self, tokens: dict) -> None:
        for index, count in tokens.items():
            if not 0 <= int(index) < self.vocabulary_size:
                raise ValueError(
                    f"token index {index} outside vocabulary of size {self.vocabulary_size}"
                )
            if count < 1:
                raise ValueError(f"token counts must be >= 1, got {count} at index {index}")

    def update(self, condition, tokens: dict) -> "TokenCountTable":
        """Accumulate one document under ``condition``.

        ``tokens`` maps token index -> occurrence count (>= 1).  The
        multinomial model adds the counts; the Bernoulli model records
        presence once per distinct token and counts the document.
        """
        self._check_tokens(tokens)
        row = self.counts.setdefault(condition, {})
        if self.mode == MULTINOMIAL:
            added = 0
            for index, count in tokens.items():
                row[index] = row.get(index, 0) + count
                added += count
            self.condition_totals[condition] = self.condition_totals.get(condition, 0) + added
        else:
            for index in tokens:
                row[index] = row.get(index, 0) + 1
            self.condition_totals[condition] = self.condition_totals.get(condition, 0) + 1
            self._absent_sums.pop(condition, None)
        return self

    def _bernoulli_absent_sum(self, condition) -> float:
        cached = self._absent_sums.get(condition)
        if cached is not None:
            return cached
        row = self.counts.get(condition, {})
        docs = self.condition_totals.get(condition, 0)
        log_denom = math.log(docs + 2)
        # Unseen words share log((docs + 1) / (docs + 2)); correct the
        # words actually seen under this condition.
        total = self.vocabulary_size * (math.log(docs + 1) - log_denom)
        for count in row.values():
            total += math.log(docs - count + 1) - math.log(docs + 1)
        self._absent_sums[condition] = total
        return total

    def log_likelihood(self, condition, tokens: dict) -> float:
        """Document log-likelihood under ``condition``.

        Unknown conditions are legal and score on smoothing alone.  The
        Bernoulli model evaluates absent words too: scoring only presences
        would silently degrade to multinomial-style behaviour.
        """
        self._check_tokens(tokens)
        row = self.counts.get(condition, {})
        total = self.condition_totals.get(condition, 0)
        if self.mode == MULTINOMIAL:
            log_denom = math.log(total + self.vocabulary_size)
            return sum(
                count * (math.log(row.get(index, 0) + 1) - log_denom)
                for index, count in tokens.items()
            )
        # log p(present) - log p(absent); the shared (total + 2) denominators cancel.
        score = self._bernoulli_absent_sum(condition)
        for index in tokens:
            seen = row.get(index, 0)
            score += math.log(seen + 1) - math.log(total - seen + 1)
        return score

    def present_probability(self, condition, index: int) -> float:
        """Bernoulli p(word present | condition), add-one smoothed."""
        if self.mode != BERNOULLI:
            raise ValueError("present_probability is only defined for the bernoulli model")
        if not 0 <= index < self.vocabulary_size:
            raise ValueError(f"token index {index} outside vocabulary")
        seen = self.counts.get(condition, {}).get(index, 0)
        docs = self.condition_totals.get(condition, 0)
        return (seen + 1) / (docs + 2)

    def token_probability(self, condition, index: int) -> float:
        """Multinomial p(word | condition), Laplace-smoothed over the vocabulary."""
        if self.mode != MULTINOMIAL:
            raise ValueError("token_probability is only defined for the multinomial model")
        if not 0 <= index < self.vocabulary_size:
            raise ValueError(f"token index {index} outside vocabulary")
        seen = self.counts.get(condition, {}).get(index, 0)
        total = self.condition_totals.get(condition, 0)
        return (seen + 1) / (total + self.vocabulary_size)

    def merged(self, other: "TokenCountTable") -> "TokenCountTable":
        if (self.vocabulary_size, self.mode) != (other.vocabulary_size, other.mode):
            raise ValueError("cannot merge tables with different vocabulary or mode")
        out = TokenCountTable(self.vocabulary_size, self.mode)
        for source in (self, other):
            for condition, row in source.counts.items():
                target = out.counts.setdefault(condition, {})
                for index, count in row.items():
                    target[index] = target.get(index, 0) + count
            for condition, total in source.condition_totals.items():
                out.condition_totals[condition] = out.condition_totals.get(condition, 0) + total
        return out

    def equal_counts(self, other: "TokenCountTable") -> bool:
        return (
            self.vocabulary_size == other.vocabulary_size
            and self.mode == other.mode
            and self.counts == other.counts
            and self.condition_totals == other.condition_totals
        )


def bow_update(table: TokenCountTable, condition, tokens: dict) -> TokenCountTable:
    """Accumulate one bag-of-words document (see TokenCountTable.update)."""
    return table.update(condition, tokens)


def bow_log_likelihood(table: TokenCountTable, condition, tokens: dict) -> float:
    """Document log-likelihood (see TokenCountTable.log_likelihood)."""
    return table.log_likelihood(condition, tokens)
