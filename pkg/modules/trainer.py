"""BPE training loop with pluggable merge selection.

This module provides:
- BPETrainer: choose / record / apply loop over a word-type corpus
- Incremental pair-count maintenance (only word types containing the merged pair
  are touched) feeding a PairSelector, with the literal full recount and a
  from-scratch choose_pair kept as an alternative path
- train_bpe: one-call wrapper returning a MergeTable with provenance
"""

import logging
from collections import Counter, defaultdict
from collections.abc import Callable

from modules.bpe_core import (
    PairCounts,
    SymbolSequence,
    WordTypeCorpus,
    apply_rule,
    count_symbol_pairs,
    merge_word,
    word_pairs,
)
from modules.config import PROGRESS_LOG_INTERVAL
from modules.sampling import PairSelector, SplitMix64, choose_pair
from modules.validation import MergeRule, MergeTable, Pair, SamplingMethod

logger = logging.getLogger(__name__)


def _contains_pair(word: SymbolSequence, left: str, right: str) -> bool:
    return any(a == left and b == right for a, b in zip(word, word[1:]))


def _apply_pair_delta(
    counts: PairCounts,
    old_pairs: Counter[Pair],
    new_pairs: Counter[Pair],
    freq: int,
    on_change: Callable[[Pair, int, int], None] | None = None,
) -> None:
    """Shift counts from a word's old pair multiset to its new one, in place.

    ``on_change(pair, old, new)`` is called for every count that moves.
    """
    for pair in old_pairs.keys() | new_pairs.keys():
        delta = new_pairs.get(pair, 0) - old_pairs.get(pair, 0)
        if delta == 0:
            continue
        before = counts[pair]
        after = before + delta * freq
        if after == 0:
            del counts[pair]
        else:
            counts[pair] = after
        if on_change is not None:
            on_change(pair, before, after)


def update_counts_incremental(
    counts: PairCounts, corpus: WordTypeCorpus, rule: MergeRule
) -> PairCounts:
    """Pair counts after applying ``rule``, without recounting the whole corpus.

    Args:
        counts: Must equal count_symbol_pairs(corpus); not checked
        corpus: Pre-merge corpus
        rule: Rule being applied

    Returns:
        New counts equal to count_symbol_pairs(apply_rule(corpus, rule))
    """
    updated: PairCounts = Counter(counts)
    for word, freq in corpus.items():
        if not _contains_pair(word, rule.left, rule.right):
            continue
        new_word = merge_word(word, rule.left, rule.right, rule.merged)
        _apply_pair_delta(updated, word_pairs(word), word_pairs(new_word), freq)
    return updated


class BPETrainer:
    """Learns merge rules from a word-type corpus.

    One trainer owns one SplitMix64 stream, seeded once. Standard selection
    consumes no draws; every sampled selection consumes exactly one.
    """

    def __init__(
        self,
        corpus: WordTypeCorpus,
        method: SamplingMethod = SamplingMethod.STANDARD,
        seed: int = 0,
        incremental: bool = True,
        workers: int = 1,
    ) -> None:
        """Initialize training state.

        Args:
            corpus: Initial word-type corpus (copied, never mutated)
            method: Merge-selection policy
            seed: Seed for the random source
            incremental: Maintain counts incrementally (False recounts every merge)
            workers: Processes used for the initial pair count
        """
        if not corpus:
            raise ValueError("Training corpus is empty")

        self.method = method
        self.seed = seed
        self.incremental = incremental
        self.rng = SplitMix64(seed)

        self._corpus: WordTypeCorpus = Counter(corpus)
        self._counts: PairCounts = count_symbol_pairs(self._corpus, workers=workers)
        # pair -> word types that contain it; kept exact for the incremental path
        self._index: defaultdict[Pair, set[SymbolSequence]] = defaultdict(set)
        self._selector: PairSelector | None = None
        if incremental:
            for word in self._corpus:
                for pair in word_pairs(word):
                    self._index[pair].add(word)
            self._selector = PairSelector(self._counts, method, self.rng)

    @property
    def corpus(self) -> WordTypeCorpus:
        return Counter(self._corpus)

    @property
    def counts(self) -> PairCounts:
        return Counter(self._counts)

    def _choose(self) -> Pair:
        if self._selector is not None:
            return self._selector.choose()
        return choose_pair(self._counts, self.method, self.rng)

    def _apply_incremental(self, rule: MergeRule) -> None:
        on_change = self._selector.update if self._selector is not None else None
        for word in list(self._index.pop(rule.pair, ())):
            freq = self._corpus.pop(word)
            new_word = merge_word(word, rule.left, rule.right, rule.merged)

            old_pairs = word_pairs(word)
            new_pairs = word_pairs(new_word)
            _apply_pair_delta(self._counts, old_pairs, new_pairs, freq, on_change)

            for pair in old_pairs:
                holders = self._index.get(pair)
                if holders is not None:
                    holders.discard(word)
                    if not holders:
                        del self._index[pair]
            for pair in new_pairs:
                self._index[pair].add(new_word)

            self._corpus[new_word] += freq

    def _apply_full_recount(self, rule: MergeRule) -> None:
        self._corpus = apply_rule(self._corpus, rule)
        self._counts = count_symbol_pairs(self._corpus)

    def apply(self, rule: MergeRule) -> None:
        """Apply ``rule`` to the corpus and bring pair counts up to date."""
        if self.incremental:
            self._apply_incremental(rule)
        else:
            self._apply_full_recount(rule)

    def train(self, merges: int) -> MergeTable:
        """Run the choose / record / apply loop ``merges`` times.

        Args:
            merges: Number of merge rules to learn

        Returns:
            MergeTable with provenance; early_stopped is True when the pair set
            was exhausted before ``merges`` rules were learned
        """
        logger.info(
            f"Training {self.method.value} BPE: merges={merges}, seed={self.seed}, "
            f"word types={len(self._corpus)}, pairs={len(self._counts)}"
        )
        rules: list[MergeRule] = []
        early_stopped = False

        for rank in range(merges):
            if not self._counts:
                early_stopped = True
                logger.warning(f"Pair set exhausted after {rank} of {merges} merges")
                break

            pair = self._choose()
            rule = MergeRule.from_pair(pair, rank)
            rules.append(rule)
            self.apply(rule)

            if (rank + 1) % PROGRESS_LOG_INTERVAL == 0:
                logger.info(f"Learned {rank + 1}/{merges} merges ({len(self._counts)} pairs)")

        logger.debug(f"Training consumed {self.rng.draws} random draws")
        return MergeTable(
            rules=rules,
            method=self.method,
            seed=self.seed,
            requested_merges=merges,
            early_stopped=early_stopped,
        )


def train_bpe(
    corpus: WordTypeCorpus,
    merges: int,
    method: SamplingMethod = SamplingMethod.STANDARD,
    seed: int = 0,
    incremental: bool = True,
    workers: int = 1,
) -> MergeTable:
    """Learn ``merges`` BPE rules from ``corpus`` with the given policy.

    Args:
        corpus: Word-type corpus from init_corpus
        merges: Merge budget M
        method: Merge-selection policy
        seed: Seed for sampled policies (ignored by standard)
        incremental: Incremental count updates (False runs the full recount)
        workers: Processes used for the initial pair count

    Returns:
        Learned MergeTable
    """
    trainer = BPETrainer(corpus, method, seed, incremental=incremental, workers=workers)
    return trainer.train(merges)
