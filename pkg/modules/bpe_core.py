"""Core BPE data model: word-type corpus, pair counting and rule application.

This module handles:
- Building the frequency-weighted word-type corpus from tokenized lines
- Counting adjacent symbol pairs (optionally sharded over worker processes)
- Applying a single merge rule across the corpus
"""

import logging
from collections import Counter
from collections.abc import Iterable
from multiprocessing import Pool

from modules.config import END_OF_WORD
from modules.validation import MergeRule, Pair, ReservedMarkerError

logger = logging.getLogger(__name__)

SymbolSequence = tuple[str, ...]
WordTypeCorpus = Counter[SymbolSequence]
PairCounts = Counter[Pair]


def split_token(token: str) -> SymbolSequence:
    """Split a token into its characters plus a standalone end-of-word marker.

    Args:
        token: Whitespace-free token

    Returns:
        Initial symbol sequence for the token

    Raises:
        ReservedMarkerError: If the token contains the end-of-word marker
    """
    if END_OF_WORD in token:
        raise ReservedMarkerError(token)
    return (*token, END_OF_WORD)


def surface_form(word: SymbolSequence) -> str:
    """Concatenate a word's symbols and drop the end-of-word marker."""
    joined = "".join(word)
    return joined[: -len(END_OF_WORD)] if joined.endswith(END_OF_WORD) else joined


def init_corpus(lines: Iterable[str]) -> WordTypeCorpus:
    """Build the word-type corpus from whitespace-tokenized lines.

    Args:
        lines: Tokenized text lines (trailing newlines allowed)

    Returns:
        Map from initial symbol sequence to token frequency

    Raises:
        ReservedMarkerError: If any token contains the end-of-word marker
    """
    token_counts: Counter[str] = Counter()
    for line in lines:
        token_counts.update(line.split())

    corpus: WordTypeCorpus = Counter()
    for token, freq in token_counts.items():
        corpus[split_token(token)] = freq

    logger.debug(f"Built corpus: {len(corpus)} word types, {sum(corpus.values())} tokens")
    return corpus


def word_pairs(word: SymbolSequence) -> Counter[Pair]:
    """Count adjacent pairs in one word, overlapping positions included."""
    return Counter(zip(word, word[1:]))


def _count_chunk(chunk: list[tuple[SymbolSequence, int]]) -> PairCounts:
    counts: PairCounts = Counter()
    for word, freq in chunk:
        for pair in zip(word, word[1:]):
            counts[pair] += freq
    return counts


def count_symbol_pairs(corpus: WordTypeCorpus, workers: int = 1) -> PairCounts:
    """Count adjacent symbol pairs, weighted by word-type frequency.

    Args:
        corpus: Word-type corpus
        workers: Number of processes; chunks are reduced in input order

    Returns:
        Pair counts; pairs never span two word types and zero counts are absent
    """
    items = list(corpus.items())
    if workers <= 1 or len(items) < 2 * workers:
        return _count_chunk(items)

    chunk_size = -(-len(items) // workers)
    chunks = [items[i : i + chunk_size] for i in range(0, len(items), chunk_size)]
    logger.debug(f"Counting pairs with {workers} workers over {len(chunks)} chunks")

    with Pool(processes=workers) as pool:
        partials = pool.map(_count_chunk, chunks)

    counts: PairCounts = Counter()
    for partial in partials:
        counts.update(partial)
    return counts


def merge_word(word: SymbolSequence, left: str, right: str, merged: str) -> SymbolSequence:
    """Replace left-to-right non-overlapping (left, right) occurrences with merged."""
    n = len(word)
    if n < 2:
        return word
    out: list[str] = []
    i = 0
    while i < n:
        if i + 1 < n and word[i] == left and word[i + 1] == right:
            out.append(merged)
            i += 2
        else:
            out.append(word[i])
            i += 1
    return tuple(out)


def apply_rule(corpus: WordTypeCorpus, rule: MergeRule) -> WordTypeCorpus:
    """Apply one merge rule to every word type.

    Args:
        corpus: Word-type corpus (left unmodified)
        rule: Merge rule to apply

    Returns:
        New corpus; word types that collide after merging have summed frequencies
    """
    result: WordTypeCorpus = Counter()
    for word, freq in corpus.items():
        result[merge_word(word, rule.left, rule.right, rule.merged)] += freq
    return result
