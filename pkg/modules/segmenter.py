"""Applying a learned merge table to tokenized text.

This module handles:
- Word segmentation in rank order (same order as training)
- Line segmentation with joiner-marked non-final subwords
- Desegmentation (inverse of the joiner convention)
- Order-preserving parallel segmentation of line streams
"""

import logging
import re
from bisect import bisect_left
from collections.abc import Iterable, Iterator
from multiprocessing import Pool

from modules.bpe_core import SymbolSequence, merge_word, split_token
from modules.config import APPLY_CHUNK_SIZE, END_OF_WORD
from modules.validation import JoinerConvention, MergeTable, Pair

logger = logging.getLogger(__name__)


def segment_word_reference(token: str, table: MergeTable) -> list[str]:
    """Segment ``token`` by applying every rule of ``table`` in rank order.

    Reference implementation: O(number of rules) per word.
    """
    word: SymbolSequence = split_token(token)
    for rule in table.rules:
        word = merge_word(word, rule.left, rule.right, rule.merged)
    return list(word)


class Segmenter:
    """Segments tokens and lines with a fixed merge table.

    Rules are looked up by pair instead of scanned one by one. The next rule
    applied is always the lowest-ranked rule at or after the current rank whose
    pair is present, which gives exactly the rank-order result.
    """

    def __init__(self, table: MergeTable, convention: JoinerConvention | None = None) -> None:
        self.table = table
        self.convention = convention or JoinerConvention()
        self._ranks: dict[Pair, list[int]] = {}
        for rule in table.rules:
            self._ranks.setdefault(rule.pair, []).append(rule.rank)
        self._cache: dict[str, list[str]] = {}

    def _next_rank(self, word: SymbolSequence, position: int) -> int | None:
        best: int | None = None
        for pair in zip(word, word[1:]):
            ranks = self._ranks.get(pair)
            if ranks is None:
                continue
            i = bisect_left(ranks, position)
            if i < len(ranks) and (best is None or ranks[i] < best):
                best = ranks[i]
        return best

    def segment_word(self, token: str) -> list[str]:
        """Segment one token into subword symbols (end-of-word marker included).

        Raises:
            ReservedMarkerError: If the token contains the end-of-word marker
        """
        cached = self._cache.get(token)
        if cached is not None:
            return list(cached)

        word: SymbolSequence = split_token(token)
        position = 0
        while len(word) > 1:
            rank = self._next_rank(word, position)
            if rank is None:
                break
            rule = self.table.rules[rank]
            word = merge_word(word, rule.left, rule.right, rule.merged)
            position = rank + 1

        self._cache[token] = list(word)
        return list(word)

    def render_word(self, symbols: list[str]) -> list[str]:
        """Strip the end-of-word marker and add joiners to non-final subwords."""
        pieces = list(symbols)
        if pieces[-1] == END_OF_WORD:
            pieces.pop()
        elif pieces[-1].endswith(END_OF_WORD):
            pieces[-1] = pieces[-1][: -len(END_OF_WORD)]
        joiner = self.convention.joiner
        return [piece + joiner for piece in pieces[:-1]] + [pieces[-1]]

    def segment_line(self, line: str) -> str:
        """Segment every token of a whitespace-tokenized line."""
        out: list[str] = []
        for token in line.split():
            out.extend(self.render_word(self.segment_word(token)))
        return " ".join(out)


def segment_word(token: str, table: MergeTable) -> list[str]:
    """Segment one token with ``table``; see Segmenter.segment_word."""
    return Segmenter(table).segment_word(token)


def segment_line(line: str, table: MergeTable, conv: JoinerConvention | None = None) -> str:
    """Segment one tokenized line with ``table``; see Segmenter.segment_line."""
    return Segmenter(table, conv).segment_line(line)


def desegment_line(line: str, conv: JoinerConvention | None = None) -> str:
    """Undo joiner marking: drop every joiner followed by a space or line end.

    Args:
        line: Segmented line (no trailing newline)
        conv: Joiner convention (default "@@")

    Returns:
        Original tokenized line
    """
    joiner = (conv or JoinerConvention()).joiner
    return re.sub(re.escape(joiner) + r"( |$)", "", line)


_worker_segmenter: Segmenter | None = None


def _init_worker(table: MergeTable, convention: JoinerConvention) -> None:
    global _worker_segmenter
    _worker_segmenter = Segmenter(table, convention)


def _segment_chunk(lines: list[str]) -> list[str]:
    assert _worker_segmenter is not None
    return [_worker_segmenter.segment_line(line) for line in lines]


def _chunked(lines: Iterable[str], size: int) -> Iterator[list[str]]:
    chunk: list[str] = []
    for line in lines:
        chunk.append(line)
        if len(chunk) == size:
            yield chunk
            chunk = []
    if chunk:
        yield chunk


def segment_lines(
    lines: Iterable[str],
    table: MergeTable,
    conv: JoinerConvention | None = None,
    workers: int = 1,
) -> Iterator[str]:
    """Segment a stream of lines, preserving input order.

    Args:
        lines: Tokenized lines without trailing newlines
        table: Merge table
        conv: Joiner convention
        workers: Worker processes; each keeps its own word cache

    Yields:
        Segmented lines in input order
    """
    convention = conv or JoinerConvention()
    if workers <= 1:
        segmenter = Segmenter(table, convention)
        for line in lines:
            yield segmenter.segment_line(line)
        return

    logger.info(f"Segmenting with {workers} workers")
    with Pool(processes=workers, initializer=_init_worker, initargs=(table, convention)) as pool:
        for chunk in pool.imap(_segment_chunk, _chunked(lines, APPLY_CHUNK_SIZE)):
            yield from chunk
