"""Corpus and segmentation diagnostics.

This module provides:
- Sentence / token / type counts and type-token ratio for tokenized corpora
- Subword fertility and vocabulary counts for a segmentation
- The 95%-of-subwords-at-100-examples coverage check
- Mean and standard error over replications, and segment-length comparison
- Key-value and aligned-column formatting of all reports
"""

import logging
from collections import Counter
from collections.abc import Iterable, Sequence
from itertools import zip_longest

import numpy as np
from pydantic import BaseModel

from modules.config import COVERAGE_TARGET, DEFAULT_COVERAGE_THRESHOLD, TTR_DISPLAY_DECIMALS
from modules.validation import (
    AlignmentError,
    ComparabilityError,
    CorpusStats,
    CoverageReport,
    JoinerConvention,
    ReplicationSummary,
    SegmentationReport,
)

logger = logging.getLogger(__name__)


def corpus_stats(lines: Iterable[str], name: str = "") -> CorpusStats:
    """Count sentences, tokens and word types in a tokenized corpus.

    Args:
        lines: Tokenized lines; every line counts as a sentence
        name: Label carried into table output

    Returns:
        CorpusStats; type_token_ratio is None when there are no tokens
    """
    sentences = 0
    tokens = 0
    types: set[str] = set()
    for line in lines:
        sentences += 1
        words = line.split()
        tokens += len(words)
        types.update(words)

    ratio = len(types) / tokens if tokens else None
    return CorpusStats(
        name=name,
        sentences=sentences,
        tokens=tokens,
        types=len(types),
        type_token_ratio=ratio,
    )


def _word_count(subwords: list[str], joiner: str) -> int:
    return sum(1 for piece in subwords if not piece.endswith(joiner))


def segmentation_report(
    original: Iterable[str],
    segmented: Iterable[str],
    conv: JoinerConvention | None = None,
) -> SegmentationReport:
    """Compare a tokenized corpus with its line-aligned segmentation.

    Joiner-suffixed subwords are counted as vocabulary entries distinct from
    their word-final forms.

    Args:
        original: Tokenized lines
        segmented: Segmented lines, one per original line
        conv: Joiner convention used by the segmentation

    Returns:
        SegmentationReport; fertility is None when there are no original tokens

    Raises:
        AlignmentError: Streams differ in length, or a segmented line groups
            into a different number of words than its original
    """
    joiner = (conv or JoinerConvention()).joiner
    original_tokens = 0
    vocab: Counter[str] = Counter()

    for line_number, (orig, seg) in enumerate(zip_longest(original, segmented), start=1):
        if orig is None or seg is None:
            which = "segmented" if orig is not None else "original"
            raise AlignmentError(line_number, f"{which} stream ended early")
        words = orig.split()
        subwords = seg.split()
        if _word_count(subwords, joiner) != len(words) or (
            subwords and subwords[-1].endswith(joiner)
        ):
            raise AlignmentError(
                line_number,
                f"{len(words)} original tokens but segmented line groups into "
                f"{_word_count(subwords, joiner)} words",
            )
        original_tokens += len(words)
        vocab.update(subwords)

    subword_tokens = sum(vocab.values())
    fertility = subword_tokens / original_tokens if original_tokens else None
    return SegmentationReport(
        subword_tokens=subword_tokens,
        original_tokens=original_tokens,
        fertility=fertility,
        subword_vocab=dict(vocab),
    )


def coverage(
    report: SegmentationReport, threshold: int = DEFAULT_COVERAGE_THRESHOLD
) -> CoverageReport:
    """Fraction of subword types with at least ``threshold`` occurrences.

    Raises:
        ValueError: If the report's vocabulary is empty
    """
    if not report.subword_vocab:
        raise ValueError("Coverage is undefined for an empty subword vocabulary")
    freqs = np.fromiter(report.subword_vocab.values(), dtype=np.int64)
    fraction = int(np.count_nonzero(freqs >= threshold)) / len(freqs)
    return CoverageReport(
        threshold=threshold,
        fraction_at_or_above=fraction,
        passes95=fraction >= COVERAGE_TARGET,
    )


def mean_std_error(values: Sequence[float]) -> ReplicationSummary:
    """Mean and standard error (sample stdev with n-1 denominator over sqrt(n)).

    Raises:
        ValueError: If fewer than two values are given
    """
    if len(values) < 2:
        raise ValueError(f"Standard error needs at least 2 values, got {len(values)}")
    arr = np.asarray(values, dtype=np.float64)
    return ReplicationSummary(
        mean=float(arr.mean()),
        std_error=float(arr.std(ddof=1) / np.sqrt(len(arr))),
        n=len(arr),
    )


def compare_reports(a: SegmentationReport, b: SegmentationReport) -> float:
    """Length ratio of segmentation ``b`` to segmentation ``a``.

    Raises:
        ComparabilityError: If the reports cover different originals or ``a``
            has no subword tokens
    """
    if a.original_tokens != b.original_tokens:
        raise ComparabilityError(
            f"Reports cover different originals ({a.original_tokens} vs "
            f"{b.original_tokens} tokens)"
        )
    if a.subword_tokens == 0:
        raise ComparabilityError("Baseline segmentation has no subword tokens")
    return b.subword_tokens / a.subword_tokens


def _format_value(value: object) -> str:
    if value is None:
        return "undefined"
    if isinstance(value, bool):
        return str(value).lower()
    return str(value)


def format_key_value(report: BaseModel, prefix: str = "") -> str:
    """Render a report as ``key=value`` lines (full precision, vocab omitted)."""
    lines = []
    for key, value in report.model_dump(exclude={"subword_vocab"}).items():
        lines.append(f"{prefix}{key}={_format_value(value)}")
    if isinstance(report, SegmentationReport):
        lines.append(f"{prefix}vocab_size={report.vocab_size}")
    return "\n".join(lines) + "\n"


def format_columns(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    """Render rows as aligned text columns (first column left, others right)."""
    widths = [len(h) for h in header]
    for row in rows:
        widths = [max(w, len(cell)) for w, cell in zip(widths, row)]

    def render(cells: Sequence[str]) -> str:
        parts = [cells[0].ljust(widths[0])]
        parts.extend(cell.rjust(w) for cell, w in zip(cells[1:], widths[1:]))
        return "  ".join(parts).rstrip()

    out = [render(header), render(["-" * w for w in widths])]
    out.extend(render(row) for row in rows)
    return "\n".join(out) + "\n"


def format_corpus_table(stats: Sequence[CorpusStats]) -> str:
    """Corpus statistics table; TTR rounded for display only."""
    rows = []
    for s in stats:
        ttr = (
            f"{s.type_token_ratio:.{TTR_DISPLAY_DECIMALS}f}"
            if s.type_token_ratio is not None
            else "undefined"
        )
        rows.append([s.name or "-", f"{s.sentences:,}", f"{s.tokens:,}", f"{s.types:,}", ttr])
    return format_columns(["Corpus", "Sentences", "Tokens", "Types", "TTR"], rows)


def format_segmentation_table(
    report: SegmentationReport, coverage_report: CoverageReport | None = None
) -> str:
    """Two-column text rendering of a segmentation report."""
    fertility = f"{report.fertility:.4f}" if report.fertility is not None else "undefined"
    rows = [
        ["Original tokens", f"{report.original_tokens:,}"],
        ["Subword tokens", f"{report.subword_tokens:,}"],
        ["Fertility", fertility],
        ["Subword vocabulary", f"{report.vocab_size:,}"],
    ]
    if coverage_report is not None:
        rows.append(
            [
                f"Coverage (>= {coverage_report.threshold})",
                f"{coverage_report.fraction_at_or_above:.4f}",
            ]
        )
        rows.append(["Passes 95% rule", "yes" if coverage_report.passes95 else "no"])
    return format_columns(["Metric", "Value"], rows)
