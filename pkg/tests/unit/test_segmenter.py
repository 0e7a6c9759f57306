"""Unit tests for modules/segmenter.py."""

import pytest

from modules.bpe_core import init_corpus
from modules.segmenter import (
    Segmenter,
    desegment_line,
    segment_line,
    segment_lines,
    segment_word,
    segment_word_reference,
)
from modules.trainer import train_bpe
from modules.validation import (
    JoinerConvention,
    MergeRule,
    MergeTable,
    ReservedMarkerError,
    SamplingMethod,
)


def table_from_pairs(*pairs: tuple[str, str]) -> MergeTable:
    return MergeTable(rules=[MergeRule.from_pair(p, rank) for rank, p in enumerate(pairs)])


LOW = table_from_pairs(("l", "o"), ("lo", "w"))
EMPTY = MergeTable()


class TestSegmentWord:
    """Tests for segment_word."""

    def test_lowest(self) -> None:
        """Test an unseen word reuses learned prefixes."""
        assert segment_word("lowest", LOW) == ["low", "e", "s", "t", "</w>"]

    def test_low(self) -> None:
        """Test a training word."""
        assert segment_word("low", LOW) == ["low", "</w>"]

    def test_empty_table(self) -> None:
        """Test zero rules leaves characters plus marker."""
        assert segment_word("abc", EMPTY) == ["a", "b", "c", "</w>"]

    def test_unknown_characters_pass_through(self) -> None:
        """Test characters absent from training stay as singletons."""
        assert segment_word("løw", LOW) == ["l", "ø", "w", "</w>"]

    def test_reserved_marker(self) -> None:
        """Test a token containing the marker is rejected."""
        with pytest.raises(ReservedMarkerError):
            segment_word("a</w>", LOW)

    def test_rank_order_not_priority(self) -> None:
        """Test a later duplicate merge result does not jump ahead of earlier rules."""
        # "abc" is produced at rank 1 and again at rank 3
        table = table_from_pairs(("b", "c"), ("a", "bc"), ("a", "b"), ("ab", "c"))
        for token in ["abc", "abcabc", "aabbcc", "cab", "abbc"]:
            assert segment_word(token, table) == segment_word_reference(token, table)

    def test_cache_is_transparent(self) -> None:
        """Test cached results equal fresh ones and are not aliased."""
        segmenter = Segmenter(LOW)
        first = segmenter.segment_word("lower")
        first.append("junk")
        assert segmenter.segment_word("lower") == ["low", "e", "r", "</w>"]


class TestSegmentLine:
    """Tests for segment_line."""

    def test_low_lower(self) -> None:
        """Test joiner marking on two words."""
        assert segment_line("low lower", LOW) == "low low@@ e@@ r"

    def test_empty_line(self) -> None:
        """Test an empty line stays empty."""
        assert segment_line("", LOW) == ""

    def test_character_fallback(self) -> None:
        """Test an empty table marks every non-final character."""
        assert segment_line("lowest", EMPTY) == "l@@ o@@ w@@ e@@ s@@ t"

    def test_fused_marker_stripped(self) -> None:
        """Test a word-final symbol with a fused marker is rendered bare."""
        table = table_from_pairs(("w", "</w>"), ("o", "w</w>"))
        assert segment_line("low", table) == "l@@ ow"

    def test_custom_joiner(self) -> None:
        """Test a non-default joiner."""
        conv = JoinerConvention(joiner="##")
        assert segment_line("low lower", LOW, conv) == "low low## e## r"

    def test_word_count_preserved(self) -> None:
        """Test the number of joiner-grouped words equals the token count."""
        line = "the lower lowest slow"
        out = segment_line(line, LOW)
        assert sum(1 for piece in out.split() if not piece.endswith("@@")) == 4

    def test_monotone_in_table_prefix(self) -> None:
        """Test shorter table prefixes never produce fewer subwords."""
        corpus_lines = ["the lower lowest slower flows below", "low low lower newer"]
        table = train_bpe(init_corpus(corpus_lines), 30, SamplingMethod.STANDARD)
        for line in corpus_lines:
            full = len(segment_line(line, table).split())
            for k in range(table.learned + 1):
                assert len(segment_line(line, table.truncated(k)).split()) >= full


class TestDesegmentLine:
    """Tests for desegment_line."""

    @pytest.mark.parametrize(
        ("segmented", "original"),
        [
            ("low low@@ e@@ r", "low lower"),
            ("plain text", "plain text"),
            ("l@@ o@@ w", "low"),
            ("trailing@@", "trailing"),
            ("", ""),
        ],
    )
    def test_desegment(self, segmented: str, original: str) -> None:
        """Test joiner removal."""
        assert desegment_line(segmented) == original

    def test_idempotent_on_plain_text(self) -> None:
        """Test repeated desegmentation of plain text is a no-op."""
        assert desegment_line(desegment_line("a b c")) == "a b c"

    def test_roundtrip(self) -> None:
        """Test desegment(segment(x)) == x."""
        table = train_bpe(init_corpus(["the cat sat on the mat"]), 10, SamplingMethod.UNIFORM, 4)
        for line in ["the cat sat on the mat", "a matter of cats", "", "x"]:
            assert desegment_line(segment_line(line, table)) == line

    def test_custom_joiner_roundtrip(self) -> None:
        """Test roundtrip with a custom joiner."""
        conv = JoinerConvention(joiner="~")
        assert desegment_line(segment_line("low lowest", LOW, conv), conv) == "low lowest"


class TestSegmentLines:
    """Tests for segment_lines."""

    def test_sequential(self) -> None:
        """Test the streaming form matches per-line segmentation."""
        lines = ["low lower", "", "lowest"]
        assert list(segment_lines(lines, LOW)) == [segment_line(x, LOW) for x in lines]

    def test_workers_preserve_order(self) -> None:
        """Test multi-process segmentation keeps input order."""
        lines = [f"low lower {'x' * (i % 7)} lowest" for i in range(2500)]
        expected = [segment_line(x, LOW) for x in lines]
        assert list(segment_lines(lines, LOW, workers=2)) == expected
