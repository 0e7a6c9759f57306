"""Schema validation using Pydantic models.

This module defines:
- Error classes shared by the training, segmentation and I/O modules
- Pydantic models for merge tables, run configuration and every report
- Invariant checks for merge tables (rank order, constructibility)
"""

from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from modules.config import (
    COVERAGE_TARGET,
    DEFAULT_COVERAGE_THRESHOLD,
    DEFAULT_JOINER,
    DEFAULT_METHOD,
    DEFAULT_SEED,
    END_OF_WORD,
    UINT64_MASK,
)

Symbol = str
Pair = tuple[str, str]


class ReservedMarkerError(ValueError):
    """Raised when input text contains the end-of-word marker literally."""

    def __init__(self, token: str) -> None:
        super().__init__(f"Token {token!r} contains reserved marker {END_OF_WORD!r}")
        self.token = token


class NoPairsError(ValueError):
    """Raised when a merge pair is requested from empty pair counts."""


class MergeFileParseError(ValueError):
    """Raised for a malformed merge file line."""

    def __init__(self, line_number: int, message: str) -> None:
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class MergeTableValidationError(ValueError):
    """Raised when a merge table violates rank or constructibility invariants."""

    def __init__(self, rank: int, message: str) -> None:
        super().__init__(f"rank {rank}: {message}")
        self.rank = rank


class MergeIOError(OSError):
    """Raised when reading or writing a merge file fails at the I/O level."""


class AlignmentError(ValueError):
    """Raised when original and segmented streams do not line up."""

    def __init__(self, line_number: int, message: str) -> None:
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class ComparabilityError(ValueError):
    """Raised when two segmentation reports cover different originals."""


class SamplingMethod(str, Enum):
    """Merge-selection policy."""

    STANDARD = "standard"
    SOFTMAX = "softmax"
    COUNTPROP = "countprop"
    UNIFORM = "uniform"


def check_symbol(symbol: str) -> str:
    """Validate a single symbol: non-empty, no whitespace, marker only as suffix.

    Args:
        symbol: Symbol text

    Returns:
        The symbol unchanged

    Raises:
        ValueError: If any symbol invariant is violated
    """
    if not symbol:
        raise ValueError("Symbol must be non-empty")
    if any(ch.isspace() for ch in symbol):
        raise ValueError(f"Symbol {symbol!r} contains whitespace")
    head = symbol[: -len(END_OF_WORD)] if symbol.endswith(END_OF_WORD) else symbol
    if END_OF_WORD in head:
        raise ValueError(f"Symbol {symbol!r} contains {END_OF_WORD!r} before its end")
    return symbol


def is_atomic(symbol: str) -> bool:
    """True for symbols present before any merge: one character or the marker."""
    return len(symbol) == 1 or symbol == END_OF_WORD


class MergeRule(BaseModel):
    """A learned merge (left, right) -> left+right at a given rank."""

    model_config = ConfigDict(frozen=True)

    left: str
    right: str
    merged: str
    rank: int = Field(ge=0, description="Position in the merge table (0-indexed)")

    @field_validator("left", "right", "merged")
    @classmethod
    def check_symbols(cls, v: str) -> str:
        return check_symbol(v)

    @model_validator(mode="after")
    def check_concatenation(self) -> "MergeRule":
        if self.merged != self.left + self.right:
            raise ValueError(
                f"Merged symbol {self.merged!r} is not {self.left!r} + {self.right!r}"
            )
        return self

    @classmethod
    def from_pair(cls, pair: Pair, rank: int) -> "MergeRule":
        """Build the rule that merges ``pair`` at ``rank``."""
        left, right = pair
        return cls(left=left, right=right, merged=left + right, rank=rank)

    @property
    def pair(self) -> Pair:
        return (self.left, self.right)


def find_unconstructible_rank(rules: list[MergeRule]) -> int | None:
    """Return the first rank whose symbols cannot be built from earlier rules.

    A symbol is constructible at rank r if it is atomic (a single character or
    the end-of-word marker) or is the merged symbol of some rule with rank < r.

    Args:
        rules: Rules in rank order

    Returns:
        Offending rank, or None if every rule is constructible
    """
    available: set[str] = set()
    for rule in rules:
        for symbol in (rule.left, rule.right):
            if not is_atomic(symbol) and symbol not in available:
                return rule.rank
        available.add(rule.merged)
    return None


class MergeTable(BaseModel):
    """Ordered merge rules plus training provenance.

    Provenance fields are None when unknown (merge file read without sidecar).
    """

    rules: list[MergeRule] = Field(default_factory=list)
    method: SamplingMethod | None = None
    seed: int | None = Field(default=None, ge=0, le=UINT64_MASK)
    requested_merges: int | None = Field(default=None, ge=0)
    early_stopped: bool | None = None

    @model_validator(mode="after")
    def check_rules(self) -> "MergeTable":
        """Validate rank sequence, budget and constructibility."""
        for expected, rule in enumerate(self.rules):
            if rule.rank != expected:
                raise ValueError(f"Rule at position {expected} has rank {rule.rank}")
        if self.requested_merges is not None and len(self.rules) > self.requested_merges:
            raise ValueError(
                f"Table holds {len(self.rules)} rules but only "
                f"{self.requested_merges} were requested"
            )
        bad_rank = find_unconstructible_rank(self.rules)
        if bad_rank is not None:
            raise ValueError(f"Rule at rank {bad_rank} uses a symbol not yet constructed")
        return self

    @property
    def learned(self) -> int:
        return len(self.rules)

    def truncated(self, k: int) -> "MergeTable":
        """Return a table holding only the first ``k`` rules."""
        return self.model_copy(update={"rules": self.rules[:k]})


def check_joiner(joiner: str) -> str:
    """Validate a joiner: non-empty, no whitespace, no overlap with the marker."""
    if not joiner:
        raise ValueError("Joiner must be non-empty")
    if any(ch.isspace() for ch in joiner):
        raise ValueError(f"Joiner {joiner!r} contains whitespace")
    if joiner in END_OF_WORD or END_OF_WORD in joiner:
        raise ValueError(f"Joiner {joiner!r} collides with {END_OF_WORD!r}")
    return joiner


class JoinerConvention(BaseModel):
    """Output convention for non-final subwords."""

    model_config = ConfigDict(frozen=True)

    joiner: str = Field(default=DEFAULT_JOINER, description="Suffix on non-final subwords")

    @field_validator("joiner")
    @classmethod
    def validate_joiner(cls, v: str) -> str:
        return check_joiner(v)


class CorpusStats(BaseModel):
    """Sentence, token and type counts for one tokenized corpus."""

    name: str = Field(default="", description="Label for table output (file name)")
    sentences: int = Field(ge=0)
    tokens: int = Field(ge=0)
    types: int = Field(ge=0)
    type_token_ratio: float | None = Field(
        default=None, gt=0, le=1, description="types / tokens; None when tokens == 0"
    )

    @model_validator(mode="after")
    def check_ratio(self) -> "CorpusStats":
        if self.types > self.tokens:
            raise ValueError(f"types ({self.types}) exceeds tokens ({self.tokens})")
        if self.tokens == 0 and self.type_token_ratio is not None:
            raise ValueError("type_token_ratio must be None for an empty corpus")
        if self.tokens > 0 and self.type_token_ratio is None:
            raise ValueError("type_token_ratio missing for a non-empty corpus")
        return self


class SegmentationReport(BaseModel):
    """Subword counts for a segmentation of a tokenized corpus."""

    subword_tokens: int = Field(ge=0)
    original_tokens: int = Field(ge=0)
    fertility: float | None = Field(
        default=None, ge=1, description="subword_tokens / original_tokens"
    )
    subword_vocab: dict[str, int] = Field(default_factory=dict)

    @property
    def vocab_size(self) -> int:
        return len(self.subword_vocab)


class CoverageReport(BaseModel):
    """Fraction of subword types seen at least ``threshold`` times."""

    threshold: int = Field(default=DEFAULT_COVERAGE_THRESHOLD, ge=0)
    fraction_at_or_above: float = Field(ge=0, le=1)
    passes95: bool

    @model_validator(mode="after")
    def check_verdict(self) -> "CoverageReport":
        if self.passes95 != (self.fraction_at_or_above >= COVERAGE_TARGET):
            raise ValueError("passes95 disagrees with fraction_at_or_above")
        return self


class ReplicationSummary(BaseModel):
    """Mean and standard error over replications."""

    mean: float
    std_error: float = Field(ge=0)
    n: int = Field(ge=2)


class RunConfig(BaseModel):
    """Validated command-line configuration shared by every command."""

    command: str
    input_path: str | None = None
    output_path: str | None = None
    merges: int = Field(default=1, gt=0)
    method: SamplingMethod = SamplingMethod(DEFAULT_METHOD)
    seed: int = Field(default=DEFAULT_SEED, ge=0, le=UINT64_MASK)
    joiner: str = DEFAULT_JOINER
    threshold: int = Field(default=DEFAULT_COVERAGE_THRESHOLD, ge=0)

    @field_validator("joiner")
    @classmethod
    def validate_joiner(cls, v: str) -> str:
        return check_joiner(v)

    @property
    def convention(self) -> JoinerConvention:
        return JoinerConvention(joiner=self.joiner)
