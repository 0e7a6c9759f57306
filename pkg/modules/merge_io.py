"""Merge file serialization.

This module handles:
- Writing merge tables as `#version: 0.2` merge lists (one "left right" per line)
- Writing and reading the `<mergefile>.meta` provenance sidecar
- Reading merge files back with line-numbered parse errors and
  constructibility validation
"""

import logging
from collections.abc import Callable, Iterable
from pathlib import Path
from typing import TextIO, TypeVar

from pydantic import ValidationError

from modules.config import MERGE_FILE_HEADER, METADATA_SUFFIX
from modules.validation import (
    MergeFileParseError,
    MergeIOError,
    MergeRule,
    MergeTable,
    MergeTableValidationError,
    SamplingMethod,
    find_unconstructible_rank,
)

logger = logging.getLogger(__name__)

METADATA_KEYS = ("method", "seed", "requested", "learned", "earlyStopped")

T = TypeVar("T")


def format_merges(table: MergeTable) -> str:
    """Render the merge file body: header line, then one rule per line in rank order."""
    lines = [MERGE_FILE_HEADER]
    lines.extend(f"{rule.left} {rule.right}" for rule in table.rules)
    return "\n".join(lines) + "\n"


def format_metadata(table: MergeTable) -> str:
    """Render the sidecar as key=value lines; unknown provenance is omitted."""
    values: dict[str, str | None] = {
        "method": table.method.value if table.method is not None else None,
        "seed": str(table.seed) if table.seed is not None else None,
        "requested": str(table.requested_merges) if table.requested_merges is not None else None,
        "learned": str(table.learned),
        "earlyStopped": (
            str(table.early_stopped).lower() if table.early_stopped is not None else None
        ),
    }
    return "".join(f"{key}={value}\n" for key, value in values.items() if value is not None)


def write_merges(table: MergeTable, destination: TextIO) -> None:
    """Write the merge list to an open text stream."""
    destination.write(format_merges(table))


def write_metadata(table: MergeTable, destination: TextIO) -> None:
    """Write the provenance sidecar to an open text stream."""
    destination.write(format_metadata(table))


def metadata_path(path: str | Path) -> Path:
    """Sidecar location for a merge file."""
    path = Path(path)
    return path.with_name(path.name + METADATA_SUFFIX)


def save_merge_table(table: MergeTable, path: str | Path) -> Path:
    """Write ``table`` to ``path`` and its sidecar to ``path`` + ".meta".

    Args:
        table: Merge table to persist
        path: Merge file destination

    Returns:
        Path of the sidecar file

    Raises:
        MergeIOError: If either file cannot be written
    """
    path = Path(path)
    meta = metadata_path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="\n") as f:
            write_merges(table, f)
        with meta.open("w", encoding="utf-8", newline="\n") as f:
            write_metadata(table, f)
    except OSError as e:
        raise MergeIOError(f"Failed to write merge file {path}: {e}") from e

    logger.info(f"Saved {table.learned} merges to {path} (sidecar {meta})")
    return meta


def _parse_metadata(source: Iterable[str]) -> dict[str, tuple[int, str]]:
    values: dict[str, tuple[int, str]] = {}
    for line_number, raw in enumerate(source, start=1):
        line = raw.rstrip("\r\n")
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise MergeFileParseError(line_number, f"expected key=value in sidecar, got {line!r}")
        if key not in METADATA_KEYS:
            logger.debug(f"Ignoring unknown sidecar key {key!r}")
            continue
        values[key] = (line_number, value)
    return values


def _parse_bool(value: str) -> bool:
    if value in ("true", "false"):
        return value == "true"
    raise ValueError(f"expected true or false, got {value!r}")


def _meta_value(
    fields: dict[str, tuple[int, str]], key: str, convert: Callable[[str], T]
) -> T | None:
    if key not in fields:
        return None
    line_number, value = fields[key]
    try:
        return convert(value)
    except ValueError as e:
        raise MergeFileParseError(line_number, f"invalid sidecar value for {key}: {e}") from e


def read_merges(source: Iterable[str], metadata: Iterable[str] | None = None) -> MergeTable:
    """Read a merge table from merge file lines and an optional sidecar.

    Args:
        source: Lines of the merge file (header first)
        metadata: Lines of the sidecar; None leaves provenance unknown

    Returns:
        MergeTable with ranks taken from line order

    Raises:
        MergeFileParseError: Missing header, or a line that is not two symbols
        MergeTableValidationError: A rule uses a symbol not constructible from
            earlier rules, or the sidecar disagrees with the body
    """
    lines = iter(source)
    header = next(lines, None)
    if header is None or header.rstrip("\r\n") != MERGE_FILE_HEADER:
        raise MergeFileParseError(1, f"expected header {MERGE_FILE_HEADER!r}")

    rules: list[MergeRule] = []
    for line_number, raw in enumerate(lines, start=2):
        fields = raw.rstrip("\r\n").split(" ")
        if len(fields) != 2 or not all(fields):
            raise MergeFileParseError(
                line_number, f"expected 2 space-separated symbols, got {raw.rstrip()!r}"
            )
        left, right = fields
        try:
            rules.append(MergeRule(left=left, right=right, merged=left + right, rank=len(rules)))
        except ValidationError as e:
            raise MergeFileParseError(line_number, f"invalid symbol: {e.errors()[0]['msg']}") from e

    bad_rank = find_unconstructible_rank(rules)
    if bad_rank is not None:
        rule = rules[bad_rank]
        raise MergeTableValidationError(
            bad_rank, f"({rule.left}, {rule.right}) uses a symbol no earlier rule produces"
        )

    fields_meta = _parse_metadata(metadata) if metadata is not None else {}
    method = _meta_value(fields_meta, "method", SamplingMethod)
    seed = _meta_value(fields_meta, "seed", int)
    requested = _meta_value(fields_meta, "requested", int)
    learned = _meta_value(fields_meta, "learned", int)
    early = _meta_value(fields_meta, "earlyStopped", _parse_bool)

    if learned is not None and learned != len(rules):
        raise MergeTableValidationError(
            min(learned, len(rules)),
            f"sidecar records {learned} learned rules but the file holds {len(rules)}",
        )
    if requested is not None and requested < len(rules):
        raise MergeTableValidationError(
            requested, f"rule beyond the requested budget of {requested}"
        )

    return MergeTable(
        rules=rules,
        method=method,
        seed=seed,
        requested_merges=requested,
        early_stopped=early,
    )


def load_merge_table(path: str | Path) -> MergeTable:
    """Read a merge file and, if present, its sidecar.

    Raises:
        MergeIOError: If the merge file cannot be read
        MergeFileParseError: See read_merges
        MergeTableValidationError: See read_merges
    """
    path = Path(path)
    meta = metadata_path(path)
    try:
        with path.open(encoding="utf-8", newline="") as f:
            if meta.exists():
                with meta.open(encoding="utf-8", newline="") as m:
                    table = read_merges(f, m)
            else:
                logger.info(f"No sidecar at {meta}; provenance unknown")
                table = read_merges(f)
    except OSError as e:
        raise MergeIOError(f"Failed to read merge file {path}: {e}") from e

    logger.info(f"Loaded {table.learned} merges from {path}")
    return table
