"""Replication sweep over methods x merge budgets x seeds.

This module handles:
- Training and evaluating one (method, merges, seed) run
- Running the grid sequentially or in worker processes (each run owns its RNG)
- Aggregating runs into mean (standard error) cells
"""

import logging
from collections.abc import Sequence
from itertools import product
from multiprocessing import Pool
from typing import TypedDict

from modules.bpe_core import WordTypeCorpus
from modules.segmenter import Segmenter
from modules.stats import coverage, format_columns, mean_std_error, segmentation_report
from modules.trainer import train_bpe
from modules.validation import (
    JoinerConvention,
    ReplicationSummary,
    SamplingMethod,
)

logger = logging.getLogger(__name__)


class SweepRun(TypedDict):
    """Intrinsic metrics for one trained table."""

    method: str
    merges: int
    seed: int
    learned: int
    fertility: float
    vocab_size: int
    coverage: float


class SweepCell(TypedDict):
    """Aggregate over seeds for one (method, merges) cell."""

    method: str
    merges: int
    fertility: ReplicationSummary
    vocab_size: ReplicationSummary
    coverage: ReplicationSummary


METRICS = ("fertility", "vocab_size", "coverage")


def run_once(
    corpus: WordTypeCorpus,
    eval_lines: Sequence[str],
    method: SamplingMethod,
    merges: int,
    seed: int,
    threshold: int,
    conv: JoinerConvention,
) -> SweepRun:
    """Train one table and measure its segmentation of ``eval_lines``."""
    table = train_bpe(corpus, merges, method, seed)
    segmenter = Segmenter(table, conv)
    segmented = [segmenter.segment_line(line) for line in eval_lines]
    report = segmentation_report(eval_lines, segmented, conv)
    if report.fertility is None:
        raise ValueError("Evaluation corpus has no tokens")
    cov = coverage(report, threshold)
    logger.info(
        f"Run {method.value}/{merges}/seed={seed}: fertility={report.fertility:.4f}, "
        f"vocab={report.vocab_size}"
    )
    return SweepRun(
        method=method.value,
        merges=merges,
        seed=seed,
        learned=table.learned,
        fertility=report.fertility,
        vocab_size=report.vocab_size,
        coverage=cov.fraction_at_or_above,
    )


_worker_args: tuple[WordTypeCorpus, Sequence[str], int, JoinerConvention] | None = None


def _init_worker(
    corpus: WordTypeCorpus, eval_lines: Sequence[str], threshold: int, conv: JoinerConvention
) -> None:
    global _worker_args
    _worker_args = (corpus, eval_lines, threshold, conv)


def _run_task(task: tuple[SamplingMethod, int, int]) -> SweepRun:
    assert _worker_args is not None
    corpus, eval_lines, threshold, conv = _worker_args
    method, merges, seed = task
    return run_once(corpus, eval_lines, method, merges, seed, threshold, conv)


def run_sweep(
    corpus: WordTypeCorpus,
    eval_lines: Sequence[str],
    methods: Sequence[SamplingMethod],
    budgets: Sequence[int],
    seeds: Sequence[int],
    threshold: int,
    conv: JoinerConvention | None = None,
    workers: int = 1,
) -> list[SweepCell]:
    """Run every (method, merges, seed) combination and aggregate over seeds.

    Args:
        corpus: Training corpus
        eval_lines: Tokenized lines to segment and measure
        methods: Selection policies (table columns)
        budgets: Merge budgets (table rows)
        seeds: Replication seeds; at least two
        threshold: Coverage threshold
        conv: Joiner convention
        workers: Worker processes; results do not depend on this

    Returns:
        One SweepCell per (merges, method), merges-major
    """
    if len(seeds) < 2:
        raise ValueError(f"A sweep needs at least 2 seeds, got {len(seeds)}")
    convention = conv or JoinerConvention()
    tasks = list(product(methods, budgets, seeds))
    logger.info(f"Sweep: {len(methods)} methods x {len(budgets)} budgets x {len(seeds)} seeds")

    if workers <= 1:
        runs = [
            run_once(corpus, eval_lines, m, b, s, threshold, convention) for m, b, s in tasks
        ]
    else:
        with Pool(
            processes=workers,
            initializer=_init_worker,
            initargs=(corpus, eval_lines, threshold, convention),
        ) as pool:
            runs = pool.map(_run_task, tasks)

    cells: list[SweepCell] = []
    for merges, method in product(budgets, methods):
        group = [r for r in runs if r["method"] == method.value and r["merges"] == merges]
        cells.append(
            SweepCell(
                method=method.value,
                merges=merges,
                fertility=mean_std_error([r["fertility"] for r in group]),
                vocab_size=mean_std_error([float(r["vocab_size"]) for r in group]),
                coverage=mean_std_error([r["coverage"] for r in group]),
            )
        )
    return cells


def format_sweep_table(cells: Sequence[SweepCell], metric: str) -> str:
    """Merges x methods grid of ``metric`` as "mean (se)"."""
    methods = list(dict.fromkeys(c["method"] for c in cells))
    budgets = list(dict.fromkeys(c["merges"] for c in cells))
    lookup = {
        (c["merges"], c["method"]): c[metric]  # type: ignore[literal-required]
        for c in cells
    }
    rows = []
    for merges in budgets:
        row = [f"{merges:,}"]
        for method in methods:
            summary: ReplicationSummary = lookup[(merges, method)]
            row.append(f"{summary.mean:.4f} ({summary.std_error:.4f})")
        rows.append(row)
    return format_columns(["Merges", *methods], rows)


def format_sweep_key_value(cells: Sequence[SweepCell]) -> str:
    """One ``cell.<method>.<merges>.<metric>.<field>=value`` line per statistic."""
    lines = []
    for cell in cells:
        for metric in METRICS:
            summary: ReplicationSummary = cell[metric]  # type: ignore[literal-required]
            key = f"cell.{cell['method']}.{cell['merges']}.{metric}"
            lines.append(f"{key}.mean={summary.mean!r}")
            lines.append(f"{key}.std_error={summary.std_error!r}")
            lines.append(f"{key}.n={summary.n}")
    return "\n".join(lines) + "\n"
