"""Command-line interface for subword-sampler.

Usage:
    # Learn merges (standard BPE or a randomized variant)
    python cli.py train corpus.tok -o codes.bpe --merges 2000 --method uniform --seed 3

    # Segment and restore
    python cli.py apply corpus.tok -c codes.bpe -o corpus.bpe
    python cli.py desegment corpus.bpe -o corpus.restored

    # Diagnostics
    python cli.py stats corpus train.tok dev.tok test.tok
    python cli.py stats segmentation corpus.tok corpus.bpe --threshold 100
    python cli.py compare corpus.tok standard.bpe uniform.bpe

    # Replication grid
    python cli.py sweep corpus.tok --methods standard,uniform --merges 200,500 --seeds 0..9
"""

import json
import logging
import sys
from collections import deque
from collections.abc import Iterator
from contextlib import contextmanager
from typing import TextIO

import click
from pydantic import ValidationError

from modules.bpe_core import init_corpus
from modules.config import (
    DEFAULT_COVERAGE_THRESHOLD,
    DEFAULT_JOINER,
    DEFAULT_METHOD,
    DEFAULT_SEED,
    DEFAULT_SWEEP_BUDGETS,
    DEFAULT_WORKERS,
)
from modules.merge_io import load_merge_table, save_merge_table
from modules.segmenter import desegment_line, segment_lines
from modules.stats import (
    compare_reports,
    corpus_stats,
    coverage,
    format_corpus_table,
    format_key_value,
    format_segmentation_table,
    segmentation_report,
)
from modules.sweep import METRICS, format_sweep_key_value, format_sweep_table, run_sweep
from modules.trainer import train_bpe
from modules.validation import (
    AlignmentError,
    ComparabilityError,
    MergeFileParseError,
    RunConfig,
    SamplingMethod,
)

# Configure root logger; stdout carries data only
logging.basicConfig(
    level=logging.WARNING,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    handlers=[logging.StreamHandler(sys.stderr)],
)

logger = logging.getLogger(__name__)

EXIT_IO = 3
EXIT_PARSE = 4
EXIT_VALIDATION = 5
EXIT_ALIGNMENT = 6

METHOD_CHOICE = click.Choice([m.value for m in SamplingMethod])
FORMAT_CHOICE = click.Choice(["text", "kv", "json"])


class CommandError(click.ClickException):
    """One-line diagnostic with an exit code per error class."""

    def __init__(self, kind: str, message: str, exit_code: int) -> None:
        super().__init__(f"{kind} error: {message}")
        self.exit_code = exit_code


def _one_line(exc: Exception) -> str:
    if isinstance(exc, ValidationError):
        return "; ".join(
            f"{'.'.join(str(part) for part in err['loc']) or 'value'}: {err['msg']}"
            for err in exc.errors()
        )
    text = str(exc).strip()
    return text.splitlines()[0] if text else type(exc).__name__


@contextmanager
def error_boundary() -> Iterator[None]:
    """Translate domain exceptions into CommandError."""
    try:
        yield
    except MergeFileParseError as e:
        raise CommandError("parse", _one_line(e), EXIT_PARSE) from e
    except (AlignmentError, ComparabilityError) as e:
        raise CommandError("alignment", _one_line(e), EXIT_ALIGNMENT) from e
    except ValueError as e:
        raise CommandError("validation", _one_line(e), EXIT_VALIDATION) from e
    except OSError as e:
        raise CommandError("I/O", _one_line(e), EXIT_IO) from e


def _lines(stream: TextIO) -> Iterator[str]:
    for line in stream:
        yield line.rstrip("\n")


def _lines_keeping_endings(stream: TextIO, endings: deque[str]) -> Iterator[str]:
    """Like _lines, but queue each line's terminator ("" for an unterminated last line)."""
    for line in stream:
        text = line.rstrip("\n")
        endings.append(line[len(text) :])
        yield text


def _parse_int_list(value: str, option: str) -> list[int]:
    """Parse "200,500" or "0..9" (inclusive ranges) into a de-duplicated list."""
    out: list[int] = []
    for part in value.split(","):
        part = part.strip()
        try:
            if ".." in part:
                lo, hi = part.split("..", 1)
                out.extend(range(int(lo), int(hi) + 1))
            else:
                out.append(int(part))
        except ValueError as e:
            raise click.BadParameter(f"cannot parse {part!r}", param_hint=option) from e
    return list(dict.fromkeys(out))


def _parse_methods(value: str) -> list[SamplingMethod]:
    methods = []
    for part in value.split(","):
        try:
            methods.append(SamplingMethod(part.strip()))
        except ValueError as e:
            raise click.BadParameter(f"unknown method {part!r}", param_hint="--methods") from e
    return list(dict.fromkeys(methods))


def _dump_json(payload: object) -> None:
    click.echo(json.dumps(payload, indent=2))


@click.group()
@click.option("--verbose", "-v", is_flag=True, help="Log progress at DEBUG level")
@click.option("--log-file", type=click.Path(dir_okay=False), help="Also write a DEBUG log here")
@click.pass_context
def cli(ctx: click.Context, verbose: bool, log_file: str | None) -> None:
    """Subword sampler - BPE with greedy and randomized merge selection."""
    root = logging.getLogger()
    root.setLevel(logging.DEBUG if verbose else logging.WARNING)

    if log_file:
        file_handler = logging.FileHandler(log_file, encoding="utf-8")
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(
            logging.Formatter("%(asctime)s - %(name)s - %(levelname)s - %(message)s")
        )
        root.addHandler(file_handler)
        root.setLevel(logging.DEBUG)
        # Console verbosity stays as requested
        for handler in root.handlers:
            if handler is not file_handler:
                handler.setLevel(logging.DEBUG if verbose else logging.WARNING)

        def detach_log_file() -> None:
            root.removeHandler(file_handler)
            file_handler.close()

        ctx.call_on_close(detach_log_file)


@cli.command()
@click.argument("input_file", type=click.File("r", encoding="utf-8"), default="-")
@click.option("--output", "-o", required=True, type=click.Path(dir_okay=False), help="Merge file")
@click.option("--merges", "-m", required=True, type=int, help="Number of merges to learn")
@click.option("--method", type=METHOD_CHOICE, default=DEFAULT_METHOD, help="Selection policy")
@click.option("--seed", type=int, default=DEFAULT_SEED, help="Random seed")
@click.option("--full-recount", is_flag=True, help="Recount all pairs after every merge")
@click.option("--workers", type=int, default=DEFAULT_WORKERS, help="Processes for pair counting")
def train(
    input_file: TextIO,
    output: str,
    merges: int,
    method: str,
    seed: int,
    full_recount: bool,
    workers: int,
) -> None:
    """Learn BPE merges from a tokenized corpus.

    Output:
        - Merge file: OUTPUT (`#version: 0.2` header, one "left right" per line)
        - Sidecar: OUTPUT.meta (method, seed, requested, learned, earlyStopped)
    """
    with error_boundary():
        config = RunConfig(
            command="train",
            input_path=input_file.name,
            output_path=output,
            merges=merges,
            method=method,
            seed=seed,
        )
        corpus = init_corpus(_lines(input_file))
        table = train_bpe(
            corpus,
            config.merges,
            config.method,
            config.seed,
            incremental=not full_recount,
            workers=workers,
        )
        save_merge_table(table, output)

    # Early exhaustion is reported by the trainer's WARNING log on stderr
    click.echo(f"Learned {table.learned} merges ({config.method.value}, seed {config.seed})")


@cli.command()
@click.argument("input_file", type=click.File("r", encoding="utf-8"), default="-")
@click.option(
    "--codes", "-c", required=True, type=click.Path(exists=True, dir_okay=False), help="Merge file"
)
@click.option("--output", "-o", type=click.File("w", encoding="utf-8", lazy=False), default="-")
@click.option("--joiner", default=DEFAULT_JOINER, help="Suffix for non-final subwords")
@click.option("--workers", type=int, default=DEFAULT_WORKERS, help="Segmentation processes")
def apply(input_file: TextIO, codes: str, output: TextIO, joiner: str, workers: int) -> None:
    """Segment tokenized text with a learned merge file."""
    with error_boundary():
        config = RunConfig(command="apply", input_path=input_file.name, joiner=joiner)
        table = load_merge_table(codes)
        endings: deque[str] = deque()
        lines = _lines_keeping_endings(input_file, endings)
        for line in segment_lines(lines, table, config.convention, workers):
            output.write(line + endings.popleft())


@cli.command()
@click.argument("input_file", type=click.File("r", encoding="utf-8"), default="-")
@click.option("--output", "-o", type=click.File("w", encoding="utf-8", lazy=False), default="-")
@click.option("--joiner", default=DEFAULT_JOINER, help="Suffix for non-final subwords")
def desegment(input_file: TextIO, output: TextIO, joiner: str) -> None:
    """Restore tokenized text from joiner-marked subwords."""
    with error_boundary():
        config = RunConfig(command="desegment", input_path=input_file.name, joiner=joiner)
        endings: deque[str] = deque()
        for line in _lines_keeping_endings(input_file, endings):
            output.write(desegment_line(line, config.convention) + endings.popleft())


@cli.group()
def stats() -> None:
    """Corpus and segmentation diagnostics."""


@stats.command("corpus")
@click.argument("files", nargs=-1, required=True, type=click.File("r", encoding="utf-8"))
@click.option("--format", "fmt", type=FORMAT_CHOICE, default="text", help="Output format")
def stats_corpus(files: tuple[TextIO, ...], fmt: str) -> None:
    """Sentence, token and type counts, one row per FILE."""
    with error_boundary():
        results = [corpus_stats(_lines(f), name=f.name) for f in files]

    if fmt == "json":
        _dump_json([r.model_dump() for r in results])
    elif fmt == "kv":
        for i, r in enumerate(results):
            prefix = f"corpus.{i}." if len(results) > 1 else ""
            click.echo(format_key_value(r, prefix=prefix), nl=False)
    else:
        click.echo(format_corpus_table(results), nl=False)


@stats.command("segmentation")
@click.argument("original", type=click.File("r", encoding="utf-8"))
@click.argument("segmented", type=click.File("r", encoding="utf-8"))
@click.option("--joiner", default=DEFAULT_JOINER, help="Suffix for non-final subwords")
@click.option("--threshold", type=int, default=None, help="Also report coverage at this count")
@click.option("--format", "fmt", type=FORMAT_CHOICE, default="text", help="Output format")
def stats_segmentation(
    original: TextIO, segmented: TextIO, joiner: str, threshold: int | None, fmt: str
) -> None:
    """Fertility and subword vocabulary of SEGMENTED relative to ORIGINAL."""
    with error_boundary():
        config = RunConfig(
            command="stats segmentation",
            joiner=joiner,
            threshold=threshold if threshold is not None else DEFAULT_COVERAGE_THRESHOLD,
        )
        report = segmentation_report(_lines(original), _lines(segmented), config.convention)
        cov = coverage(report, config.threshold) if threshold is not None else None

    if fmt == "json":
        payload = report.model_dump(exclude={"subword_vocab"})
        payload["vocab_size"] = report.vocab_size
        if cov is not None:
            payload["coverage"] = cov.model_dump()
        _dump_json(payload)
    elif fmt == "kv":
        click.echo(format_key_value(report), nl=False)
        if cov is not None:
            click.echo(format_key_value(cov, prefix="coverage."), nl=False)
    else:
        click.echo(format_segmentation_table(report, cov), nl=False)


@cli.command()
@click.argument("original", type=click.Path(exists=True, dir_okay=False))
@click.argument("segmented_a", type=click.Path(exists=True, dir_okay=False))
@click.argument("segmented_b", type=click.Path(exists=True, dir_okay=False))
@click.option("--joiner", default=DEFAULT_JOINER, help="Suffix for non-final subwords")
@click.option("--format", "fmt", type=FORMAT_CHOICE, default="text", help="Output format")
def compare(original: str, segmented_a: str, segmented_b: str, joiner: str, fmt: str) -> None:
    """Length ratio of SEGMENTED_B to SEGMENTED_A over a shared ORIGINAL."""
    with error_boundary():
        config = RunConfig(command="compare", input_path=original, joiner=joiner)
        reports = []
        for path in (segmented_a, segmented_b):
            with open(original, encoding="utf-8") as orig, open(path, encoding="utf-8") as seg:
                reports.append(segmentation_report(_lines(orig), _lines(seg), config.convention))
        ratio = compare_reports(reports[0], reports[1])

    a, b = reports
    if fmt == "json":
        _dump_json({"length_ratio": ratio, "fertility_a": a.fertility, "fertility_b": b.fertility})
    elif fmt == "kv":
        click.echo(f"length_ratio={ratio!r}")
        click.echo(f"fertility_a={a.fertility!r}")
        click.echo(f"fertility_b={b.fertility!r}")
    else:
        click.echo(f"Length ratio (B/A): {ratio:.4f}")
        click.echo(f"Fertility A: {a.fertility:.4f}  ({segmented_a})")
        click.echo(f"Fertility B: {b.fertility:.4f}  ({segmented_b})")


@cli.command()
@click.argument("corpus_file", type=click.File("r", encoding="utf-8"))
@click.option(
    "--methods",
    default=",".join(m.value for m in SamplingMethod),
    help="e.g. standard,uniform",
)
@click.option(
    "--merges",
    "budgets",
    default=",".join(str(b) for b in DEFAULT_SWEEP_BUDGETS),
    help="e.g. 200,500",
)
@click.option("--seeds", default="0..9", help="e.g. 0..9 or 0,1,2")
@click.option(
    "--eval", "eval_file", type=click.File("r", encoding="utf-8"), help="Held-out file to segment"
)
@click.option(
    "--threshold", type=int, default=DEFAULT_COVERAGE_THRESHOLD, help="Coverage threshold"
)
@click.option("--joiner", default=DEFAULT_JOINER, help="Suffix for non-final subwords")
@click.option("--workers", type=int, default=DEFAULT_WORKERS, help="Parallel runs")
@click.option("--format", "fmt", type=FORMAT_CHOICE, default="text", help="Output format")
def sweep(
    corpus_file: TextIO,
    methods: str,
    budgets: str,
    seeds: str,
    eval_file: TextIO | None,
    threshold: int,
    joiner: str,
    workers: int,
    fmt: str,
) -> None:
    """Train methods x merge budgets x seeds and tabulate mean (standard error).

    Output:
        Fertility, subword vocabulary size and coverage grids (merges x methods)
    """
    method_list = _parse_methods(methods)
    budget_list = _parse_int_list(budgets, "--merges")
    seed_list = _parse_int_list(seeds, "--seeds")

    with error_boundary():
        for budget in budget_list:
            RunConfig(command="sweep", merges=budget, threshold=threshold, joiner=joiner)
        for seed in seed_list:
            RunConfig(command="sweep", seed=seed)
        convention = RunConfig(command="sweep", joiner=joiner).convention

        train_lines = list(_lines(corpus_file))
        eval_lines = list(_lines(eval_file)) if eval_file is not None else train_lines
        corpus = init_corpus(train_lines)
        cells = run_sweep(
            corpus, eval_lines, method_list, budget_list, seed_list, threshold, convention, workers
        )

    if fmt == "json":
        _dump_json(
            [
                {
                    "method": c["method"],
                    "merges": c["merges"],
                    **{m: c[m].model_dump() for m in METRICS},  # type: ignore[literal-required]
                }
                for c in cells
            ]
        )
    elif fmt == "kv":
        click.echo(format_sweep_key_value(cells), nl=False)
    else:
        for title, metric in (
            ("Fertility", "fertility"),
            ("Subword vocabulary", "vocab_size"),
            (f"Coverage (>= {threshold})", "coverage"),
        ):
            click.echo(f"{title}: mean (standard error) over {len(seed_list)} seeds")
            click.echo(format_sweep_table(cells, metric))


if __name__ == "__main__":
    cli()
