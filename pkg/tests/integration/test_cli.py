"""Integration tests for the command-line interface."""

import json
import logging
from pathlib import Path

import pytest
from click.testing import CliRunner

from cli import EXIT_ALIGNMENT, EXIT_IO, EXIT_PARSE, EXIT_VALIDATION, cli

CORPUS = "the lower lowest slower flows below\nlow low lower newer\nthe slow flow\n"


@pytest.fixture
def runner() -> CliRunner:
    return CliRunner()


@pytest.fixture
def corpus_file(tmp_path: Path) -> Path:
    path = tmp_path / "corpus.tok"
    path.write_text(CORPUS, encoding="utf-8")
    return path


def train(runner: CliRunner, corpus: Path, codes: Path, *extra: str) -> None:
    result = runner.invoke(cli, ["train", str(corpus), "-o", str(codes), *extra])
    assert result.exit_code == 0, result.output


class TestTrain:
    """Tests for the train command."""

    def test_hand_trace(self, runner: CliRunner, tmp_path: Path) -> None:
        """Test the low/lower corpus writes the expected merge file and sidecar."""
        corpus = tmp_path / "low.tok"
        corpus.write_text("low low lower\n", encoding="utf-8")
        codes = tmp_path / "codes.bpe"

        result = runner.invoke(
            cli, ["train", str(corpus), "-o", str(codes), "--method", "standard", "--merges", "2"]
        )

        assert result.exit_code == 0
        assert result.stdout == "Learned 2 merges (standard, seed 0)\n"
        assert codes.read_bytes() == b"#version: 0.2\nl o\nlo w\n"
        assert (tmp_path / "codes.bpe.meta").read_text(encoding="utf-8") == (
            "method=standard\nseed=0\nrequested=2\nlearned=2\nearlyStopped=false\n"
        )

    def test_uniform_sidecar(self, runner: CliRunner, corpus_file: Path, tmp_path: Path) -> None:
        """Test a uniform run records its provenance and respects the budget."""
        codes = tmp_path / "codes.bpe"
        train(runner, corpus_file, codes, "--method", "uniform", "--merges", "20", "--seed", "3")
        body = codes.read_text(encoding="utf-8").splitlines()
        assert body[0] == "#version: 0.2"
        assert len(body) - 1 <= 20
        meta = (tmp_path / "codes.bpe.meta").read_text(encoding="utf-8").splitlines()
        assert meta[:3] == ["method=uniform", "seed=3", "requested=20"]

    def test_early_stop_warning(
        self, runner: CliRunner, tmp_path: Path, caplog: pytest.LogCaptureFixture
    ) -> None:
        """Test exhaustion is warned about once and not treated as an error."""
        corpus = tmp_path / "ab.tok"
        corpus.write_text("ab\n", encoding="utf-8")
        codes = tmp_path / "codes.bpe"
        with caplog.at_level(logging.WARNING):
            result = runner.invoke(cli, ["train", str(corpus), "-o", str(codes), "--merges", "10"])
        assert result.exit_code == 0
        assert result.stdout == "Learned 2 merges (standard, seed 0)\n"
        warnings = [r for r in caplog.records if r.levelno == logging.WARNING]
        assert [r.getMessage() for r in warnings] == ["Pair set exhausted after 2 of 10 merges"]
        assert "earlyStopped=true" in (tmp_path / "codes.bpe.meta").read_text(encoding="utf-8")

    @pytest.mark.parametrize("method", ["standard", "softmax", "countprop", "uniform"])
    def test_deterministic(
        self, runner: CliRunner, corpus_file: Path, tmp_path: Path, method: str
    ) -> None:
        """Test identical invocations produce byte-identical files."""
        a, b = tmp_path / "a.bpe", tmp_path / "b.bpe"
        args = ["--method", method, "--merges", "25", "--seed", "11"]
        train(runner, corpus_file, a, *args)
        train(runner, corpus_file, b, *args)
        assert a.read_bytes() == b.read_bytes()

    def test_full_recount_matches(
        self, runner: CliRunner, corpus_file: Path, tmp_path: Path
    ) -> None:
        """Test the recount path writes the same merges."""
        a, b = tmp_path / "a.bpe", tmp_path / "b.bpe"
        train(runner, corpus_file, a, "--method", "countprop", "--merges", "25")
        train(runner, corpus_file, b, "--method", "countprop", "--merges", "25", "--full-recount")
        assert a.read_bytes() == b.read_bytes()

    def test_stdin_input(self, runner: CliRunner, tmp_path: Path) -> None:
        """Test reading the corpus from stdin."""
        codes = tmp_path / "codes.bpe"
        result = runner.invoke(cli, ["train", "-o", str(codes), "-m", "2"], input="low low lower\n")
        assert result.exit_code == 0
        assert codes.read_text(encoding="utf-8") == "#version: 0.2\nl o\nlo w\n"

    def test_log_file(self, runner: CliRunner, corpus_file: Path, tmp_path: Path) -> None:
        """Test --log-file captures training progress."""
        log_path = tmp_path / "run.log"
        codes = tmp_path / "codes.bpe"
        args = ["--log-file", str(log_path), "train", str(corpus_file), "-o", str(codes)]
        result = runner.invoke(cli, [*args, "-m", "3"])
        assert result.exit_code == 0
        assert "Training standard BPE" in log_path.read_text(encoding="utf-8")

    def test_log_file_handler_released(
        self, runner: CliRunner, corpus_file: Path, tmp_path: Path
    ) -> None:
        """Test repeated --log-file runs leave no file handlers on the root logger."""
        root = logging.getLogger()
        before = list(root.handlers)
        for name in ("a", "b", "c"):
            log_path = tmp_path / f"{name}.log"
            codes = tmp_path / f"{name}.bpe"
            args = ["--log-file", str(log_path), "train", str(corpus_file), "-o", str(codes)]
            result = runner.invoke(cli, [*args, "-m", "3"])
            assert result.exit_code == 0
            assert log_path.read_text(encoding="utf-8").count("Training standard BPE") == 1
        assert root.handlers == before
        assert not any(isinstance(h, logging.FileHandler) for h in root.handlers)


class TestApplyDesegment:
    """Tests for apply and desegment."""

    def test_apply_to_stdout(self, runner: CliRunner, tmp_path: Path) -> None:
        """Test segmentation of a line with the hand-traced table."""
        codes = tmp_path / "codes.bpe"
        codes.write_text("#version: 0.2\nl o\nlo w\n", encoding="utf-8")
        result = runner.invoke(cli, ["apply", "-c", str(codes)], input="low lower\n")
        assert result.exit_code == 0
        assert result.stdout == "low low@@ e@@ r\n"

    @pytest.mark.parametrize("method", ["standard", "uniform"])
    @pytest.mark.parametrize("text", [CORPUS, CORPUS.rstrip("\n"), CORPUS + "\n"])
    def test_roundtrip_bytes(
        self, runner: CliRunner, tmp_path: Path, method: str, text: str
    ) -> None:
        """Test apply then desegment restores the input byte for byte."""
        corpus_file = tmp_path / "corpus.tok"
        corpus_file.write_bytes(text.encode("utf-8"))
        codes = tmp_path / "codes.bpe"
        segmented = tmp_path / "corpus.bpe"
        restored = tmp_path / "corpus.restored"
        train(runner, corpus_file, codes, "--method", method, "--merges", "15", "--seed", "2")

        result = runner.invoke(
            cli, ["apply", str(corpus_file), "-c", str(codes), "-o", str(segmented)]
        )
        assert result.exit_code == 0
        assert "@@" in segmented.read_text(encoding="utf-8")

        result = runner.invoke(cli, ["desegment", str(segmented), "-o", str(restored)])
        assert result.exit_code == 0
        assert restored.read_bytes() == corpus_file.read_bytes()

    def test_custom_joiner(self, runner: CliRunner, tmp_path: Path) -> None:
        """Test the joiner option on both commands."""
        codes = tmp_path / "codes.bpe"
        codes.write_text("#version: 0.2\nl o\n", encoding="utf-8")
        result = runner.invoke(cli, ["apply", "-c", str(codes), "--joiner", "##"], input="low\n")
        assert result.stdout == "lo## w\n"
        result = runner.invoke(cli, ["desegment", "--joiner", "##"], input="lo## w\n")
        assert result.stdout == "low\n"

    def test_unterminated_last_line(self, runner: CliRunner, tmp_path: Path) -> None:
        """Test a missing final newline is not added by apply or desegment."""
        codes = tmp_path / "codes.bpe"
        codes.write_text("#version: 0.2\nl o\n", encoding="utf-8")
        result = runner.invoke(cli, ["apply", "-c", str(codes)], input="low\nslow")
        assert result.stdout == "lo@@ w\ns@@ lo@@ w"
        result = runner.invoke(cli, ["desegment"], input="lo@@ w\ns@@ lo@@ w")
        assert result.stdout == "low\nslow"

    def test_workers(self, runner: CliRunner, corpus_file: Path, tmp_path: Path) -> None:
        """Test parallel segmentation writes the same output."""
        codes = tmp_path / "codes.bpe"
        train(runner, corpus_file, codes, "--merges", "10")
        single = runner.invoke(cli, ["apply", str(corpus_file), "-c", str(codes)])
        multi = runner.invoke(cli, ["apply", str(corpus_file), "-c", str(codes), "--workers", "2"])
        assert multi.exit_code == 0
        assert multi.stdout == single.stdout


class TestStats:
    """Tests for the stats and compare commands."""

    def test_corpus_table(self, runner: CliRunner, tmp_path: Path) -> None:
        """Test one row per file with rounded ratio."""
        a = tmp_path / "a.tok"
        a.write_text("a b a\n", encoding="utf-8")
        b = tmp_path / "b.tok"
        b.write_text("a a\na a\n", encoding="utf-8")
        result = runner.invoke(cli, ["stats", "corpus", str(a), str(b)])
        assert result.exit_code == 0
        rows = result.stdout.splitlines()[2:]
        assert rows[0].split()[1:] == ["1", "3", "2", "0.67"]
        assert rows[1].split()[1:] == ["2", "4", "1", "0.25"]

    def test_corpus_kv(self, runner: CliRunner, tmp_path: Path) -> None:
        """Test key-value output for a single file."""
        a = tmp_path / "a.tok"
        a.write_text("x\n", encoding="utf-8")
        result = runner.invoke(cli, ["stats", "corpus", str(a), "--format", "kv"])
        assert "tokens=1" in result.stdout.splitlines()
        assert "type_token_ratio=1.0" in result.stdout.splitlines()

    def test_segmentation_with_threshold(self, runner: CliRunner, tmp_path: Path) -> None:
        """Test fertility and coverage in JSON output."""
        original = tmp_path / "orig.tok"
        original.write_text("ab\n" * 10, encoding="utf-8")
        segmented = tmp_path / "seg.bpe"
        segmented.write_text("a@@ b\n" * 10, encoding="utf-8")
        result = runner.invoke(
            cli,
            ["stats", "segmentation", str(original), str(segmented), "--threshold", "10",
             "--format", "json"],
        )
        assert result.exit_code == 0
        payload = json.loads(result.stdout)
        assert payload["fertility"] == 2.0
        assert payload["vocab_size"] == 2
        assert payload["coverage"] == {
            "threshold": 10,
            "fraction_at_or_above": 1.0,
            "passes95": True,
        }

    def test_compare(self, runner: CliRunner, tmp_path: Path) -> None:
        """Test the length ratio of two segmentations."""
        original = tmp_path / "orig.tok"
        original.write_text("low lower\n", encoding="utf-8")
        a = tmp_path / "a.bpe"
        a.write_text("low low@@ er\n", encoding="utf-8")
        b = tmp_path / "b.bpe"
        b.write_text("l@@ o@@ w l@@ o@@ w@@ e@@ r\n", encoding="utf-8")
        result = runner.invoke(cli, ["compare", str(original), str(a), str(b), "--format", "kv"])
        assert result.exit_code == 0
        assert result.stdout.splitlines() == [
            "length_ratio=2.6666666666666665",
            "fertility_a=1.5",
            "fertility_b=4.0",
        ]


class TestSweep:
    """Tests for the sweep command."""

    def test_grid(self, runner: CliRunner, corpus_file: Path) -> None:
        """Test a methods x budgets grid with mean (se) cells."""
        result = runner.invoke(
            cli,
            ["sweep", str(corpus_file), "--methods", "standard,uniform", "--merges", "5,10",
             "--seeds", "0..2", "--threshold", "1"],
        )
        assert result.exit_code == 0, result.output
        lines = result.stdout.splitlines()
        assert lines[0] == "Fertility: mean (standard error) over 3 seeds"
        assert lines[1].split() == ["Merges", "standard", "uniform"]
        assert lines[3].split()[0] == "5"
        assert lines[4].split()[0] == "10"
        # standard is seed-invariant
        assert lines[3].split()[2] == "(0.0000)"

    def test_json_cells(self, runner: CliRunner, corpus_file: Path, tmp_path: Path) -> None:
        """Test one JSON cell per (merges, method) with an eval file."""
        held_out = tmp_path / "dev.tok"
        held_out.write_text("lowest flower\n", encoding="utf-8")
        result = runner.invoke(
            cli,
            ["sweep", str(corpus_file), "--methods", "countprop,softmax", "--merges", "4",
             "--seeds", "0,1", "--eval", str(held_out), "--format", "json"],
        )
        assert result.exit_code == 0, result.output
        cells = json.loads(result.stdout)
        assert [(c["merges"], c["method"]) for c in cells] == [(4, "countprop"), (4, "softmax")]
        assert all(c["fertility"]["n"] == 2 for c in cells)

    def test_parallel_matches_sequential(self, runner: CliRunner, corpus_file: Path) -> None:
        """Test worker processes do not change results."""
        args = ["sweep", str(corpus_file), "--methods", "uniform", "--merges", "6",
                "--seeds", "0..3", "--format", "kv"]
        sequential = runner.invoke(cli, args)
        parallel = runner.invoke(cli, [*args, "--workers", "2"])
        assert parallel.exit_code == 0
        assert parallel.stdout == sequential.stdout


class TestErrors:
    """Tests for exit codes and one-line diagnostics."""

    def test_missing_header(self, runner: CliRunner, tmp_path: Path) -> None:
        """Test a merge file without header is a parse error."""
        codes = tmp_path / "codes.bpe"
        codes.write_text("l o\n", encoding="utf-8")
        result = runner.invoke(cli, ["apply", "-c", str(codes)], input="low\n")
        assert result.exit_code == EXIT_PARSE
        assert "parse error: line 1" in result.stderr
        assert len(result.stderr.strip().splitlines()) == 1

    def test_malformed_line(self, runner: CliRunner, tmp_path: Path) -> None:
        """Test a three-field line names its line number."""
        codes = tmp_path / "codes.bpe"
        codes.write_text("#version: 0.2\nl o\na b c\n", encoding="utf-8")
        result = runner.invoke(cli, ["apply", "-c", str(codes)], input="low\n")
        assert result.exit_code == EXIT_PARSE
        assert "line 3" in result.stderr

    def test_unconstructible(self, runner: CliRunner, tmp_path: Path) -> None:
        """Test a constructibility failure is a validation error."""
        codes = tmp_path / "codes.bpe"
        codes.write_text("#version: 0.2\nab c\n", encoding="utf-8")
        result = runner.invoke(cli, ["apply", "-c", str(codes)], input="abc\n")
        assert result.exit_code == EXIT_VALIDATION
        assert "rank 0" in result.stderr

    def test_reserved_marker(self, runner: CliRunner, tmp_path: Path) -> None:
        """Test input containing the end-of-word marker."""
        result = runner.invoke(
            cli, ["train", "-o", str(tmp_path / "c.bpe"), "-m", "2"], input="a</w>b\n"
        )
        assert result.exit_code == EXIT_VALIDATION
        assert "reserved marker" in result.stderr

    def test_zero_merges(self, runner: CliRunner, corpus_file: Path, tmp_path: Path) -> None:
        """Test a non-positive budget."""
        args = ["train", str(corpus_file), "-o", str(tmp_path / "c"), "-m", "0"]
        result = runner.invoke(cli, args)
        assert result.exit_code == EXIT_VALIDATION

    def test_alignment(self, runner: CliRunner, tmp_path: Path) -> None:
        """Test streams of different length."""
        original = tmp_path / "orig.tok"
        original.write_text("a\nb\n", encoding="utf-8")
        segmented = tmp_path / "seg.bpe"
        segmented.write_text("a\n", encoding="utf-8")
        result = runner.invoke(cli, ["stats", "segmentation", str(original), str(segmented)])
        assert result.exit_code == EXIT_ALIGNMENT
        assert "line 2" in result.stderr

    def test_unwritable_output(self, runner: CliRunner, corpus_file: Path, tmp_path: Path) -> None:
        """Test a merge file that cannot be written is an I/O error."""
        blocker = tmp_path / "blocker"
        blocker.write_text("", encoding="utf-8")
        result = runner.invoke(
            cli, ["train", str(corpus_file), "-o", str(blocker / "codes.bpe"), "-m", "2"]
        )
        assert result.exit_code == EXIT_IO
        assert "I/O error" in result.stderr

    def test_single_seed_sweep(self, runner: CliRunner, corpus_file: Path) -> None:
        """Test a sweep needs two seeds for a standard error."""
        result = runner.invoke(cli, ["sweep", str(corpus_file), "--seeds", "0", "--merges", "3"])
        assert result.exit_code == EXIT_VALIDATION
        assert "at least 2 seeds" in result.stderr

    def test_unknown_method(self, runner: CliRunner, corpus_file: Path, tmp_path: Path) -> None:
        """Test an unknown method is a usage error."""
        result = runner.invoke(
            cli,
            ["train", str(corpus_file), "-o", str(tmp_path / "c"), "-m", "2", "--method", "bpe"],
        )
        assert result.exit_code == 2
