"""
Tests for the command-line interface.
"""

import pytest
from click.testing import CliRunner

from gridie.cli.formats import read_coord_training, read_oie_training, read_tuples
from gridie.main import EXIT_INVALID, EXIT_OK, EXIT_RUNTIME, cli
from gridie.tests.fixtures import splitting_cases
from gridie.tests.fixtures.synthetic_corpus import generate_coordination_corpus, generate_corpus, to_training_tsv

SMALL_MODEL_CONFIG = """\
# tiny models for command tests
d_model=16
heads=2
encoder_layers=1
iterative_layers=1
ffn_dim=32
oie_levels=2
coord_levels=2
batch_size=8
warmup_epochs=0
"""


def _invoke(*args: str):
    return CliRunner().invoke(cli, ["--log-level", "ERROR", *args])


def _read_report(path):
    rows = {}
    for line in path.read_text(encoding="utf-8").splitlines()[1:]:
        name, precision, recall, f1, auc = line.split("\t")
        rows[name] = (float(precision), float(recall), float(f1))
    return rows


@pytest.fixture
def benchmark(tmp_path):
    gold = tmp_path / "gold.tsv"
    gold.write_text(splitting_cases.GOLD_TSV, encoding="utf-8")
    splitting = tmp_path / "splitting.tsv"
    splitting.write_text(splitting_cases.SPLITTING_SYSTEM_TSV, encoding="utf-8")
    whole = tmp_path / "whole.tsv"
    whole.write_text(splitting_cases.NON_SPLITTING_SYSTEM_TSV, encoding="utf-8")
    return gold, splitting, whole


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    """OpenIE and coordination checkpoints trained for two epochs."""
    root = tmp_path_factory.mktemp("models")
    config = root / "small.cfg"
    config.write_text(SMALL_MODEL_CONFIG, encoding="utf-8")
    oie_train = root / "oie.tsv"
    oie_train.write_text(to_training_tsv(generate_corpus(30, seed=0)), encoding="utf-8")
    dev = root / "dev.tsv"
    dev.write_text(to_training_tsv(generate_corpus(5, seed=1)), encoding="utf-8")
    coord_train = root / "coord.txt"
    coord_train.write_text(generate_coordination_corpus(12, seed=0), encoding="utf-8")

    oie_result = CliRunner().invoke(cli, [
        "--config", str(config), "--log-level", "ERROR",
        "train", "oie", str(oie_train), str(root / "oie.ckpt"), "--dev", str(dev), "--epochs", "2",
    ])
    coord_result = CliRunner().invoke(cli, [
        "--config", str(config), "--log-level", "ERROR",
        "train", "coord", str(coord_train), str(root / "coord.ckpt"), "--epochs", "2",
    ])
    sentences = root / "sentences.txt"
    sentences.write_text("".join(f"{text}\n" for text, _ in generate_corpus(10, seed=2)), encoding="utf-8")
    return {
        "root": root,
        "config": config,
        "oie": root / "oie.ckpt",
        "coord": root / "coord.ckpt",
        "coord_train": coord_train,
        "oie_train": oie_train,
        "sentences": sentences,
        "results": (oie_result, coord_result),
    }


class TestEvalCommand:
    """Test `gridie eval`."""

    def test_scorers_disagree_on_splitting(self, benchmark, tmp_path):
        """Test that CaRB prefers the unsplit output and CaRB(1-1) the split one."""
        gold, splitting, whole = benchmark
        reports = {}
        for name, system in (("splitting", splitting), ("whole", whole)):
            out = tmp_path / f"{name}.report.tsv"
            result = _invoke("eval", str(system), str(gold), "--scorer", "carb", "--scorer", "carb_one_one", "--tsv", str(out))
            assert result.exit_code == EXIT_OK, result.output
            reports[name] = _read_report(out)

        assert reports["whole"]["carb"] == pytest.approx((78.57, 100.0, 88.0), abs=0.05)
        assert reports["splitting"]["carb"] == pytest.approx((75.0, 88.89, 81.36), abs=0.05)
        assert reports["whole"]["carb_one_one"] == pytest.approx((78.57, 66.67, 72.13), abs=0.05)
        assert reports["splitting"]["carb_one_one"] == pytest.approx((75.0, 88.89, 81.36), abs=0.05)

    def test_table_output(self, benchmark):
        """Test that every scorer is reported by default."""
        gold, splitting, _ = benchmark
        result = _invoke("eval", str(splitting), str(gold))
        assert result.exit_code == EXIT_OK, result.output
        for name in ("carb", "carb_one_one", "oie16c", "wire57c"):
            assert name in result.output

    def test_auc_for_wire57c_is_invalid(self, benchmark):
        """Test that requesting Wire57-C AUC exits with the invalid-input code."""
        gold, splitting, _ = benchmark
        result = _invoke("eval", str(splitting), str(gold), "--scorer", "wire57c", "--auc")
        assert result.exit_code == EXIT_INVALID
        assert "AUC undefined for Wire57-C" in result.output

    def test_tsv_rows_on_stdout(self, benchmark):
        """Test that the TSV report follows the table on stdout without --tsv."""
        gold, splitting, _ = benchmark
        result = _invoke("eval", str(splitting), str(gold), "--scorer", "carb", "--scorer", "wire57c")
        assert result.exit_code == EXIT_OK, result.output
        lines = result.output.splitlines()
        header = lines.index("scorer\tprecision\trecall\tf1\tauc")
        carb, wire = (line.split("\t") for line in lines[header + 1:header + 3])
        assert carb[0] == "carb" and float(carb[1]) == pytest.approx(75.0, abs=0.01)
        assert wire[0] == "wire57c" and wire[4] == "n/a"

    def test_missing_file(self, benchmark, tmp_path):
        """Test that a missing input file is invalid input."""
        gold, _, _ = benchmark
        result = _invoke("eval", str(tmp_path / "absent.tsv"), str(gold))
        assert result.exit_code == EXIT_INVALID

    def test_malformed_gold(self, benchmark, tmp_path):
        """Test that a malformed row names its line."""
        _, splitting, _ = benchmark
        bad = tmp_path / "bad.tsv"
        bad.write_text("1\tTalks\tresumed\tbetween USA and China\n2\tI ate\n", encoding="utf-8")
        result = _invoke("eval", str(splitting), str(bad))
        assert result.exit_code == EXIT_INVALID
        assert f"{bad}:2" in result.output


class TestAlignCommand:
    """Test `gridie align`."""

    def test_writes_grid_rows(self, tmp_path):
        """Test the aligned output blocks and the coverage report."""
        train = tmp_path / "train.tsv"
        train.write_text(
            "Rome is the capital of Italy .\tRome\tis the capital of\tItaly\n"
            "Cats sleep .\tDogs\tsleep\t\n",
            encoding="utf-8",
        )
        out = tmp_path / "aligned.txt"
        result = _invoke("align", str(train), str(out))
        assert result.exit_code == EXIT_OK, result.output
        assert "aligned\t1" in result.output
        assert "skipped:no match for subject\t1" in result.output
        blocks = out.read_text(encoding="utf-8").strip().split("\n\n")
        assert len(blocks) == 1
        tokens, labels = blocks[0].splitlines()
        assert tokens == "Rome is the capital of Italy . [is] [of] [from]"
        assert labels == "S R R R R O N N N N"


class TestModelCommands:
    """Test train, predict, bench and coord-eval end to end on tiny models."""

    def test_training_outputs(self, trained):
        """Test checkpoints, logs and the training summary."""
        oie_result, coord_result = trained["results"]
        assert oie_result.exit_code == EXIT_OK, oie_result.output
        assert coord_result.exit_code == EXIT_OK, coord_result.output
        assert "trained oie model on 30 examples for 2 epochs" in oie_result.output
        assert "best_epoch" in oie_result.output
        assert trained["oie"].is_file() and trained["coord"].is_file()
        log_lines = (trained["root"] / "oie.ckpt.log.tsv").read_text(encoding="utf-8").splitlines()
        assert log_lines[0].split("\t")[:3] == ["epoch", "step", "loss"]
        assert len(log_lines) == 3

    def test_training_reports_violations(self, trained):
        """Test the violation counts line of the OpenIE training summary."""
        oie_result, coord_result = trained["results"]
        lines = oie_result.output.splitlines()
        header = lines.index("posc\thvc\thve\tec\textractions")
        counts = [int(v) for v in lines[header + 1].split("\t")]
        assert len(counts) == 5 and all(c >= 0 for c in counts)
        assert "posc\thvc" not in coord_result.output

    def test_predict_is_deterministic(self, trained, tmp_path):
        """Test that two prediction runs write identical files."""
        outputs = []
        for name in ("first.tsv", "second.tsv"):
            out = tmp_path / name
            result = _invoke("predict", str(trained["sentences"]), str(trained["oie"]), str(out), "--coord", str(trained["coord"]))
            assert result.exit_code == EXIT_OK, result.output
            outputs.append(out.read_bytes())
        assert outputs[0] == outputs[1]

    def test_predict_skips_too_long_sentence(self, trained, tmp_path):
        """Test that an over-long line yields no rows and the run still succeeds."""
        sentences = tmp_path / "long.txt"
        sentences.write_text(trained["sentences"].read_text(encoding="utf-8") + " ".join(["word"] * 200) + "\n", encoding="utf-8")
        out = tmp_path / "extractions.tsv"
        result = _invoke("predict", str(sentences), str(trained["oie"]), str(out), "--coord", str(trained["coord"]))
        assert result.exit_code == EXIT_OK, result.output
        assert "sentences\t11" in result.output
        assert "11" not in read_tuples(out)

    def test_predict(self, trained, tmp_path):
        """Test that predictions are a valid extraction file."""
        out = tmp_path / "extractions.tsv"
        result = _invoke("predict", str(trained["sentences"]), str(trained["oie"]), str(out), "--coord", str(trained["coord"]))
        assert result.exit_code == EXIT_OK, result.output
        assert "sentences\t10" in result.output
        extractions = read_tuples(out)
        assert set(extractions) <= {str(k) for k in range(1, 11)}
        assert all(t.confidence <= 0.0 for tuples in extractions.values() for t in tuples)

    def test_bench_counts_one_encoding_per_sentence(self, trained):
        """Test encoder invocations without a coordination analyzer."""
        for levels in ("1", "5"):
            result = _invoke("bench", str(trained["sentences"]), str(trained["oie"]), "--levels", levels)
            assert result.exit_code == EXIT_OK, result.output
            assert "encoder_invocations\t10" in result.output
            assert "sentences_per_second" in result.output

    def test_coord_eval(self, trained):
        """Test coordination scoring output."""
        result = _invoke("coord-eval", str(trained["coord_train"]), str(trained["coord"]))
        assert result.exit_code == EXIT_OK, result.output
        assert "coord" in result.output

    def test_task_mismatch(self, trained, tmp_path):
        """Test that a coordination checkpoint cannot serve as the extractor."""
        result = _invoke("predict", str(trained["sentences"]), str(trained["coord"]), str(tmp_path / "out.tsv"))
        assert result.exit_code == EXIT_RUNTIME

    def test_not_a_checkpoint(self, trained, tmp_path):
        """Test that a foreign file is a runtime failure."""
        fake = tmp_path / "fake.ckpt"
        fake.write_bytes(b"hello world, not a model")
        result = _invoke("bench", str(trained["sentences"]), str(fake))
        assert result.exit_code == EXIT_RUNTIME

    def test_empty_training_file(self, tmp_path):
        """Test that training without rows is invalid input."""
        empty = tmp_path / "empty.tsv"
        empty.write_text("\n", encoding="utf-8")
        result = _invoke("train", "oie", str(empty), str(tmp_path / "m.ckpt"))
        assert result.exit_code == EXIT_INVALID


class TestFormats:
    """Test the training file readers."""

    def test_oie_rows_grouped_by_sentence(self, tmp_path):
        """Test that rows of one sentence form one example."""
        path = tmp_path / "train.tsv"
        path.write_text(to_training_tsv(generate_corpus(3)), encoding="utf-8")
        rows = read_oie_training(path)
        assert len(rows) == 3
        assert len(rows[2][1]) == 2

    def test_coordination_blocks(self, tmp_path):
        """Test block parsing of the coordination format."""
        path = tmp_path / "coord.txt"
        path.write_text(generate_coordination_corpus(4, seed=1), encoding="utf-8")
        blocks = read_coord_training(path)
        assert len(blocks) == 4
        assert all(len(b.rows) == 1 and len(b.rows[0]) == len(b.sentence) for b in blocks)
