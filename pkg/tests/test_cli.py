"""CLI tests through real subprocesses: exit codes, artifacts, reproducibility."""

import csv
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from qperiod import circuit, io

BASE = [sys.executable, "-m", "qperiod"]


def run_cli(args, cwd, env_extra=None):
    env = dict(os.environ)
    if env_extra:
        env.update(env_extra)
    return subprocess.run(BASE + args, cwd=cwd, env=env,
                          capture_output=True, text=True, timeout=600)


def parse_csv(text):
    rows = list(csv.reader(text.splitlines()))
    return rows[0], rows[1:]


@pytest.fixture(scope="module")
def iqft3_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("mats") / "iqft3.umat"
    io.write_unitary(path, np.asarray(circuit.inverse_qft_matrix(3)), 3)
    return path


@pytest.fixture(scope="module")
def iqft5_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("mats") / "iqft5.umat"
    io.write_unitary(path, np.asarray(circuit.inverse_qft_matrix(5)), 5)
    return path


@pytest.fixture(scope="module")
def converged_run(tmp_path_factory):
    """One converged n=2 training run shared by the read-only CLI tests."""
    out = tmp_path_factory.mktemp("run")
    result = run_cli(["train", "--qubits", "2", "--dataset-size", "3",
                      "--epochs", "1500", "--seed", "0", "--out-dir", str(out)],
                     cwd=out)
    assert result.returncode == 0, result.stderr
    return out, result


class TestTrainCommand:
    def test_converged_run_artifacts(self, converged_run):
        out, result = converged_run
        assert "final_loss=" in result.stdout
        assert (out / "m3.umat").exists()
        assert (out / "loss_history.csv").exists()
        manifest = io.read_run_manifest(out / "run_manifest.json")
        assert manifest["n"] == 2
        assert manifest["epochs"] == 1500
        assert len(manifest["loss_history"]) == 1500
        assert manifest["loss_history"][-1] < 1e-6
        m3, n = io.read_unitary(out / "m3.umat")
        assert n == 2 and m3.shape == (4, 4)

    def test_loss_history_csv_matches_manifest(self, converged_run):
        out, _ = converged_run
        header, rows = parse_csv((out / "loss_history.csv").read_text())
        assert header == ["epoch", "mean_loss"]
        manifest = io.read_run_manifest(out / "run_manifest.json")
        assert len(rows) == len(manifest["loss_history"])
        assert float(rows[-1][1]) == pytest.approx(manifest["loss_history"][-1])

    def test_non_convergence_exits_two_but_saves(self, tmp_path):
        result = run_cli(["train", "--qubits", "2", "--dataset-size", "2",
                          "--epochs", "40", "--seed", "0",
                          "--out-dir", str(tmp_path)], cwd=tmp_path)
        assert result.returncode == 2
        assert (tmp_path / "m3.umat").exists()
        assert (tmp_path / "run_manifest.json").exists()

    def test_seeded_runs_are_bit_identical(self, tmp_path):
        args = ["train", "--qubits", "2", "--dataset-size", "2",
                "--epochs", "300", "--seed", "7"]
        a, b = tmp_path / "a", tmp_path / "b"
        ra = run_cli(args + ["--out-dir", str(a)], cwd=tmp_path)
        rb = run_cli(args + ["--out-dir", str(b)], cwd=tmp_path)
        assert {ra.returncode, rb.returncode} <= {0, 2}
        assert (a / "m3.umat").read_bytes() == (b / "m3.umat").read_bytes()
        assert ((a / "loss_history.csv").read_text()
                == (b / "loss_history.csv").read_text())

    def test_out_dir_env_var(self, tmp_path):
        target = tmp_path / "from_env"
        result = run_cli(["train", "--qubits", "1", "--dataset-size", "1",
                          "--epochs", "5", "--seed", "0"],
                         cwd=tmp_path, env_extra={"QPERIOD_OUT_DIR": str(target)})
        assert result.returncode in (0, 2)
        assert (target / "m3.umat").exists()


class TestEvalCommand:
    def test_exact_matrix_has_zero_distances(self, iqft3_file, tmp_path):
        result = run_cli(["eval", "--matrix", str(iqft3_file),
                          "--periods", "1,2,3,4,5,6,7,8"], cwd=tmp_path)
        assert result.returncode == 0
        header, rows = parse_csv(result.stdout)
        assert header == ["period", "loss", "distance"]
        assert len(rows) == 8
        for row in rows:
            assert float(row[1]) < 1e-12
            assert float(row[2]) < 1e-12

    def test_rejects_missing_file(self, tmp_path):
        result = run_cli(["eval", "--matrix", str(tmp_path / "nope.umat"),
                          "--periods", "1"], cwd=tmp_path)
        assert result.returncode == 1

    def test_rejects_malformed_periods(self, iqft3_file, tmp_path):
        result = run_cli(["eval", "--matrix", str(iqft3_file),
                          "--periods", "1,x"], cwd=tmp_path)
        assert result.returncode == 64

    def test_rejects_widening_the_register(self, iqft3_file, tmp_path):
        result = run_cli(["eval", "--matrix", str(iqft3_file), "--qubits", "4",
                          "--periods", "1"], cwd=tmp_path)
        assert result.returncode == 1


class TestEchoCommand:
    def test_identity_pair_echoes_one(self, iqft3_file, tmp_path):
        result = run_cli(["echo", "--matrix", str(iqft3_file),
                          "--reference", "qft"], cwd=tmp_path)
        assert result.returncode == 0
        header, rows = parse_csv(result.stdout)
        assert header == ["subject_path", "reference", "echo_zero", "echo_uniform"]
        assert float(rows[0][2]) == pytest.approx(1.0)
        assert float(rows[0][3]) == pytest.approx(1.0)

    def test_matrix_reference_widths_must_match(self, iqft3_file, iqft5_file, tmp_path):
        result = run_cli(["echo", "--matrix", str(iqft3_file),
                          "--reference", str(iqft5_file)], cwd=tmp_path)
        assert result.returncode == 1


class TestSpectrumCommand:
    def test_matrix_counts_sum_to_dimension(self, iqft3_file, tmp_path):
        result = run_cli(["spectrum", "--matrix", str(iqft3_file)], cwd=tmp_path)
        assert result.returncode == 0
        header, rows = parse_csv(result.stdout)
        assert header == ["bin_lo", "bin_hi", "count"]
        assert len(rows) == 20
        assert sum(int(r[2]) for r in rows) == 8

    def test_haar_aggregate_counts(self, tmp_path):
        result = run_cli(["spectrum", "--haar-samples", "5", "--qubits", "3",
                          "--seed", "1"], cwd=tmp_path)
        assert result.returncode == 0
        _, rows = parse_csv(result.stdout)
        assert sum(int(r[2]) for r in rows) == 40

    def test_requires_exactly_one_source(self, iqft3_file, tmp_path):
        both = run_cli(["spectrum", "--matrix", str(iqft3_file),
                        "--haar-samples", "3", "--qubits", "3"], cwd=tmp_path)
        neither = run_cli(["spectrum"], cwd=tmp_path)
        assert both.returncode == 64
        assert neither.returncode == 64


class TestPeriodCommand:
    def test_recovers_divisor_period_through_qft(self, iqft5_file, tmp_path):
        result = run_cli(["period", "--matrix", str(iqft5_file), "--r", "8",
                          "--seed", "0"], cwd=tmp_path)
        assert result.returncode == 0
        assert result.stdout.strip() == "8"

    def test_unconverged_matrix_exits_three(self, tmp_path):
        from qperiod import linalg
        path = tmp_path / "haar.umat"
        io.write_unitary(path, linalg.haar_random_unitary(5, 1), 5)
        result = run_cli(["period", "--matrix", str(path), "--r", "8",
                          "--seed", "0"], cwd=tmp_path)
        assert result.returncode == 3

    def test_missing_file_exits_one(self, tmp_path):
        result = run_cli(["period", "--matrix", str(tmp_path / "nope.umat"),
                          "--r", "4"], cwd=tmp_path)
        assert result.returncode == 1


class TestUsageErrors:
    def test_register_width_out_of_range(self, tmp_path):
        result = run_cli(["train", "--qubits", "0"], cwd=tmp_path)
        assert result.returncode == 64

    def test_unknown_subcommand(self, tmp_path):
        result = run_cli(["transmogrify"], cwd=tmp_path)
        assert result.returncode == 64

    def test_no_subcommand(self, tmp_path):
        result = run_cli([], cwd=tmp_path)
        assert result.returncode == 64


class TestClassifierPipeline:
    @pytest.fixture(scope="class")
    @classmethod
    def tiny_corpus_dir(cls, tmp_path_factory):
        out = tmp_path_factory.mktemp("corpus")
        result = run_cli(["corpus", "--qubits", "2", "--per-class", "6",
                          "--dataset-size", "3", "--epochs", "1500",
                          "--seed", "0", "--out-dir", str(out)], cwd=out)
        assert result.returncode == 0, result.stderr
        return out

    def test_corpus_artifacts(self, tiny_corpus_dir):
        manifest = json.loads((tiny_corpus_dir / "corpus_manifest.json").read_text())
        assert manifest["n_qubits"] == 2
        assert len(manifest["entries"]) == 12
        labels = [e["label"] for e in manifest["entries"]]
        assert labels.count(1) == 6 and labels.count(0) == 6
        for entry in manifest["entries"]:
            assert (tiny_corpus_dir / entry["matrix_path"]).exists()

    def test_classify_train_then_eval(self, tiny_corpus_dir, tmp_path):
        manifest = tiny_corpus_dir / "corpus_manifest.json"
        train_result = run_cli(["classify-train", "--corpus", str(manifest),
                                "--seed", "0", "--max-epochs", "30",
                                "--out-dir", str(tmp_path)], cwd=tmp_path)
        assert train_result.returncode == 0, train_result.stderr
        assert (tmp_path / "classifier.mlpc").exists()
        header, rows = parse_csv((tmp_path / "classifier_metrics.csv").read_text())
        assert header == ["epoch", "train_loss", "train_accuracy",
                          "val_loss", "val_accuracy"]
        assert 0 < len(rows) <= 30

        eval_result = run_cli(["classify-eval",
                               "--net", str(tmp_path / "classifier.mlpc"),
                               "--corpus", str(manifest), "--score-qft",
                               "--out", str(tmp_path / "scores.csv")], cwd=tmp_path)
        assert eval_result.returncode == 0, eval_result.stderr
        assert "accuracy=" in eval_result.stdout
        assert "qft_score=" in eval_result.stdout
        _, score_rows = parse_csv((tmp_path / "scores.csv").read_text())
        assert len(score_rows) == 3  # test split of a 12-entry corpus

    def test_classify_eval_rejects_width_mismatch(self, tiny_corpus_dir, tmp_path):
        from qperiod import classifier as clf
        net = clf.initialize_mlp(clf.MLPConfig(input_dim=8, hidden_dims=(4,)))
        io.write_mlp(tmp_path / "wrong.mlpc", net)
        result = run_cli(["classify-eval", "--net", str(tmp_path / "wrong.mlpc"),
                          "--corpus", str(tiny_corpus_dir / "corpus_manifest.json")],
                         cwd=tmp_path)
        assert result.returncode == 1
