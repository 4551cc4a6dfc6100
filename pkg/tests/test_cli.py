"""End-to-end CLI tests driving main() with real files."""

import numpy as np
import pytest

from resprop.cli import main
from resprop.harness import RunSummary, export_runs_csv
from resprop.synthetic import write_corpus


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    write_corpus(out, n_train=320, n_test=80, seed=17)
    return out


@pytest.fixture(scope="module")
def config_path(tmp_path_factory, corpus_dir):
    cfg = tmp_path_factory.mktemp("cfg") / "train.cfg"
    cfg.write_text(
        "arch = 784-16-10\n"
        "optimizer = sgd\n"
        "learning_rate = 0.1\n"
        "epochs = 2\n"
        "batch_size = 32\n"
        "seeds = 1,2\n"
        "dropout_hidden = 0\n"
        f"data_dir = {corpus_dir}\n"
        "train_size = 200\n"
        "val_size = 60\n"
        "test_size = 60\n"
        "clock = counter\n"
    )
    return cfg


class TestTrain:
    def test_runs_all_config_seeds(self, config_path, tmp_path, capsys):
        out = tmp_path / "exp"
        rc = main(["train", "--config", str(config_path), "--out", str(out)])
        assert rc == 0
        stdout = capsys.readouterr().out
        assert "seed 1: best epoch" in stdout
        assert "seed 2: best epoch" in stdout
        for name in ("config.txt", "runs.csv", "summary.txt",
                     "metrics-seed1.csv", "model-seed1.ckpt",
                     "final-seed2.ckpt"):
            assert (out / name).exists()

    def test_seed_flag_restricts_to_one_run(self, config_path, tmp_path, capsys):
        out = tmp_path / "one"
        rc = main(["train", "--config", str(config_path),
                   "--seed", "5", "--out", str(out)])
        assert rc == 0
        assert "seed 5: best epoch" in capsys.readouterr().out
        assert (out / "metrics-seed5.csv").exists()
        assert not (out / "metrics-seed1.csv").exists()

    def test_missing_config_exits_2(self, capsys):
        rc = main(["train", "--config", "/nonexistent/x.cfg"])
        assert rc == 2
        assert "error:" in capsys.readouterr().err

    def test_bad_config_key_exits_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.cfg"
        bad.write_text("learning_rat = 0.1\n")
        rc = main(["train", "--config", str(bad)])
        assert rc == 2
        assert "unknown key" in capsys.readouterr().err


class TestEvaluate:
    def test_scores_saved_model(self, config_path, corpus_dir, tmp_path, capsys):
        out = tmp_path / "exp"
        assert main(["train", "--config", str(config_path), "--seed", "1",
                     "--out", str(out)]) == 0
        capsys.readouterr()
        rc = main(["evaluate", "--model", str(out / "model-seed1.ckpt"),
                   "--data", str(corpus_dir), "--test-size", "60"])
        assert rc == 0
        stdout = capsys.readouterr().out
        assert "test err" in stdout and "on 60 examples" in stdout

    def test_missing_model_exits_2(self, corpus_dir, capsys):
        rc = main(["evaluate", "--model", "/nonexistent.ckpt",
                   "--data", str(corpus_dir)])
        assert rc == 2


class TestEnsemble:
    def test_trains_and_saves(self, corpus_dir, tmp_path, capsys):
        spec = tmp_path / "ens.cfg"
        spec.write_text(
            "kind = bagging\n"
            "size = 2\n"
            "arch = 784-16-10\n"
            "member_epochs = 1\n"
            "batch_size = 32\n"
            "seed = 3\n"
            "dropout_hidden = 0\n"
            f"data_dir = {corpus_dir}\n"
            "train_size = 200\n"
            "val_size = 60\n"
            "test_size = 60\n"
            "clock = counter\n"
        )
        out = tmp_path / "ens"
        rc = main(["ensemble", "--spec", str(spec), "--out", str(out)])
        assert rc == 0
        stdout = capsys.readouterr().out
        assert "member 00: test err" in stdout
        assert "bagging ensemble of 2: test err" in stdout
        for name in ("ensemble.json", "member-00.ckpt", "member-01.ckpt",
                     "ensemble-summary.txt"):
            assert (out / name).exists()

    def test_bad_spec_exits_2(self, tmp_path, capsys):
        spec = tmp_path / "bad.cfg"
        spec.write_text("kind = boosting\n")
        assert main(["ensemble", "--spec", str(spec)]) == 2
        assert "kind must be one of" in capsys.readouterr().err


def write_runs_dir(path, errs):
    path.mkdir(parents=True)
    rows = [RunSummary(i + 1, 1, e, e, e, 1000.0, 1000.0)
            for i, e in enumerate(errs)]
    (path / "runs.csv").write_text(export_runs_csv(rows))


class TestCompare:
    def test_clear_difference_is_significant(self, tmp_path, capsys):
        write_runs_dir(tmp_path / "a",
                       [0.10, 0.11, 0.12, 0.13, 0.14, 0.15, 0.16, 0.17])
        write_runs_dir(tmp_path / "b",
                       [0.20, 0.21, 0.22, 0.23, 0.24, 0.25, 0.26, 0.27])
        rc = main(["compare", "--a", str(tmp_path / "a"),
                   "--b", str(tmp_path / "b")])
        assert rc == 0
        stdout = capsys.readouterr().out
        assert "wilcoxon signed-rank" in stdout
        assert "significant at the 98% confidence level" in stdout
        assert f"better: {tmp_path / 'a'}" in stdout

    def test_identical_runs_not_significant(self, tmp_path, capsys):
        write_runs_dir(tmp_path / "a", [0.1, 0.2, 0.3, 0.4])
        write_runs_dir(tmp_path / "b", [0.1, 0.2, 0.3, 0.4])
        rc = main(["compare", "--a", str(tmp_path / "a"),
                   "--b", str(tmp_path / "b")])
        assert rc == 0
        assert "not significant" in capsys.readouterr().out

    def test_missing_dir_exits_2(self, tmp_path, capsys):
        write_runs_dir(tmp_path / "a", [0.1, 0.2])
        rc = main(["compare", "--a", str(tmp_path / "a"),
                   "--b", str(tmp_path / "missing")])
        assert rc == 2


class TestGradcheck:
    def test_pass(self, capsys):
        rc = main(["gradcheck", "--arch", "12-8-5", "--tol", "1e-4"])
        assert rc == 0
        assert "gradcheck PASS" in capsys.readouterr().out

    def test_unattainable_tolerance_fails(self, capsys):
        rc = main(["gradcheck", "--arch", "12-8-5", "--tol", "1e-14"])
        assert rc == 1
        assert "gradcheck FAIL" in capsys.readouterr().out

    def test_oversized_architecture_refused(self, capsys):
        rc = main(["gradcheck", "--arch", "784-300-100-10"])
        assert rc == 2
        assert "refusing" in capsys.readouterr().err

    def test_bad_arch_exits_2(self, capsys):
        assert main(["gradcheck", "--arch", "784"]) == 2


class TestSynth:
    def test_writes_idx_corpus(self, tmp_path, capsys):
        out = tmp_path / "digits"
        rc = main(["synth", "--out", str(out), "--train", "50",
                   "--test", "20", "--seed", "5"])
        assert rc == 0
        assert "wrote 50+20 examples" in capsys.readouterr().out
        names = {p.name for p in out.iterdir()}
        assert "train-images-idx3-ubyte" in names
        assert "train-labels-idx1-ubyte" in names
        assert "t10k-images-idx3-ubyte" in names
        assert "t10k-labels-idx1-ubyte" in names


class TestParser:
    def test_unknown_subcommand_exits_via_argparse(self):
        with pytest.raises(SystemExit):
            main(["frobnicate"])

    def test_no_subcommand_rejected(self):
        with pytest.raises(SystemExit):
            main([])
