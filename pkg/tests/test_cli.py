import json

import numpy as np
import pytest

from graph_barlow.cli import derive_seeds, main
from graph_barlow.dataset import load_dataset, save_dataset
from graph_barlow.encoders import Encoder, EncoderConfig, load_checkpoint
from graph_barlow.graph import Graph, make_splits
from graph_barlow.probe import COARSE_GRID, evaluate_embeddings
from graph_barlow.training import embed

SYNTH = ["--nodes", "60", "--blocks", "2", "--p-in", "0.2", "--p-out", "0.02", "--features", "6", "--splits", "2"]
FAST = ["--dim", "4", "--probe-grid", "coarse", "--probe-steps", "100"]


def run(*argv):
    return main([str(a) for a in argv])


def read(path):
    return json.loads(path.read_text())


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("data") / "D"
    assert run("synth", *SYNTH, "--seed", 7, "--out", out) == 0
    return out


@pytest.fixture(scope="module")
def trained(dataset, tmp_path_factory):
    out = tmp_path_factory.mktemp("run") / "R"
    code = run("train", "--data", dataset, "--loss", "bt", "--epochs", 20, "--warmup", 2, "--lr", 5e-3,
               "--arch", "gcn2", "--seed", 1, "--eval-interval", 10, "--out", out, *FAST)
    assert code == 0
    return out


class TestSynth:
    def test_file_contract(self, dataset):
        for name in ("meta.json", "features.f32", "edges.u32", "labels.u32", "splits.json", "synth.json"):
            assert (dataset / name).is_file()
        graph, splits = load_dataset(dataset)
        assert graph.num_nodes == 60 and graph.num_features == 6 and len(splits) == 2
        assert read(dataset / "synth.json")["format_version"] == 1

    def test_byte_identical_rerun(self, dataset, tmp_path):
        assert run("synth", *SYNTH, "--seed", 7, "--out", tmp_path / "D") == 0
        for f in dataset.iterdir():
            if f.name != "synth.json":
                assert (tmp_path / "D" / f.name).read_bytes() == f.read_bytes(), f.name
        a, b = read(dataset / "synth.json"), read(tmp_path / "D" / "synth.json")
        a["config"].pop("out"), b["config"].pop("out")
        assert a == b

    def test_invalid_probability(self, tmp_path, capsys):
        assert run("synth", "--p-in", 1.5, "--out", tmp_path / "bad") != 0
        assert "error" in capsys.readouterr().err

    def test_missing_out(self, capsys):
        assert run("synth") != 0
        assert "--out" in capsys.readouterr().err


class TestTrain:
    def test_report_contract(self, trained):
        rep = read(trained / "report.json")
        assert rep["format_version"] == 1
        for key in ("mean", "std", "best_epoch", "config", "seeds"):
            assert key in rep
        assert 0.0 <= rep["mean"] <= 1.0 and rep["std"] >= 0.0
        assert [e["epoch"] for e in rep["evaluations"]] == [0, 10, 20]
        assert rep["config"]["epochs"] == 20 and rep["config"]["loss"] == "bt"
        for name in ("encoder.ckpt", "loss_history.jsonl", "loss_curve.png", "split_scores.png"):
            assert (trained / name).is_file()
        assert len((trained / "loss_history.jsonl").read_text().splitlines()) == 20

    def test_best_epoch_by_validation(self, trained):
        rep = read(trained / "report.json")
        best = max(rep["evaluations"], key=lambda e: e["val_mean"])
        assert rep["best_epoch"] == best["epoch"] and rep["mean"] == best["mean"]
        _, header = load_checkpoint(trained / "encoder.ckpt")
        assert header["extra"]["epoch"] == rep["best_epoch"]

    def test_hsic_variant(self, dataset, tmp_path):
        assert run("train", "--data", dataset, "--loss", "hsic", "--epochs", 5, "--warmup", 1,
                   "--seed", 1, "--out", tmp_path, "--no-figures", *FAST) == 0
        rep = read(tmp_path / "report.json")
        assert rep["train"]["loss"] == "hsic"
        assert not (tmp_path / "loss_curve.png").exists()

    def test_deterministic(self, dataset, tmp_path):
        args = ["--data", dataset, "--epochs", 8, "--warmup", 1, "--seed", 3, "--no-figures", *FAST]
        assert run("train", *args, "--out", tmp_path / "a") == 0
        assert run("train", *args, "--out", tmp_path / "b") == 0
        a, b = read(tmp_path / "a" / "report.json"), read(tmp_path / "b" / "report.json")
        a["config"].pop("out"), b["config"].pop("out")
        assert a == b
        assert (tmp_path / "a" / "encoder.ckpt").read_bytes() == (tmp_path / "b" / "encoder.ckpt").read_bytes()

    def test_zero_epochs_matches_direct_probe(self, dataset, tmp_path):
        seed = 4
        assert run("train", "--data", dataset, "--epochs", 0, "--warmup", 0, "--seed", seed,
                   "--out", tmp_path, "--no-figures", *FAST) == 0
        rep = read(tmp_path / "report.json")

        graph, splits = load_dataset(dataset)
        cfg = EncoderConfig("gcn2", graph.num_features, 4)
        enc = Encoder.init(cfg, np.random.default_rng(seed + 1000))
        direct = evaluate_embeddings(embed(enc, graph), graph.labels, splits, "accuracy", COARSE_GRID,
                                     num_classes=graph.num_classes, steps=100, seed=seed + 2000)
        assert rep["best_epoch"] == 0
        assert rep["mean"] == direct.mean and rep["std"] == direct.std
        assert rep["test_scores"] == direct.test_scores

    def test_missing_dataset(self, tmp_path, capsys):
        assert run("train", "--data", tmp_path / "nope", "--out", tmp_path / "o") != 0
        assert "error" in capsys.readouterr().err


class TestConfigFile:
    def test_file_values_and_flag_override(self, dataset, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"data": str(dataset), "epochs": 3, "warmup": 1, "dim": 4, "loss": "hsic",
                                   "probe_grid": "coarse", "probe_steps": 50, "no_figures": True}))
        assert run("train", "--config", cfg, "--loss", "bt", "--out", tmp_path / "o") == 0
        rep = read(tmp_path / "o" / "report.json")
        assert rep["config"]["epochs"] == 3 and rep["config"]["loss"] == "bt"
        assert rep["config"]["config"] == str(cfg)

    def test_unknown_field(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"epochz": 3}))
        assert run("train", "--config", cfg, "--out", tmp_path / "o") != 0
        err = capsys.readouterr().err
        assert "epochz" in err and "cfg.json" in err


class TestGridSearch:
    ARGS = ["--grid-a", "0,0.1", "--grid-x", "0,0.1", "--epochs", 4, "--warmup", 1, "--seed", 2, *FAST]

    def test_table_rows_and_rerun(self, dataset, tmp_path):
        assert run("gridsearch", "--data", dataset, *self.ARGS, "--out", tmp_path / "a") == 0
        assert run("gridsearch", "--data", dataset, *self.ARGS, "--jobs", 2, "--out", tmp_path / "b") == 0
        a, b = read(tmp_path / "a" / "grid.json"), read(tmp_path / "b" / "grid.json")
        assert a["format_version"] == 1 and len(a["grid"]) == 4
        assert a["grid"] == b["grid"] and a["best"] == b["best"]
        assert a["best"]["val_metric"] == max(r["val_metric"] for r in a["grid"])
        assert (tmp_path / "a" / "grid_heatmap.png").is_file()

    def test_default_grid_36_rows(self, dataset, tmp_path):
        assert run("gridsearch", "--data", dataset, "--epochs", 1, "--warmup", 0, "--no-figures",
                   "--probe-grid", "1", "--probe-steps", 5, "--dim", 2, "--out", tmp_path) == 0
        assert len(read(tmp_path / "grid.json")["grid"]) == 36


class TestProbe:
    def test_own_dataset(self, dataset, trained, tmp_path):
        assert run("probe", "--data", dataset, "--checkpoint", trained / "encoder.ckpt", "--seed", 1,
                   "--out", tmp_path, "--probe-grid", "coarse", "--probe-steps", 100) == 0
        rep = read(tmp_path / "report.json")
        assert rep["format_version"] == 1 and rep["metric"] == "accuracy"
        assert 0.0 <= rep["mean"] <= 1.0
        # Same encoder, splits and probe seed as the training run's chosen evaluation.
        assert rep["mean"] == read(trained / "report.json")["mean"]

    def test_multilabel_micro_f1(self, tmp_path):
        rng = np.random.default_rng(0)
        n = 40
        feats = rng.standard_normal((n, 5))
        labels = (feats[:, :3] > 0).astype(np.uint8)
        edges = [(i, (i + 1) % n) for i in range(n)]
        save_dataset(Graph(features=feats, edges=edges, labels=labels), tmp_path / "ml",
                     make_splits(n, seed=0, count=2))
        assert run("train", "--data", tmp_path / "ml", "--epochs", 2, "--warmup", 1, "--dim", 3, "--no-figures",
                   "--probe-grid", "coarse", "--probe-steps", 50, "--out", tmp_path / "r") == 0
        assert run("probe", "--data", tmp_path / "ml", "--checkpoint", tmp_path / "r" / "encoder.ckpt",
                   "--metric", "micro_f1", "--probe-grid", "coarse", "--probe-steps", 50,
                   "--out", tmp_path / "p") == 0
        rep = read(tmp_path / "p" / "report.json")
        assert rep["metric"] == "micro_f1" and 0.0 <= rep["mean"] <= 1.0

    def test_dimension_mismatch(self, trained, tmp_path, capsys):
        assert run("synth", *SYNTH[:-4], "--features", 9, "--splits", 1, "--out", tmp_path / "D9") == 0
        capsys.readouterr()
        assert run("probe", "--data", tmp_path / "D9", "--checkpoint", trained / "encoder.ckpt",
                   "--out", tmp_path / "o") != 0
        assert "features" in capsys.readouterr().err
        assert not (tmp_path / "o" / "report.json").exists()


def test_seed_streams():
    assert derive_seeds(5) == {"data": 5, "model": 1005, "probe": 2005}
