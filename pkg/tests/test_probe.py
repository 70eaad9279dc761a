import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graph_barlow.augment import AugmentationParams
from graph_barlow.encoders import EncoderConfig
from graph_barlow.errors import ContractError, DegenerateLabelsError
from graph_barlow.graph import make_splits
from graph_barlow.probe import (
    COARSE_GRID,
    DENSE_GRID,
    LinearProbe,
    evaluate_embeddings,
    fit_probe,
    fit_probes,
    reg_grid_search,
    score,
)
from graph_barlow.sbm import SbmConfig, generate_sbm
from graph_barlow.search import DEFAULT_AUG_GRID, augmentation_grid_search
from graph_barlow.training import TrainConfig


def two_clusters(n=100, sep=6.0, seed=0):
    rng = np.random.default_rng(seed)
    y = np.repeat([0, 1], n // 2)
    z = rng.standard_normal((n, 2)) * 0.5
    z[:, 0] += np.where(y == 1, sep / 2, -sep / 2)
    return z, y


def blobs(n=240, c=3, d=4, seed=0, spread=1.0):
    rng = np.random.default_rng(seed)
    centers = rng.standard_normal((c, d)) * 3
    y = rng.integers(0, c, n)
    return centers[y] + spread * rng.standard_normal((n, d)), y


def _identity_probe(c, multilabel):
    return LinearProbe(weight=np.eye(c), bias=np.zeros(c), reg=0.0, multilabel=multilabel, trained=True)


class TestFitProbe:
    def test_separable_toy(self):
        z, y = two_clusters()
        # Separability oracle: the sign of the first coordinate classifies every point.
        assert np.all((z[:, 0] > 0) == (y == 1))
        probe = fit_probe(z, y, np.arange(len(y)), reg=2**-10)
        assert score(probe, z, y, np.arange(len(y))) == 1.0

    def test_large_reg_shrinks_weights(self):
        z, y = blobs()
        idx = np.arange(len(y))
        strong = fit_probe(z, y, idx, reg=2.0**10)
        weak = fit_probe(z, y, idx, reg=2.0**-10)
        assert np.linalg.norm(strong.weight) < np.linalg.norm(weak.weight)

    def test_zero_steps_is_chance(self):
        rng = np.random.default_rng(0)
        z = rng.standard_normal((2000, 8))
        y = np.repeat([0, 1], 1000)
        probe = fit_probe(z, y, np.arange(2000), reg=1.0, steps=0)
        assert not probe.trained
        assert abs(score(probe, z, y, np.arange(2000)) - 0.5) < 3 * math.sqrt(0.25 / 2000) + 0.02

    def test_single_class_raises(self):
        z, y = two_clusters()
        with pytest.raises(DegenerateLabelsError):
            fit_probe(z, y, np.arange(10), reg=1.0)

    def test_negative_reg_and_empty_idx(self):
        z, y = two_clusters()
        with pytest.raises(ContractError):
            fit_probe(z, y, np.arange(len(y)), reg=-1.0)
        with pytest.raises(ContractError):
            fit_probe(z, y, [], reg=1.0)

    def test_shapes(self):
        z, y = blobs(c=3, d=4)
        probe = fit_probe(z, y, np.arange(len(y)), reg=0.1, steps=5)
        assert probe.weight.shape == (4, 3) and probe.bias.shape == (3,)

    def test_deterministic(self):
        z, y = blobs()
        a = fit_probe(z, y, np.arange(100), reg=0.5, steps=50, seed=3)
        b = fit_probe(z, y, np.arange(100), reg=0.5, steps=50, seed=3)
        np.testing.assert_array_equal(a.weight, b.weight)

    def test_batched_equals_individual(self):
        z, y = blobs()
        regs = [2.0**-3, 1.0, 8.0]
        batched = fit_probes(z, y, np.arange(120), regs, steps=100, seed=1)
        for r, p in zip(regs, batched):
            single = fit_probe(z, y, np.arange(120), reg=r, steps=100, seed=1)
            np.testing.assert_allclose(p.weight, single.weight, rtol=0, atol=1e-12)
            np.testing.assert_allclose(p.bias, single.bias, rtol=0, atol=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_training_reduces_loss(self, seed):
        z, y = blobs(seed=seed, spread=3.0)
        for p in fit_probes(z, y, np.arange(150), DENSE_GRID, seed=seed):
            assert p.final_loss < p.initial_loss

    def test_multilabel(self):
        rng = np.random.default_rng(0)
        z = rng.standard_normal((200, 3))
        y = (z[:, :2] > 0).astype(np.uint8)
        probe = fit_probe(z, y, np.arange(200), reg=2**-10, multilabel=True)
        assert probe.weight.shape == (3, 2)
        assert probe.final_loss < probe.initial_loss
        assert score(probe, z, y, np.arange(200), "micro_f1") > 0.95


class TestScore:
    def test_perfect(self):
        y = np.array([0, 1, 2, 1])
        z = np.eye(3)[y]
        p = _identity_probe(3, False)
        assert score(p, z, y, np.arange(4), "accuracy") == 1.0
        assert score(p, z, y, np.arange(4), "micro_f1") == 1.0

    def test_all_wrong(self):
        y = np.array([0, 1, 2, 1])
        z = np.eye(3)[(y + 1) % 3]
        p = _identity_probe(3, False)
        assert score(p, z, y, np.arange(4), "accuracy") == 0.0
        assert score(p, z, y, np.arange(4), "micro_f1") == 0.0

    def test_pooled_micro_f1(self):
        # Row 0: one TP and one FP; row 1: one TP; row 2: one FN.
        y = np.array([[1, 0], [0, 1], [1, 0]], dtype=np.uint8)
        pred = np.array([[1, 1], [0, 1], [0, 0]])
        z = np.where(pred == 1, 1.0, -1.0)
        assert score(_identity_probe(2, True), z, y, np.arange(3), "micro_f1") == pytest.approx(2 / 3, abs=1e-15)

    def test_multilabel_threshold_half(self):
        p = _identity_probe(1, True)
        np.testing.assert_array_equal(p.predict(np.array([[-1e-9], [1e-9]])), [[0], [1]])

    def test_empty_idx(self):
        with pytest.raises(ContractError):
            score(_identity_probe(2, False), np.eye(2), np.array([0, 1]), [])

    def test_unknown_metric(self):
        with pytest.raises(ContractError):
            score(_identity_probe(2, False), np.eye(2), np.array([0, 1]), [0], "auc")

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 10**6), st.integers(2, 5))
    def test_metrics_bounded_and_f1_equals_accuracy(self, seed, c):
        rng = np.random.default_rng(seed)
        z = rng.standard_normal((30, c))
        y = rng.integers(0, c, 30)
        p = _identity_probe(c, False)
        acc = score(p, z, y, np.arange(30), "accuracy")
        f1 = score(p, z, y, np.arange(30), "micro_f1")
        assert 0.0 <= acc <= 1.0 and 0.0 <= f1 <= 1.0
        assert f1 == pytest.approx(acc, abs=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 10**6))
    def test_multilabel_bounded(self, seed):
        rng = np.random.default_rng(seed)
        z = rng.standard_normal((20, 4))
        y = rng.integers(0, 2, (20, 4)).astype(np.uint8)
        p = _identity_probe(4, True)
        for metric in ("accuracy", "micro_f1"):
            assert 0.0 <= score(p, z, y, np.arange(20), metric) <= 1.0


def _split(n, seed=0):
    return make_splits(n, seed=seed, count=1)[0]


class TestRegGridSearch:
    def test_grid_sizes(self):
        assert len(DENSE_GRID) == 21 and len(COARSE_GRID) == 11
        assert DENSE_GRID[0] == 2.0**-10 and DENSE_GRID[-1] == 2.0**10
        assert COARSE_GRID == tuple(2.0**k for k in range(-10, 11, 2))

    def test_single_value(self):
        z, y = blobs()
        reg, rep = reg_grid_search(z, y, _split(len(y)), grid=[0.25], steps=50)
        assert reg == 0.25 and rep.regs == [0.25] and rep.std == 0.0

    def test_duplicates_idempotent(self):
        z, y = blobs()
        s = _split(len(y))
        a = reg_grid_search(z, y, s, grid=[0.5, 0.5, 2.0, 1.0, 2.0], steps=50)
        b = reg_grid_search(z, y, s, grid=[0.5, 1.0, 2.0], steps=50)
        assert a[0] == b[0] and a[1] == b[1]

    def test_ties_prefer_larger(self):
        z, y = two_clusters(n=200, sep=20.0)
        s = _split(200)
        reg, rep = reg_grid_search(z, y, s, grid=[2.0**-4, 2.0**-2, 1.0], steps=200)
        assert rep.val_scores == [1.0] and reg == 1.0

    def test_empty_grid(self):
        z, y = blobs()
        with pytest.raises(ContractError):
            reg_grid_search(z, y, _split(len(y)), grid=[])

    def test_selection_uses_validation(self):
        z, y = blobs(spread=3.0)
        s = _split(len(y))
        reg, rep = reg_grid_search(z, y, s, grid=COARSE_GRID, steps=200)
        probes = fit_probes(z, y, s.train, sorted(COARSE_GRID, reverse=True), steps=200)
        vals = [score(p, z, y, s.val) for p in probes]
        assert rep.val_scores[0] == max(vals)
        assert reg == probes[vals.index(max(vals))].reg


@pytest.fixture(scope="module")
def data():
    z, y = blobs(n=200, spread=2.5)
    return z, y, make_splits(200, seed=1, count=4)


@pytest.fixture(scope="module")
def setup():
    g = generate_sbm(SbmConfig(60, 2, 0.2, 0.02, 6, 1.0), seed=0)
    return g, EncoderConfig("gcn2", 6, 4), make_splits(60, seed=1, count=2)


class TestEvaluateEmbeddings:
    def test_single_split_zero_std(self, data):
        z, y, splits = data
        rep = evaluate_embeddings(z, y, splits[:1], grid=COARSE_GRID, steps=100)
        assert rep.std == 0.0 and rep.mean == rep.test_scores[0]

    def test_deterministic(self, data):
        z, y, splits = data
        a = evaluate_embeddings(z, y, splits, grid=COARSE_GRID, steps=100, seed=4)
        b = evaluate_embeddings(z, y, splits, grid=COARSE_GRID, steps=100, seed=4)
        assert a == b

    def test_aggregation_oracle(self, data):
        z, y, splits = data
        rep = evaluate_embeddings(z, y, splits, grid=COARSE_GRID, steps=100)
        per = [reg_grid_search(z, y, s, COARSE_GRID, steps=100)[1].test_scores[0] for s in splits]
        assert rep.test_scores == per
        mean = sum(per) / len(per)
        assert rep.mean == pytest.approx(mean, abs=1e-15)
        assert rep.std == pytest.approx(math.sqrt(sum((v - mean) ** 2 for v in per) / len(per)), abs=1e-15)
        assert 0.0 <= rep.mean <= 1.0 and rep.std >= 0.0

    def test_split_order_invariance(self, data):
        z, y, splits = data
        a = evaluate_embeddings(z, y, splits, grid=COARSE_GRID, steps=100)
        b = evaluate_embeddings(z, y, splits[::-1], grid=COARSE_GRID, steps=100)
        assert a.mean == pytest.approx(b.mean, abs=1e-15) and a.std == pytest.approx(b.std, abs=1e-15)

    def test_micro_f1_equals_accuracy_single_label(self, data):
        z, y, splits = data
        a = evaluate_embeddings(z, y, splits, "accuracy", COARSE_GRID, steps=100)
        f = evaluate_embeddings(z, y, splits, "micro_f1", COARSE_GRID, steps=100)
        assert a.test_scores == pytest.approx(f.test_scores, abs=1e-12)

    def test_no_splits(self, data):
        z, y, _ = data
        with pytest.raises(ContractError):
            evaluate_embeddings(z, y, [])


class TestAugmentationSearch:
    def _run(self, setup, grid_a, grid_x, epochs=3, jobs=1):
        g, enc, splits = setup
        base = TrainConfig(epochs=epochs, warmup=min(1, max(epochs - 1, 0)), seed=2)
        return augmentation_grid_search(g, enc, base, grid_a, grid_x, splits, probe_grid=(1.0,),
                                        probe_seed=3, jobs=jobs)

    def test_single_cell(self, setup):
        best, table = self._run(setup, [0.3], [0.1])
        assert best == AugmentationParams(0.3, 0.1) and len(table) == 1

    def test_argmax_consistency(self, setup):
        best, table = self._run(setup, [0.0, 0.2], [0.0, 0.4])
        assert [(r["p_a"], r["p_x"]) for r in table] == [(0.0, 0.0), (0.0, 0.4), (0.2, 0.0), (0.2, 0.4)]
        top = max(r["val_metric"] for r in table)
        row = next(r for r in table if (r["p_a"], r["p_x"]) == (best.p_a, best.p_x))
        assert row["val_metric"] == top

    def test_ties_prefer_smallest_pair(self, setup):
        # Without training, augmentation has no effect: every cell ties.
        best, table = self._run(setup, [0.2, 0.1], [0.3, 0.0], epochs=0)
        assert len({r["val_metric"] for r in table}) == 1
        assert best == AugmentationParams(0.1, 0.0)

    def test_default_grid_has_36_cells(self, setup):
        best, table = self._run(setup, DEFAULT_AUG_GRID, DEFAULT_AUG_GRID, epochs=1)
        assert len(table) == 36
        assert {(r["p_a"], r["p_x"]) for r in table} == {(a, x) for a in DEFAULT_AUG_GRID for x in DEFAULT_AUG_GRID}

    def test_parallel_matches_serial(self, setup):
        assert self._run(setup, [0.0, 0.3], [0.1], jobs=2) == self._run(setup, [0.0, 0.3], [0.1])

    def test_empty_grid(self, setup):
        with pytest.raises(ContractError):
            self._run(setup, [], [0.1])
