import numpy as np
import pytest

from steerhier import mlp
from steerhier.mlp import (
    CLASS_LABELS,
    EvalReport,
    MlpModel,
    TrainConfig,
    evaluate,
    forward,
    gradient_check,
    init_model,
    load_model,
    save_model,
    split_masks,
    train_arrays,
)
from steerhier.protocol import LabeledRecord
from steerhier.qcore import ValidationError


class TestInit:
    def test_sizes(self):
        m = init_model("LutA6", (128, 64), np.random.default_rng(0))
        assert m.layer_sizes == (6, 128, 64, 5)

    def test_weight_bounds(self):
        m = init_model("EllA9", (32,), np.random.default_rng(1))
        for w in m.weights:
            assert np.max(np.abs(w)) <= 1 / np.sqrt(w.shape[0])
        for b in m.biases:
            assert np.all(b == 0)

    def test_seeded_determinism(self):
        m1 = init_model("LutA6", (16,), np.random.default_rng(2))
        m2 = init_model("LutA6", (16,), np.random.default_rng(2))
        assert all(np.array_equal(a, b) for a, b in zip(m1.weights, m2.weights))


class TestForward:
    def test_normalized(self):
        m = init_model("LutA6", (16,), np.random.default_rng(3))
        p = forward(m, np.random.default_rng(4).standard_normal(6))
        assert abs(p.sum() - 1.0) < 1e-12
        assert np.all(p > 0)

    def test_zero_network_uniform(self):
        m = init_model("LutA6", (8,), np.random.default_rng(5))
        for w in m.weights:
            w[:] = 0
        assert np.allclose(forward(m, np.ones(6)), 0.2)

    def test_softmax_closed_form(self):
        # output layer alone: logits (1,0,0,0,0) -> e/(e+4)
        m = init_model("LutA6", (8,), np.random.default_rng(6))
        for w in m.weights:
            w[:] = 0
        m.biases[-1][:] = [1.0, 0, 0, 0, 0]
        p = forward(m, np.zeros(6))
        assert abs(p[0] - np.e / (np.e + 4)) < 1e-12

    def test_logit_shift_invariance(self):
        m = init_model("LutA6", (8,), np.random.default_rng(7))
        x = np.random.default_rng(8).standard_normal(6)
        before = int(np.argmax(forward(m, x)))
        m.biases[-1] += 3.7
        assert int(np.argmax(forward(m, x))) == before

    def test_length_mismatch(self):
        m = init_model("LutA6", (8,), np.random.default_rng(9))
        with pytest.raises(ValidationError):
            forward(m, np.zeros(9))


class TestGradients:
    def test_small_net(self):
        m = init_model("LutA6", (10, 7), np.random.default_rng(10))
        rng = np.random.default_rng(11)
        x = rng.standard_normal((8, 6))
        y = rng.integers(0, 5, 8)
        assert gradient_check(m, x, y) <= 1e-4

    def test_degenerate_point(self):
        # uniform logits everywhere still gives a bounded check
        m = init_model("LutA6", (8,), np.random.default_rng(12))
        for w in m.weights:
            w[:] = 0
        rng = np.random.default_rng(13)
        x = rng.standard_normal((6, 6))
        y = rng.integers(0, 5, 6)
        assert gradient_check(m, x, y) <= 1e-4

    def test_step_scaling(self):
        # central differences are second order: error grows ~4x per doubling
        m = init_model("LutA6", (6,), np.random.default_rng(14))
        rng = np.random.default_rng(15)
        x = rng.standard_normal((4, 6)) * 3
        y = rng.integers(0, 5, 4)
        e1 = gradient_check(m, x, y, step=1e-3)
        e2 = gradient_check(m, x, y, step=4e-3)
        assert e2 > e1


class TestTraining:
    def test_xor_toy(self):
        rng = np.random.default_rng(9)
        x = rng.uniform(-1, 1, (400, 6))
        y = ((x[:, 0] > 0) ^ (x[:, 1] > 0)).astype(int)
        cfg = TrainConfig(epochs=500, batch_size=32, learning_rate=0.1,
                          seed=2, early_stop_patience=500)
        model = train_arrays(x, y, (64, 32), cfg)
        _, probs = mlp._forward_batch(model, x)
        assert np.mean(probs.argmax(1) == y) >= 0.99

    def test_full_batch_loss_decreases(self):
        rng = np.random.default_rng(16)
        x = rng.standard_normal((100, 6))
        y = (x[:, 0] > 0).astype(int)
        cfg = TrainConfig(epochs=40, batch_size=100, learning_rate=1e-3,
                          seed=1, early_stop_patience=40, momentum=0.0)
        log = []
        train_arrays(x, y, (16,), cfg, log=log)
        losses = [l for l, _ in log]
        assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))

    def test_deterministic_retraining(self):
        rng = np.random.default_rng(17)
        x = rng.standard_normal((200, 6))
        y = rng.integers(0, 3, 200)
        cfg = TrainConfig(epochs=20, seed=4)
        m1 = train_arrays(x, y, (16,), cfg)
        m2 = train_arrays(x, y, (16,), cfg)
        assert all(np.array_equal(a, b) for a, b in zip(m1.weights, m2.weights))
        assert all(np.array_equal(a, b) for a, b in zip(m1.biases, m2.biases))

    def test_single_label_rejected(self):
        with pytest.raises(ValidationError):
            train_arrays(np.zeros((10, 6)), np.zeros(10, dtype=int), (8,),
                         TrainConfig(epochs=1))


class TestSplit:
    def test_fractions_and_stability(self):
        seeds = [((i * 2654435761) % (1 << 64)) for i in range(20_000)]
        tr, va, te = split_masks(seeds)
        assert abs(tr.mean() - 0.8) < 0.02
        assert abs(va.mean() - 0.1) < 0.01
        assert abs(te.mean() - 0.1) < 0.01
        tr2, va2, te2 = split_masks(seeds)
        assert np.array_equal(tr, tr2)
        assert not np.any(tr & va) and not np.any(va & te) and not np.any(tr & te)


class TestEvaluate:
    @staticmethod
    def _records(n, rng):
        from steerhier.protocol import theta_row
        from steerhier.qcore import random_state
        recs = []
        for i in range(n):
            theta = theta_row(random_state(rng))
            label = ["UNS", "MS2", "MS3", "MS4", "STE", "SEP"][i % 6]
            recs.append(LabeledRecord(seed=i, theta=theta, label=label))
        return recs

    def test_report_invariants(self):
        rng = np.random.default_rng(18)
        recs = self._records(60, rng)
        m = init_model("General15", (8,), np.random.default_rng(19))
        rep = evaluate(m, recs)
        assert rep.confusion.sum() == 60
        assert 0.0 <= rep.overall_accuracy <= 1.0
        total_correct = sum(
            rep.confusion[i, i] for i in range(5)
        )
        assert abs(rep.overall_accuracy - total_correct / 60) < 1e-12

    def test_sep_folds_into_uns(self):
        rng = np.random.default_rng(20)
        recs = self._records(12, rng)
        m = init_model("General15", (8,), np.random.default_rng(21))
        rep = evaluate(m, recs)
        # 12 records with labels cycling over 6 raw tags -> UNS row support 4
        assert rep.confusion[CLASS_LABELS.index("UNS")].sum() == 4


class TestModelFile:
    def test_roundtrip_bitwise(self, tmp_path):
        m = init_model("EllB9", (12, 7), np.random.default_rng(22))
        path = tmp_path / "m.txt"
        save_model(m, path)
        m2 = load_model(path)
        rng = np.random.default_rng(23)
        for _ in range(100):
            x = rng.standard_normal(9)
            assert np.array_equal(forward(m, x), forward(m2, x))

    def test_corrupt_header(self, tmp_path):
        path = tmp_path / "m.txt"
        path.write_text("#wrong v9\n")
        with pytest.raises(ValidationError):
            load_model(path)

    def test_inconsistent_shapes(self, tmp_path):
        m = init_model("LutA6", (4,), np.random.default_rng(24))
        path = tmp_path / "m.txt"
        save_model(m, path)
        lines = path.read_text().splitlines()
        lines[2] = "0.0 0.0"  # truncate one weight row
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ValidationError):
            load_model(path)
