import numpy as np
import pytest

from vadtransfer import *


def _small_stack(seed=0, dims=(6, 4, 3)):
    rng = np.random.default_rng(seed)
    layers = list()
    for idx in range(len(dims) - 1):
        layer = init_layer(dims[idx], dims[idx + 1], seed + idx)
        layer.b_enc[:] = rng.normal(0.0, 0.1, dims[idx + 1])
        layer.b_dec[:] = rng.normal(0.0, 0.1, dims[idx])
        layers.append(layer)
    output = init_output_unit(dims[-1], seed + 10)
    output.b[:] = 0.05
    return NetworkStack(layers, output, dims[0])


def _assert_progress(history):
    losses = [loss for _, loss in history]
    assert losses[-1] < losses[0]
    regressions = [(b - a) / a for a, b in zip(losses, losses[1:]) if b > a]
    assert len(regressions) <= 1
    assert all(r <= 0.02 for r in regressions)


def test_init_layer():
    layer = init_layer(273, 54, seed=7)
    bound = np.sqrt(6.0 / 327)
    assert bound == pytest.approx(0.1354, abs=1e-4)
    assert layer.W.shape == (54, 273)
    assert np.abs(layer.W).max() < bound
    assert np.abs(layer.W).max() > 0.95 * bound
    assert not layer.b_enc.any() and not layer.b_dec.any()
    assert np.array_equal(init_layer(273, 54, seed=7).W, layer.W)
    with pytest.raises(InvalidNetworkShape):
        init_layer(0, 3, seed=1)


def test_reconstruction_ce_closed_forms():
    assert reconstruction_ce(np.full(7, 0.5), np.full(7, 0.5)) == pytest.approx(7 * np.log(2))
    assert reconstruction_ce(np.array([1.0, 0.0]), np.array([0.9, 0.1])) == pytest.approx(0.2107, abs=1e-4)

    rng = np.random.default_rng(1)
    t, r = rng.uniform(size=9), rng.uniform(0.01, 0.99, size=9)
    direct = 0.0
    for tj, rj in zip(t, r):
        direct -= tj * np.log(rj) + (1.0 - tj) * np.log(1.0 - rj)
    assert reconstruction_ce(t, r) == pytest.approx(direct, abs=1e-12)
    with pytest.raises(DimensionMismatch):
        reconstruction_ce(np.zeros(2), np.full(3, 0.5))


def test_finetune_gradients():
    rng = np.random.default_rng(2)
    stack = _small_stack(seed=3)
    x = rng.uniform(size=(5, 6))
    y = np.array([1.0, 0.0, 1.0, 1.0, 0.0])
    report = gradient_check(stack, x, y)
    assert report.passed()
    assert report.n_params == 6 * 4 + 4 + 4 * 3 + 3 + 3 + 1


def test_gradient_check_dead_unit():
    stack = _small_stack(seed=4)
    stack.hidden_layers[1].W[0, :] = 0.0
    stack.hidden_layers[1].b_enc[0] = 40.0  # saturated unit, no gradient flows through it
    x = np.random.default_rng(5).uniform(size=(5, 6))
    report = gradient_check(stack, x, np.array([0.0, 1.0, 0.0, 1.0, 1.0]))
    assert report.passed()


@pytest.mark.parametrize("target_kind", [PretrainTarget.LayerInput, PretrainTarget.LayerOutput])
def test_pretrain_gradients(target_kind):
    rng = np.random.default_rng(6)
    layer = init_layer(5, 3, seed=8)
    layer.b_enc[:] = rng.normal(0.0, 0.1, 3)
    layer.b_dec[:] = rng.normal(0.0, 0.1, 5)
    x = rng.uniform(size=(4, 5))
    target = rng.uniform(size=(4, 5) if target_kind == PretrainTarget.LayerInput else (4, 3))
    assert pretrain_gradient_check(layer, x, target, target_kind).passed()


def test_pretrain_reduces_loss(unit_pair):
    cfg = TrainConfig(lr_pretrain=0.02, epochs_pretrain=60, checkpoint_every=20, batch_size=64,
                      hidden_widths=(8, 4, 3), seed=2)
    noisy, clean = pretrain_ddnn(unit_pair, 3, cfg)
    assert noisy.stack.widths == (8, 4, 3)
    assert clean.stack.widths == (8, 4)
    for history in noisy.loss_history + clean.loss_history:
        assert [epoch for epoch, _ in history] == [0, 20, 40, 60]
        _assert_progress(history)


def test_noisy_stack_degenerates_to_autoencoder(unit_pair):
    cfg = TrainConfig(epochs_pretrain=5, checkpoint_every=1, batch_size=32, hidden_widths=(8, 4), seed=9)
    pair = PretrainPair(unit_pair.clean, unit_pair.clean)
    noisy, _ = pretrain_ddnn(pair, 2, cfg)
    plain = pretrain_clean_stack(unit_pair.clean, 2, cfg)
    assert noisy.loss_history == plain.loss_history
    for ours, theirs in zip(noisy.stack.hidden_layers, plain.stack.hidden_layers):
        assert np.array_equal(ours.W, theirs.W)
        assert np.array_equal(ours.b_enc, theirs.b_enc)


@pytest.mark.parametrize("objective", [reconstruction_loss_and_grads, code_loss_and_grads])
def test_batch_losses_are_row_means(objective):
    rng = np.random.default_rng(14)
    layer = init_layer(5, 3, seed=15)
    x = rng.uniform(size=(6, 5))
    target = rng.uniform(size=(6, 5) if objective is reconstruction_loss_and_grads else (6, 3))
    loss, grads = objective(layer, x, target)
    doubled_loss, doubled_grads = objective(layer, np.vstack([x, x]), np.vstack([target, target]))
    assert doubled_loss == pytest.approx(loss, rel=1e-12)
    for grad, doubled in zip(grads, doubled_grads):
        assert np.allclose(doubled, grad, rtol=1e-12, atol=1e-15)
    if objective is reconstruction_loss_and_grads:
        assert loss == pytest.approx(reconstruction_ce(target, layer.decode(layer.encode(x))) / 6, rel=1e-10)

    stack = NetworkStack([layer], init_output_unit(3, seed=16), input_dim=5)
    y = np.array([1.0, 0.0, 0.0, 1.0, 1.0, 0.0])
    fine_loss, _ = finetune_loss_and_grads(stack, x, y)
    assert finetune_loss_and_grads(stack, np.vstack([x, x]), np.concatenate([y, y]))[0] == pytest.approx(fine_loss)


def test_default_config_first_layer_settles(low_rank_pair):
    cfg = TrainConfig(seed=2)
    assert (cfg.batch_size, cfg.checkpoint_every, cfg.epochs_pretrain) == (512, 20, 200)
    noisy, clean = pretrain_ddnn(low_rank_pair, 1, cfg)
    assert clean.stack.depth == 0
    history = noisy.loss_history[0]
    assert [epoch for epoch, _ in history] == list(range(0, 201, 20))
    _assert_progress(history)
    assert history[-1][1] < 0.9 * history[0][1]


@pytest.mark.slow
def test_every_layer_settles_at_default_config(low_rank_pair):
    noisy, clean = pretrain_ddnn(low_rank_pair, 3, TrainConfig(seed=3))
    assert noisy.stack.widths == (54, 7, 7)
    assert clean.stack.widths == (54, 7)
    for history in noisy.loss_history + clean.loss_history:
        assert len(history) == 11
        _assert_progress(history)
        assert history[-1][1] < 0.9 * history[0][1]


def test_pretrain_is_deterministic(unit_pair, tiny_cfg):
    first, _ = pretrain_ddnn(unit_pair, 2, tiny_cfg)
    second, _ = pretrain_ddnn(unit_pair, 2, tiny_cfg)
    for a, b in zip(first.stack.params(), second.stack.params()):
        assert np.array_equal(a, b)
    rows = unit_pair.noisy.rows
    assert np.array_equal(first.stack.encode(rows), first.stack.encode(rows))


def test_pretrain_pair_validation():
    with pytest.raises(RowCountMismatch):
        PretrainPair(FeatureMatrix(np.zeros((3, 2))), FeatureMatrix(np.zeros((4, 2))))
    with pytest.raises(InvalidNetworkShape):
        PretrainPair(FeatureMatrix(np.full((3, 2), 1.5)), FeatureMatrix(np.zeros((3, 2))))


def test_train_config_validation():
    with pytest.raises(InvalidExperimentConfig):
        TrainConfig(lr_pretrain=0.0)
    with pytest.raises(InvalidExperimentConfig):
        TrainConfig(hidden_widths=(4, 4, 4, 4))
    with pytest.raises(InvalidExperimentConfig):
        TrainConfig().with_overrides({"momentum": 0.9})
    assert TrainConfig().with_overrides({"epochs_finetune": 3}).epochs_finetune == 3


def _separable(n=400, seed=11):
    rng = np.random.default_rng(seed)
    x = rng.uniform(size=(4 * n, 2))
    x = x[np.abs(x[:, 0] - x[:, 1]) > 0.15][:n]
    return FeatureMatrix(x, (x[:, 0] > x[:, 1]).astype(np.int8))


def test_finetune_separable_data():
    data = _separable()
    stack = NetworkStack([init_layer(2, 4, seed=1)], init_output_unit(4, seed=2), input_dim=2)
    cfg = TrainConfig(lr_finetune=0.8, epochs_finetune=400, batch_size=16, hidden_widths=(4,), seed=3,
                      checkpoint_every=50)
    result = finetune(stack, data, cfg, dev=data)
    assert result.best_dev_accuracy == 100.0
    assert frame_accuracy(result.stack, data) == 100.0


def test_finetune_keeps_best_dev_snapshot():
    data = _separable(seed=12)
    dev = _separable(n=100, seed=13)
    stack = NetworkStack([init_layer(2, 3, seed=4)], init_output_unit(3, seed=5), input_dim=2)
    cfg = TrainConfig(lr_finetune=0.64, epochs_finetune=15, batch_size=32, hidden_widths=(3,), seed=6)
    result = finetune(stack, data, cfg, dev=dev)
    assert len(result.dev_accuracies) == 16
    assert result.best_dev_accuracy == max(result.dev_accuracies)
    assert result.best_dev_accuracy >= result.dev_accuracies[0]
    assert result.best_dev_accuracy >= result.dev_accuracies[-1]
    assert result.best_epoch == result.dev_accuracies.index(max(result.dev_accuracies))
    assert frame_accuracy(result.stack, dev) == result.best_dev_accuracy

    again = finetune(stack, data, cfg, dev=dev)
    assert again.dev_accuracies == result.dev_accuracies
    with pytest.raises(LabelLengthMismatch):
        finetune(stack, data.unlabeled(), cfg)


def test_predict():
    zero = NetworkStack([LayerWeights(np.zeros((3, 5)), np.zeros(3), np.zeros(5))],
                        OutputUnit(np.zeros(3), np.zeros(1)), input_dim=5)
    rows = FeatureMatrix(np.random.default_rng(7).uniform(size=(10, 5)))
    prediction = predict(zero, rows)
    assert np.all(prediction.probabilities == 0.5)
    assert np.all(prediction.labels == FrameLabel.NonSpeech)

    stack = _small_stack(dims=(5, 4, 3))
    forward = predict(stack, rows)
    reversed_rows = predict(stack, FeatureMatrix(rows.rows[::-1]))
    assert np.array_equal(forward.labels, reversed_rows.labels[::-1])
    assert np.all((forward.probabilities > 0.0) & (forward.probabilities < 1.0))
    with pytest.raises(DimensionMismatch):
        predict(stack, FeatureMatrix(np.zeros((2, 6))))


def test_model_file(tmp_path):
    stack = _small_stack(seed=12)
    path = write_model(str(tmp_path / "model"), stack, {"seed": 12})
    assert path.endswith(".ddnn")
    back, sidecar = read_model(path)
    assert sidecar == {"seed": 12}
    assert back.widths == stack.widths and back.input_dim == stack.input_dim
    for a, b in zip(stack.params(), back.params()):
        assert np.array_equal(a, b)

    raw = (tmp_path / "model.ddnn").read_bytes()
    (tmp_path / "magic.ddnn").write_bytes(b"NNDD" + raw[4:])
    with pytest.raises(InvalidModelFile):
        read_model(str(tmp_path / "magic.ddnn"))
    (tmp_path / "cut.ddnn").write_bytes(raw[:-3])
    with pytest.raises(InvalidModelFile):
        read_model(str(tmp_path / "cut.ddnn"))
    (tmp_path / "long.ddnn").write_bytes(raw + b"\x00")
    with pytest.raises(InvalidModelFile):
        read_model(str(tmp_path / "long.ddnn"))


@pytest.mark.parametrize("seed", range(50))
def test_random_stack_gradients(seed):
    rng = np.random.default_rng(100 + seed)
    depth = 1 + seed % 3
    dims = tuple(int(d) for d in rng.integers(2, 9, size=depth + 1))
    stack = _small_stack(seed=200 + seed, dims=dims)
    x = rng.uniform(size=(4, dims[0]))
    y = (rng.uniform(size=4) > 0.5).astype(np.float64)
    assert gradient_check(stack, x, y).passed()
    reps = stack.representations(x)
    for layer, below in zip(stack.hidden_layers, reps):
        assert pretrain_gradient_check(layer, below, rng.uniform(size=below.shape)).passed()
        assert pretrain_gradient_check(layer, below, rng.uniform(size=(4, layer.out_dim)),
                                       PretrainTarget.LayerOutput).passed()
