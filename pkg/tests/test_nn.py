import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gradcheck import check
from nilmgap import nn
from nilmgap.errors import NonFiniteError, ShapeError, TrainingDiverged
from nilmgap.neural import LSTM_W49, S2P_W99

SMALL = {
    "dense": ([nn.Dense(4), nn.Relu(), nn.Dense(2)], (5,)),
    "conv": ([nn.Conv1D(3, 4), nn.Relu(), nn.Conv1D(2, 3, stride=2), nn.Flatten(), nn.Dense(1)], (12, 2)),
    "lstm": ([nn.Lstm(3, return_sequences=True), nn.Lstm(4), nn.Dense(1)], (6, 2)),
}


def data(shape, out, batch, seed):
    rng = np.random.default_rng(seed)
    return rng.normal(size=(batch, *shape)), rng.normal(size=(batch, out))


@pytest.mark.parametrize("name", list(SMALL))
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_gradients_small(name, seed):
    specs, shape = SMALL[name]
    net = nn.Network(specs, shape, seed=seed)
    x, y = data(shape, net.output_shape[0], 3, seed)
    worst, checked, _ = check(net, x, y)
    assert checked > 0
    assert worst < 1e-4


@pytest.mark.parametrize("arch", [S2P_W99, LSTM_W49], ids=lambda a: a.name)
def test_gradients_full_stack(arch):
    net = nn.Network(arch.layers, (arch.window, 1), seed=5)
    x, y = data((arch.window, 1), 1, 2, 5)
    worst, checked, _ = check(net, x, y, max_coords=6)
    assert checked > 0
    assert worst < 1e-4


def test_dense_identity():
    net = nn.Network([nn.Dense(3)], (3,), init=False)
    net.set_state([np.eye(3), np.zeros(3)])
    x = np.array([[1.0, -2.0, 3.5]])
    assert np.array_equal(net.forward(x), x)


def test_conv_ones_on_constant():
    net = nn.Network([nn.Conv1D(1, 5)], (20, 1), init=False)
    net.set_state([np.ones((5, 1)), np.zeros(1)])
    out = net.forward(np.full((1, 20, 1), 2.5))
    assert out.shape == (1, 16, 1)
    assert np.all(out == 12.5)


def test_lstm_zero_weights_gives_zero():
    net = nn.Network([nn.Lstm(4)], (7, 3), init=False)
    out = net.forward(np.random.default_rng(0).normal(size=(2, 7, 3)))
    assert np.all(out == 0)


def test_zero_loss_zero_gradients():
    net = nn.Network(SMALL["dense"][0], (5,), seed=0)
    x = np.random.default_rng(0).normal(size=(4, 5))
    loss, grads = nn.backward(net, x, net.forward(x))
    assert loss == 0
    assert all(np.all(g == 0) for g in grads)


def test_duplicated_batch_same_mean_gradient():
    specs, shape = SMALL["conv"]
    net = nn.Network(specs, shape, seed=1)
    x, y = data(shape, 1, 3, 1)
    _, g1 = nn.backward(net, x, y)
    g1 = [g.copy() for g in g1]
    _, g2 = nn.backward(net, np.concatenate([x, x]), np.concatenate([y, y]))
    for a, b in zip(g1, g2):
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-15)


def test_shape_errors():
    net = nn.Network([nn.Dense(2)], (3,))
    with pytest.raises(ShapeError):
        net.forward(np.zeros((1, 4)))
    with pytest.raises(ShapeError):
        nn.backward(net, np.zeros((1, 3)), np.zeros((1, 3)))
    with pytest.raises(ShapeError):
        nn.Network([nn.Conv1D(2, 10)], (5, 1))
    with pytest.raises(ShapeError):
        nn.Network([nn.Dense(2)], (5, 1))


def test_non_finite_output():
    net = nn.Network([nn.Dense(1)], (1,))
    with pytest.raises(NonFiniteError):
        net.forward(np.array([[np.inf]]))


def linear_problem(n=10_000, seed=0):
    x = np.random.default_rng(seed).uniform(-1, 1, (n, 1))
    return x, 2 * x


def test_learns_slope_two():
    x, y = linear_problem()
    net = nn.Network([nn.Dense(1)], (1,), seed=0)
    nn.train(net, x, y, nn.TrainConfig(epochs=25, batch_size=64, learning_rate=1e-2))
    w, b = (v for _, v in net.parameters())
    assert abs(w[0, 0] - 2.0) <= 0.01
    assert abs(b[0]) <= 0.01


def test_training_is_bitwise_deterministic():
    x, y = linear_problem(2000)
    runs = []
    for _ in range(2):
        net = nn.Network(SMALL["dense"][0][:1] + [nn.Relu(), nn.Dense(1)], (1,), seed=3)
        _, hist = nn.train(net, x, y, nn.TrainConfig(epochs=3, seed=7), (x[:100], y[:100]))
        runs.append((b"".join(v.tobytes() for _, v in net.parameters()), hist.train_loss, hist.val_loss))
    assert runs[0] == runs[1]


def test_zero_learning_rate_leaves_parameters():
    x, y = linear_problem(500)
    net = nn.Network([nn.Dense(4), nn.Relu(), nn.Dense(1)], (1,), seed=2)
    before = net.get_state()
    nn.train(net, x, y, nn.TrainConfig(epochs=2, learning_rate=0.0))
    assert all(np.array_equal(a, b) for a, b in zip(before, net.get_state()))


def test_epoch_loss_non_increasing_after_warmup():
    x, y = linear_problem(4000, seed=1)
    net = nn.Network([nn.Dense(1)], (1,), seed=0)
    _, hist = nn.train(net, x, y, nn.TrainConfig(epochs=12, learning_rate=1e-2))
    tail = hist.train_loss[3:]
    assert all(b <= a for a, b in zip(tail, tail[1:]))


def test_best_validation_epoch_restored():
    x, y = linear_problem(1000)
    vx, vy = x[:200], y[:200]
    net = nn.Network([nn.Dense(1)], (1,), seed=0)
    _, hist = nn.train(net, x, y, nn.TrainConfig(epochs=5, learning_rate=1e-2), (vx, vy))
    assert hist.best_epoch == int(np.argmin(hist.val_loss))
    assert nn.evaluate(net, vx, vy) == min(hist.val_loss)


def test_divergence_detected():
    x = np.full((64, 1), 1e200)
    net = nn.Network([nn.Dense(1)], (1,), seed=0)
    with pytest.raises(TrainingDiverged):
        nn.train(net, x, x, nn.TrainConfig(epochs=1))


def test_save_load_round_trip(tmp_path):
    net = nn.Network(LSTM_W49.layers, (49, 1), seed=4)
    x = np.random.default_rng(0).normal(size=(5, 49, 1))
    nn.save_network(tmp_path / "m.npz", net, {"k": 1})
    back, meta = nn.load_network(tmp_path / "m.npz")
    assert meta == {"k": 1}
    assert back.forward(x).tobytes() == net.forward(x).tobytes()


def test_load_rejects_other_files(tmp_path):
    np.savez(tmp_path / "x.npz", header=np.frombuffer(b'{"format": "other"}', dtype=np.uint8))
    with pytest.raises(ValueError):
        nn.load_network(tmp_path / "x.npz")


def test_train_config_validation():
    with pytest.raises(ValueError):
        nn.TrainConfig(learning_rate=-1)
    with pytest.raises(ValueError):
        nn.TrainConfig(epochs=0)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_init_depends_only_on_seed(seed):
    a = nn.Network(S2P_W99.layers, (99, 1), seed=seed).get_state()
    b = nn.Network(S2P_W99.layers, (99, 1), seed=seed).get_state()
    assert all(np.array_equal(u, v) for u, v in zip(a, b))
