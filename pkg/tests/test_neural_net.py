import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mirrorgroup.neural_net import (DEFAULT_SIZES, QNetwork, TrainStep, apply_update, backward,
                                    clone_into, forward, load_checkpoint, save_checkpoint, sigmoid)


def loop_forward(net, x):
    """Oracle: unit-by-unit evaluation in plain Python."""
    a = [float(v) for v in x]
    for layer in net.layers:
        n_in, n_out = layer.weight.shape
        out = []
        for j in range(n_out):
            z = float(layer.bias[j]) + math.fsum(a[i] * float(layer.weight[i, j]) for i in range(n_in))
            out.append(1.0 / (1.0 + math.exp(-z)) if layer.activation == "sigmoid" else z)
        a = out
    return np.array(a)


def masked_loss(net, x, target, mask):
    out = forward(net, x)
    err = mask * (out - target)
    return 0.5 * float(np.sum(err * err)) / np.atleast_2d(x).shape[0]


def random_net(seed, sizes=DEFAULT_SIZES):
    rng = np.random.default_rng(seed)
    net = QNetwork(sizes, rng)
    for layer in net.layers:
        layer.bias[:] = rng.normal(0, 0.3, layer.bias.shape)
    return net


def test_architecture():
    net = QNetwork(rng=np.random.default_rng(0))
    assert net.sizes == (4, 64, 32, 9)
    assert [layer.activation for layer in net.layers] == ["sigmoid", "sigmoid", "linear"]
    assert [layer.weight.shape for layer in net.layers] == [(4, 64), (64, 32), (32, 9)]
    for layer in net.layers:
        n_in, n_out = layer.weight.shape
        assert np.all(np.abs(layer.weight) <= math.sqrt(6 / (n_in + n_out)))
        assert np.all(layer.bias == 0)


def test_zero_net_outputs_zero():
    assert np.array_equal(forward(QNetwork(), np.ones(4)), np.zeros(9))


def test_output_bias_passes_through():
    net = QNetwork()
    net.layers[-1].bias[:] = np.arange(9.0)
    assert np.array_equal(forward(net, np.array([0.3, -1.0, 2.0, 5.0])), np.arange(9.0))


def test_forward_matches_loop_oracle():
    for seed in range(10):
        net = random_net(seed)
        x = np.random.default_rng(100 + seed).normal(size=4)
        assert np.allclose(forward(net, x), loop_forward(net, x), rtol=0, atol=1e-12)


def test_forward_batch_equals_rows():
    net = random_net(1)
    xb = np.random.default_rng(2).normal(size=(7, 4))
    out = forward(net, xb)
    for i in range(7):
        assert np.allclose(out[i], forward(net, xb[i]), atol=1e-14)


def test_forward_is_deterministic():
    net = random_net(3)
    x = np.array([0.1, 0.2, -0.3, 0.4])
    assert forward(net, x).tobytes() == forward(net, x).tobytes()


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        forward(QNetwork(), np.ones(3))
    with pytest.raises(ValueError):
        backward(QNetwork(), np.ones(4), np.ones(8), np.ones(8))


def test_sigmoid_stays_inside_open_interval():
    z = np.linspace(-1000, 1000, 20001)
    s = sigmoid(z)
    assert np.all(s > 0) and np.all(s < 1) and np.all(np.isfinite(s))


def test_no_nan_for_large_inputs():
    net = random_net(4)
    out = forward(net, np.random.default_rng(0).uniform(-100, 100, size=(100, 4)))
    assert np.all(np.isfinite(out))


def test_zero_error_gives_zero_gradient():
    net = random_net(5)
    x = np.array([0.5, -0.5, 0.1, 0.0])
    target = forward(net, x)
    mask = np.zeros(9)
    mask[4] = 1
    grads, loss = backward(net, x, target, mask)
    assert loss == 0.0
    assert all(np.all(g == 0) for g in grads)


def test_masked_out_actions_get_no_output_gradient():
    net = random_net(6)
    mask = np.zeros(9)
    mask[2] = 1
    grads, _ = backward(net, np.ones(4), np.full(9, 5.0), mask)
    w_out, b_out = grads[-2], grads[-1]
    others = [j for j in range(9) if j != 2]
    assert np.all(w_out[:, others] == 0) and np.all(b_out[others] == 0)
    assert np.any(w_out[:, 2] != 0)


def _fd_check(net, x, target, mask, h=1e-5):
    grads, _ = backward(net, x, target, mask)
    worst = 0.0
    for p, g in zip(net.parameters(), grads):
        for idx in np.ndindex(p.shape):
            old = p[idx]
            p[idx] = old + h
            up = masked_loss(net, x, target, mask)
            p[idx] = old - h
            down = masked_loss(net, x, target, mask)
            p[idx] = old
            fd = (up - down) / (2 * h)
            scale = max(abs(fd), abs(g[idx]), 1e-7)
            worst = max(worst, abs(fd - g[idx]) / scale)
    return worst


def test_gradients_match_finite_differences_small_net():
    rng = np.random.default_rng(7)
    for seed in range(10):
        net = random_net(seed, (4, 6, 5, 9))
        x = rng.normal(size=(3, 4))
        target = rng.normal(size=(3, 9))
        mask = np.eye(9)[rng.integers(9, size=3)]
        assert _fd_check(net, x, target, mask) <= 1e-4


def test_plain_descent_when_momentum_is_zero():
    net = random_net(8)
    before = [p.copy() for p in net.parameters()]
    grads = [np.full_like(p, 0.5) for p in before]
    apply_update(net, grads, TrainStep(learning_rate=0.1, momentum=0.0))
    for b, p in zip(before, net.parameters()):
        assert np.allclose(p, b - 0.05, atol=1e-15)


def test_zero_gradient_leaves_parameters():
    net = random_net(9)
    before = [p.copy() for p in net.parameters()]
    apply_update(net, [np.zeros_like(p) for p in before], TrainStep())
    assert all(np.array_equal(a, b) for a, b in zip(before, net.parameters()))


def test_momentum_accumulates():
    net = QNetwork((1, 1))
    ts = TrainStep(learning_rate=1.0, momentum=0.5)
    g = [np.ones((1, 1)), np.zeros(1)]
    apply_update(net, g, ts)
    apply_update(net, g, ts)
    # velocities -1 then -1.5
    assert net.layers[0].weight[0, 0] == -2.5


def test_train_step_validation():
    with pytest.raises(ValueError):
        TrainStep(momentum=1.0)
    with pytest.raises(ValueError):
        TrainStep(learning_rate=-1e-3)
    ts = TrainStep().reset(QNetwork())
    with pytest.raises(ValueError):
        apply_update(QNetwork(), [np.zeros(3)], ts)


def test_fixed_batch_fit_reduces_loss():
    rng = np.random.default_rng(10)
    net = QNetwork(rng=rng)
    x = rng.normal(size=(10, 4))
    target = rng.normal(size=(10, 9))
    mask = np.eye(9)[rng.integers(9, size=10)]
    ts = TrainStep(learning_rate=1e-2, momentum=0.9)
    first = masked_loss(net, x, target, mask)
    for _ in range(200):
        grads, _ = backward(net, x, target, mask)
        apply_update(net, grads, ts)
    assert masked_loss(net, x, target, mask) < first


def test_clone_is_a_deep_copy():
    src, dst = random_net(11), QNetwork()
    clone_into(src, dst)
    x = np.array([0.2, 0.1, -0.4, 0.3])
    assert np.array_equal(forward(src, x), forward(dst, x))
    assert src.to_bytes() == dst.to_bytes()
    src.layers[0].weight += 1.0
    assert not np.array_equal(forward(src, x), forward(dst, x))


def test_clone_of_fresh_net_is_byte_identical():
    src = QNetwork(rng=np.random.default_rng(12))
    assert src.copy().to_bytes() == src.to_bytes()


def test_clone_architecture_mismatch():
    with pytest.raises(ValueError):
        clone_into(QNetwork(), QNetwork((4, 8, 9)))


def test_checkpoint_round_trip_is_exact(tmp_path):
    net = random_net(13)
    path = save_checkpoint(net, tmp_path / "net.json")
    loaded = load_checkpoint(path, DEFAULT_SIZES)
    xb = np.random.default_rng(0).normal(size=(50, 4))
    assert forward(net, xb).tobytes() == forward(loaded, xb).tobytes()
    assert loaded.to_bytes() == net.to_bytes()


def test_checkpoint_architecture_mismatch(tmp_path):
    path = save_checkpoint(QNetwork((4, 8, 9)), tmp_path / "small.json")
    with pytest.raises(ValueError, match="architecture"):
        load_checkpoint(path, DEFAULT_SIZES)
    (tmp_path / "bad.json").write_text('{"format": "other"}')
    with pytest.raises(ValueError):
        load_checkpoint(tmp_path / "bad.json")


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), action=st.integers(0, 8))
def test_gradient_property_default_architecture(seed, action):
    rng = np.random.default_rng(seed)
    net = random_net(seed)
    x = rng.normal(size=4)
    target = rng.normal(size=9) * 2
    mask = np.eye(9)[action]
    grads, _ = backward(net, x, target, mask)
    # spot-check a random subset of components against central differences
    h = 1e-5
    params = net.parameters()
    for _ in range(20):
        k = rng.integers(len(params))
        idx = tuple(rng.integers(s) for s in params[k].shape)
        old = params[k][idx]
        params[k][idx] = old + h
        up = masked_loss(net, x, target, mask)
        params[k][idx] = old - h
        down = masked_loss(net, x, target, mask)
        params[k][idx] = old
        fd = (up - down) / (2 * h)
        g = grads[k][idx]
        assert abs(fd - g) <= 1e-4 * max(abs(fd), abs(g), 1e-6)
