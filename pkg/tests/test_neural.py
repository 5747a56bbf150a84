import numpy as np
import pytest

from ppgdtuq.errors import NumericError, ParseError
from ppgdtuq.neural import (Gradients, Layer, Net, backward, forward, init_net, net_from_bytes, net_to_bytes,
                            sgd_step)

from gradcheck import net_param_errors, numeric_grad, rel_error

ACTS = ["relu", "leaky_relu", "tanh", "identity"]


def _single(w, b, act="identity"):
    return Net((Layer(np.asarray(w, float), np.asarray(b, float), act),))


def test_init_deterministic_and_shapes():
    a = init_net([8, 4, 2], ["relu", "identity"], seed=3)
    b = init_net([8, 4, 2], ["relu", "identity"], seed=3)
    assert a.same_params(b)
    assert [l.weights.shape for l in a.layers] == [(4, 8), (2, 4)]
    assert all(np.all(l.biases == 0) for l in a.layers)
    assert not a.same_params(init_net([8, 4, 2], ["relu", "identity"], seed=4))


def test_he_scaling():
    w = init_net([256, 256], ["relu"], seed=0).layers[0].weights
    target = np.sqrt(2 / 256)
    assert abs(w.std() - target) < 0.1 * target


def test_xavier_scaling_for_tanh():
    w = init_net([256, 128], ["tanh"], seed=0).layers[0].weights
    target = np.sqrt(2 / (256 + 128))
    assert abs(w.std() - target) < 0.1 * target


@pytest.mark.parametrize("sizes,acts", [([3], []), ([3, 0], ["relu"]), ([3, 2], ["relu", "tanh"]),
                                        ([3, 2], ["softplus"])])
def test_init_rejects(sizes, acts):
    with pytest.raises(ValueError):
        init_net(sizes, acts, seed=0)


def test_forward_identity_net(rng):
    x = rng.normal(size=5)
    out, _ = forward(_single(np.eye(5), np.zeros(5)), x)
    assert np.array_equal(out, x)


def test_forward_affine():
    out, _ = forward(_single([[2.0]], [1.0]), [3.0])
    assert out.tolist() == [7.0]


def test_forward_tanh_range(rng):
    net = init_net([10, 20, 5], ["relu", "tanh"], seed=1)
    out, _ = forward(net, rng.normal(size=(100, 10)))
    assert np.all(np.abs(out) < 1)
    # float tanh saturates to exactly +-1 for huge inputs but never beyond
    out, _ = forward(net, rng.normal(scale=1e4, size=(100, 10)))
    assert np.all(np.abs(out) <= 1)


def test_forward_dim_mismatch():
    with pytest.raises(ValueError):
        forward(init_net([3, 2], ["relu"], seed=0), np.zeros(4))


def test_forward_does_not_mutate(rng):
    net = init_net([4, 3, 2], ["tanh", "identity"], seed=2)
    before = [p.copy() for p in net.params()]
    x = rng.normal(size=4)
    o1, _ = forward(net, x)
    o2, _ = forward(net, x)
    assert np.array_equal(o1, o2)
    assert all(np.array_equal(a, b) for a, b in zip(before, net.params()))


def test_backward_linear_layer(rng):
    net = _single(rng.normal(size=(3, 4)), rng.normal(size=3))
    x, g = rng.normal(size=4), rng.normal(size=3)
    _, cache = forward(net, x)
    grads, gin = backward(net, cache, g)
    np.testing.assert_allclose(grads.weights[0], np.outer(g, x))
    np.testing.assert_allclose(grads.biases[0], g)
    np.testing.assert_allclose(gin, net.layers[0].weights.T @ g)


def test_backward_relu_blocks_negative_preactivation():
    net = _single([[1.0], [-1.0]], [0.0, 0.0], "relu")
    _, cache = forward(net, [2.0])
    grads, gin = backward(net, cache, [1.0, 1.0])
    assert grads.weights[0][1, 0] == 0.0 and grads.biases[0][1] == 0.0
    assert gin[0] == 1.0


def test_backward_stale_cache():
    a = init_net([2, 2], ["relu"], seed=0)
    b = init_net([2, 2], ["relu"], seed=0)
    _, cache = forward(a, [1.0, 1.0])
    with pytest.raises(RuntimeError):
        backward(b, cache, [1.0, 1.0])


@pytest.mark.parametrize("seed", range(8))
def test_three_layer_gradcheck(seed):
    r = np.random.default_rng(seed)
    sizes = [int(s) for s in r.integers(2, 7, size=4)]
    acts = [ACTS[i] for i in r.integers(0, 4, size=3)]
    net = init_net(sizes, acts, seed=seed)
    net = net.with_params([p + r.normal(scale=0.1, size=p.shape) for p in net.params()])
    x = r.normal(size=(5, sizes[0]))
    c = r.normal(size=(5, sizes[-1]))
    loss = lambda n: float(np.sum(c * forward(n, x)[0]))
    _, cache = forward(net, x)
    grads, gin = backward(net, cache, c)
    assert max(net_param_errors(net, loss, grads.params())) < 1e-4
    num_in = numeric_grad(lambda v: float(np.sum(c * forward(net, v)[0])), x)
    assert rel_error(gin, num_in) < 1e-4


def test_batch_gradients_are_summed(rng):
    net = init_net([3, 4, 2], ["tanh", "identity"], seed=5)
    x, g = rng.normal(size=(6, 3)), rng.normal(size=(6, 2))
    _, cache = forward(net, x)
    total, _ = backward(net, cache, g)
    parts = []
    for i in range(6):
        _, c = forward(net, x[i])
        parts.append(backward(net, c, g[i])[0].params())
    for k, p in enumerate(total.params()):
        np.testing.assert_allclose(p, sum(pp[k] for pp in parts), atol=1e-12)


def test_sgd_zero_lr_unchanged():
    net = init_net([3, 2], ["relu"], seed=0)
    g = Gradients((np.ones((2, 3)),), (np.ones(2),))
    assert sgd_step(net, g, 0.0).same_params(net)


def test_sgd_single_weight():
    net = _single([[1.0]], [0.0])
    out = sgd_step(net, Gradients((np.array([[0.5]]),), (np.array([0.0]),)), 0.1)
    assert out.layers[0].weights[0, 0] == pytest.approx(0.95, abs=1e-15)


def test_sgd_two_steps_on_quadratic():
    eps = 0.1
    net = _single([[1.0]], [0.0])
    for _ in range(2):
        p = net.layers[0].weights
        net = sgd_step(net, Gradients((p.copy(),), (np.zeros(1),)), eps)  # d/dp of p^2/2
    assert net.layers[0].weights[0, 0] == pytest.approx((1 - eps) ** 2, abs=1e-15)


def test_sgd_decreases_convex_quadratic(rng):
    # loss = 0.5 * ||W x - y||^2 with lr under the curvature bound
    net = _single(rng.normal(size=(2, 3)), np.zeros(2))
    x, y = rng.normal(size=3), rng.normal(size=2)
    lr = 0.2 / (x @ x + 1)
    prev = np.inf
    for _ in range(10):
        out, cache = forward(net, x)
        loss = 0.5 * np.sum((out - y) ** 2)
        assert loss < prev
        prev = loss
        net = sgd_step(net, backward(net, cache, out - y)[0], lr)


def test_sgd_nonfinite_names_layer():
    net = init_net([2, 2, 2], ["relu", "relu"], seed=0)
    g = Gradients((np.zeros((2, 2)), np.full((2, 2), np.nan)), (np.zeros(2), np.zeros(2)))
    with pytest.raises(NumericError, match="layer 1"):
        sgd_step(net, g, 0.1)


def test_serialization_roundtrip():
    net = init_net([5, 4, 3], ["leaky_relu", "tanh"], seed=9)
    buf = net_to_bytes(net)
    back, end = net_from_bytes(buf)
    assert end == len(buf)
    assert back.same_params(net)
    assert [l.activation for l in back.layers] == ["leaky_relu", "tanh"]
    with pytest.raises(ParseError):
        net_from_bytes(buf[:-1])
    with pytest.raises(ParseError):
        net_from_bytes(b"XXXX" + buf[4:])
