import numpy as np
import pytest
from hypothesis import given, strategies as st

from goucb.errors import InputError
from goucb.model import AffineModel, TwoLayerSigmoidNet, evaluate, gradient_norm_bound, make_family, sigmoid


def fd_grad(model, w, x, h=1e-5):
    g = np.empty_like(w)
    for i in range(w.size):
        e = np.zeros_like(w)
        e[i] = h
        g[i] = (model.values(w + e, x) - model.values(w - e, x))[0] / (2 * h)
    return g


def test_all_ones_at_origin():
    net = TwoLayerSigmoidNet(d_x=10)
    val = evaluate(net, np.ones(net.d_w), np.zeros(10)).value
    assert abs(val - (5 * sigmoid(1.0) + 1)) < 1e-12
    assert abs(val - 4.6552930) < 1e-6


def test_d_w_layout():
    assert TwoLayerSigmoidNet(d_x=10).d_w == 61
    assert TwoLayerSigmoidNet(d_x=2).d_w == 21
    net = TwoLayerSigmoidNet(d_x=3, hidden=4)
    w = np.arange(net.d_w, dtype=float)
    assert np.array_equal(net.pack(*net.unpack(w)), w)


def test_zero_output_layer():
    net = TwoLayerSigmoidNet(d_x=3)
    rng = np.random.default_rng(0)
    W1, b1 = rng.random((5, 3)), rng.random(5)
    w = net.pack(W1, b1, np.zeros(5), 0.0)
    x = rng.uniform(-5, 5, 3)
    val, g = evaluate(net, w, x)
    assert val == 0.0
    h = sigmoid(W1 @ x + b1)
    assert np.allclose(g[20:25], h)
    assert np.all(g[:20] == 0)


@pytest.mark.parametrize("model", [TwoLayerSigmoidNet(d_x=2), TwoLayerSigmoidNet(d_x=10, hidden=3),
                                   AffineModel(d_x=4, bias=True)])
def test_gradient_matches_finite_differences(model):
    rng = np.random.default_rng(1)
    for _ in range(20):
        w = rng.uniform(-1, 2, model.d_w)
        x = rng.uniform(-5, 5, (1, model.d_x))
        _, G = model.values_and_grads(w, x)
        fd = fd_grad(model, w, x)
        assert np.linalg.norm(G[0] - fd) <= 1e-5 * max(np.linalg.norm(fd), 1e-8)


@given(st.integers(0, 2**32 - 1))
def test_gradient_property(seed):
    net = TwoLayerSigmoidNet(d_x=3)
    rng = np.random.default_rng(seed)
    w = rng.random(net.d_w)
    x = rng.uniform(-5, 5, (1, 3))
    fd = fd_grad(net, w, x)
    _, G = net.values_and_grads(w, x)
    assert np.linalg.norm(G[0] - fd) <= 1e-5 * max(np.linalg.norm(fd), 1e-8)


def test_batched_matches_single():
    net = TwoLayerSigmoidNet(d_x=4)
    rng = np.random.default_rng(2)
    w = rng.random(net.d_w)
    X = rng.uniform(-5, 5, (7, 4))
    f, G = net.values_and_grads(w, X)
    for i in range(7):
        v, g = evaluate(net, w, X[i])
        assert f[i] == pytest.approx(v)
        assert np.allclose(G[i], g)


def test_gradient_bound_dominates_samples():
    net = TwoLayerSigmoidNet(d_x=2)
    rng = np.random.default_rng(3)
    W = rng.random((1000, net.d_w))
    X = rng.uniform(-5, 5, (1000, 2))
    norms = [np.linalg.norm(net.values_and_grads(W[i], X[i:i + 1])[1][0]) for i in range(1000)]
    # corners of both boxes are the worst case; include one
    norms.append(np.linalg.norm(net.values_and_grads(np.ones(net.d_w), np.full((1, 2), 5.0))[1][0]))
    assert gradient_norm_bound(net) >= max(norms)


def test_gradient_bound_point_domain():
    net = TwoLayerSigmoidNet(d_x=2, x_lower=1.0, x_upper=1.0)
    C = gradient_norm_bound(net)
    assert np.isfinite(C)
    rng = np.random.default_rng(4)
    for _ in range(100):
        g = net.values_and_grads(rng.random(net.d_w), np.ones((1, 2)))[1][0]
        assert np.linalg.norm(g) <= C


def test_invalid_configs():
    with pytest.raises(InputError):
        TwoLayerSigmoidNet(d_x=2, hidden=0)
    with pytest.raises(InputError):
        TwoLayerSigmoidNet(d_x=2, w_lower=1.0, w_upper=0.0)
    net = TwoLayerSigmoidNet(d_x=2)
    with pytest.raises(InputError):
        net.values(np.ones(3), np.zeros(2))
    with pytest.raises(InputError):
        evaluate(net, np.ones(net.d_w), np.zeros(3))
    with pytest.raises(InputError):
        make_family("nope")


def test_affine_family():
    m = make_family("affine", d_x=3, bias=True)
    f, G = m.values_and_grads(np.array([1.0, 2.0, 3.0, 4.0]), np.array([[1.0, 1.0, 1.0]]))
    assert f[0] == 10.0
    assert np.array_equal(G[0], [1, 1, 1, 1])
