import numpy as np
import pytest

from oracles import finite_difference_check
from permforge.nn import Adam, Network, sigmoid, train_network


def small_net(rng, dims=(4, 2, 1), acts=("relu", "sigmoid")):
    net = Network(list(dims), list(acts), [False] * (len(dims) - 1))
    net.init_params(rng)
    for b in net.biases:
        b[:] = rng.normal(scale=0.3, size=b.shape)
    return net


def test_sigmoid_is_stable():
    z = np.array([-1000.0, -1.0, 0.0, 1.0, 1000.0])
    out = sigmoid(z)
    assert out[2] == 0.5 and out[0] == 0.0 and out[-1] == 1.0
    assert np.allclose(out[1] + out[3], 1.0)


@pytest.mark.parametrize("seed", range(10))
def test_bce_gradients_match_finite_differences(seed):
    rng = np.random.default_rng(seed)
    net = small_net(rng)
    X = rng.normal(size=(6, 4))
    Y = rng.integers(0, 2, (6, 1)).astype(float)
    assert finite_difference_check(net, X, Y, "bce") <= 1e-3


@pytest.mark.parametrize("seed", range(5))
def test_mse_gradients_with_sigmoid_hidden(seed):
    rng = np.random.default_rng(100 + seed)
    net = small_net(rng, (5, 3, 2, 5), ("relu", "sigmoid", "sigmoid"))
    X = rng.random((7, 5))
    assert finite_difference_check(net, X, X, "mse") <= 1e-3


def test_dropout_only_when_training():
    rng = np.random.default_rng(0)
    net = Network([8, 16, 1], ["relu", "sigmoid"], [True, False], 0.4)
    net.init_params(rng)
    X = rng.random((50, 8))
    assert np.array_equal(net.predict(X), net.predict(X))
    train = net.forward(X, np.random.default_rng(1))
    mask = train["masks"][0]
    assert set(np.unique(mask)) <= {0.0, 1.0 / 0.6}
    assert train["masks"][1] is None


def test_adam_first_step_moves_by_lr():
    p = np.array([1.0, -2.0])
    opt = Adam([p], lr=0.1)
    opt.step([p], [np.array([3.0, -0.5])])
    assert np.allclose(p, [0.9, -1.9], atol=1e-7)


def test_training_reduces_loss_and_records_history():
    rng = np.random.default_rng(3)
    X = rng.random((120, 4))
    Y = (X[:, :1] > 0.5).astype(float)
    net = Network([4, 8, 1], ["relu", "sigmoid"], [False, False])
    net.init_params(rng)
    hist = train_network(net, X, Y, "bce", 40, 16, 0.05, rng, val_fraction=0.25)
    assert hist["train_loss"][-1] < hist["train_loss"][0]
    assert len(hist["val_loss"]) == 40


def test_network_validation():
    with pytest.raises(ValueError):
        Network([3], [], [])
    with pytest.raises(ValueError):
        Network([3, 1], ["tanh"], [False])
    with pytest.raises(ValueError):
        train_network(small_net(np.random.default_rng(0)), np.zeros((2, 4)), np.zeros((2, 1)), "hinge",
                      1, 1, 0.1, np.random.default_rng(0))
