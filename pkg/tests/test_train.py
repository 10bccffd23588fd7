"""Training loop contracts: separable data, zero epochs, determinism."""

from types import SimpleNamespace

import numpy as np
import pytest

from advlab.errors import AdvlabError
from advlab.nn import TrainConfig, affine, build_network, relu, train_classifier
from advlab.nn.train import accuracy


def blobs(n_per_class, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal([0.25, 0.25], 0.06, size=(n_per_class, 2))
    b = rng.normal([0.75, 0.75], 0.06, size=(n_per_class, 2))
    images = np.clip(np.vstack([a, b]), 0, 1)
    labels = np.array([0] * n_per_class + [1] * n_per_class)
    return SimpleNamespace(images=images, labels=labels)


def test_separable_blobs_reach_high_accuracy():
    data = blobs(100, seed=1)
    net = build_network((2,), [affine(out_dim=2)], seed=0)
    cfg = TrainConfig(epochs=120, batch_size=32, lr=0.5, momentum=0.9, seed=3)
    trained = train_classifier(net, data, cfg)
    assert accuracy(trained, data) >= 0.99
    assert len(trained.train_losses) == 120
    assert trained.train_losses[-1] < trained.train_losses[0]


def test_zero_epochs_leaves_params_unchanged():
    data = blobs(10, seed=2)
    net = build_network((2,), [affine(out_dim=4), relu(), affine(out_dim=2)], seed=1)
    trained = train_classifier(net, data, TrainConfig(epochs=0))
    for p, q in zip(net.params, trained.params):
        if p is None:
            assert q is None
            continue
        assert np.array_equal(p["W"], q["W"]) and np.array_equal(p["b"], q["b"])


def test_same_seed_same_parameters():
    data = blobs(40, seed=5)
    net = build_network((2,), [affine(out_dim=8), relu(), affine(out_dim=2)], seed=2)
    cfg = TrainConfig(epochs=15, batch_size=16, lr=0.2, seed=7)
    t1 = train_classifier(net, data, cfg)
    t2 = train_classifier(net, data, cfg)
    for p, q in zip(t1.params, t2.params):
        if p is None:
            continue
        assert np.array_equal(p["W"], q["W"]) and np.array_equal(p["b"], q["b"])


def test_empty_dataset_rejected():
    net = build_network((2,), [affine(out_dim=2)], seed=0)
    empty = SimpleNamespace(images=np.zeros((0, 2)), labels=np.zeros(0, dtype=int))
    with pytest.raises(AdvlabError):
        train_classifier(net, empty, TrainConfig(epochs=1))
