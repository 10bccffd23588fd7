"""Gradient exactness against finite differences and closed forms."""

import numpy as np
import pytest

from advlab.errors import ShapeError
from advlab.nn import (
    CrossEntropy,
    CwMargin,
    FeaturePushTerm,
    LossSpec,
    affine,
    build_network,
    forward,
    grad_input,
    grad_penultimate,
    relu,
)
from advlab.nn.network import softmax

from helpers import finite_diff_grad, random_convnet, random_mlp, rel_err, sample_safe_input


def test_constant_loss_zero_gradient():
    net = build_network((4,), [affine(out_dim=6), relu(), affine(out_dim=3)], seed=0)
    loss = LossSpec(base=None, extras=((FeaturePushTerm(layer=1, direction="down"), 0.0),))
    value, g = grad_input(net, np.full(4, 0.5), loss)
    assert value == 0.0
    assert np.all(g == 0.0)


def test_cross_entropy_grad_matches_finite_differences():
    rng = np.random.default_rng(11)
    for trial in range(8):
        net = random_mlp(rng, in_dim=6, num_classes=3)
        x = sample_safe_input(net, rng)
        loss = LossSpec(base=CrossEntropy(target=int(rng.integers(3))))
        _, g = grad_input(net, x, loss)
        fd = finite_diff_grad(lambda z: grad_input(net, z, loss)[0], x)
        assert rel_err(g, fd) < 1e-4


def test_convnet_grad_matches_finite_differences():
    rng = np.random.default_rng(12)
    for trial in range(3):
        net = random_convnet(rng, side=6, num_classes=2)
        x = sample_safe_input(net, rng)
        loss = LossSpec(base=CrossEntropy(target=1))
        _, g = grad_input(net, x, loss)
        fd = finite_diff_grad(lambda z: grad_input(net, z, loss)[0], x)
        assert rel_err(g, fd) < 1e-4


def test_single_affine_closed_form():
    rng = np.random.default_rng(13)
    net = build_network((5,), [affine(out_dim=3)], seed=2)
    x = rng.uniform(0, 1, size=5)
    c = 2
    _, g = grad_input(net, x, LossSpec(base=CrossEntropy(target=c)))
    w = net.params[0]["W"]
    p = softmax(x @ w + net.params[0]["b"])
    onehot = np.zeros(3)
    onehot[c] = 1.0
    assert np.allclose(g, w @ (p - onehot), atol=1e-12)


def test_cw_margin_value_and_grad():
    net = build_network((4,), [affine(out_dim=3)], seed=4)
    x = np.array([0.2, 0.8, 0.5, 0.1])
    loss = LossSpec(base=CwMargin(target=0, kappa=0.5))
    value, g = grad_input(net, x, loss)
    logits = forward(net, x).logits
    rival = max(logits[1], logits[2])
    assert np.isclose(value, max(rival - logits[0], -0.5))
    fd = finite_diff_grad(lambda z: grad_input(net, z, loss)[0], x)
    assert rel_err(g, fd) < 1e-4


def test_cw_margin_clamped_region_zero_grad():
    net = build_network((2,), [affine(out_dim=2)], seed=0)
    net = net.with_params([{"W": np.eye(2), "b": np.zeros(2)}])
    # logits (5, 0): margin toward target 0 is -5, clamped at kappa=1
    _, g = grad_input(net, np.array([5.0, 0.0]), LossSpec(base=CwMargin(target=0, kappa=1.0)))
    assert np.all(g == 0.0)


def test_penultimate_binary_closed_form():
    rng = np.random.default_rng(21)
    for _ in range(5):
        net = random_mlp(rng, in_dim=5, num_classes=2)
        x = rng.uniform(0, 1, size=5)
        g = grad_penultimate(net, x, LossSpec(base=CrossEntropy(target=1)))
        w = net.params[-1]["W"]
        p = forward(net, x).probs
        want = (1.0 - p[1]) * (w[:, 0] - w[:, 1])
        assert np.max(np.abs(g - want)) < 1e-10


def test_penultimate_multiclass_closed_form():
    rng = np.random.default_rng(22)
    for _ in range(5):
        net = random_mlp(rng, in_dim=6, num_classes=4)
        x = rng.uniform(0, 1, size=6)
        c = int(rng.integers(4))
        g = grad_penultimate(net, x, LossSpec(base=CrossEntropy(target=c)))
        w = net.params[-1]["W"]
        p = forward(net, x).probs
        want = sum(p[k] * (w[:, k] - w[:, c]) for k in range(4) if k != c)
        assert np.max(np.abs(g - want)) < 1e-10


def test_penultimate_zero_when_probs_hit_onehot():
    net = build_network((2,), [affine(out_dim=4), relu(), affine(out_dim=2)], seed=1)
    # crank the final layer so softmax saturates to exactly (0, 1)
    params = [dict(p) if p else None for p in net.params]
    params[2] = {"W": np.array([[0.0, 800.0], [0.0, 800.0], [0.0, 800.0], [0.0, 800.0]]),
                 "b": np.array([0.0, 80.0])}
    net = net.with_params(params)
    p = forward(net, np.array([0.9, 0.9])).probs
    assert p[1] == 1.0
    g = grad_penultimate(net, np.array([0.9, 0.9]), LossSpec(base=CrossEntropy(target=1)))
    assert np.all(g == 0.0)


def test_penultimate_requires_hidden_layer():
    net = build_network((3,), [affine(out_dim=2)], seed=0)
    with pytest.raises(ShapeError):
        grad_penultimate(net, np.zeros(3), LossSpec(base=CrossEntropy(target=0)))


def test_feature_push_term_gradient():
    rng = np.random.default_rng(31)
    net = random_convnet(rng, side=6, num_classes=2)
    x = sample_safe_input(net, rng)
    loss = LossSpec(base=None, extras=((FeaturePushTerm(layer=1, direction="up"), 1.0),))
    _, g = grad_input(net, x, loss)
    fd = finite_diff_grad(lambda z: grad_input(net, z, loss)[0], x)
    assert rel_err(g, fd) < 1e-4


def test_extras_add_to_base():
    rng = np.random.default_rng(32)
    net = random_mlp(rng, in_dim=5, num_classes=3)
    x = sample_safe_input(net, rng)
    base = LossSpec(base=CrossEntropy(target=0))
    extra = (FeaturePushTerm(layer=0, direction="down"), 0.7)
    both = base.with_extras(extra)
    v0, g0 = grad_input(net, x, base)
    ve, ge = grad_input(net, x, LossSpec(base=None, extras=(extra,)))
    vb, gb = grad_input(net, x, both)
    assert np.isclose(vb, v0 + ve, atol=1e-12)
    assert np.allclose(gb, g0 + ge, atol=1e-12)
