"""Shared test utilities: small random networks and a finite-difference oracle."""

import numpy as np

from advlab.nn import build_network, affine, avgpool2d, conv2d, dropout, flatten, relu
from advlab.nn.network import forward_with_caches


def finite_diff_grad(f, x, h=1e-5):
    """Central finite differences of a scalar function of an array."""
    x = np.asarray(x, dtype=np.float64)
    g = np.zeros_like(x)
    flat = x.ravel()
    gf = g.ravel()
    for i in range(flat.size):
        keep = flat[i]
        flat[i] = keep + h
        fp = f(x)
        flat[i] = keep - h
        fm = f(x)
        flat[i] = keep
        gf[i] = (fp - fm) / (2 * h)
    return g


def rel_err(got, want):
    """Max abs error normalized by the oracle's scale."""
    got = np.asarray(got)
    want = np.asarray(want)
    scale = np.max(np.abs(want)) + 1e-12
    return float(np.max(np.abs(got - want)) / scale)


def random_mlp(rng, in_dim, num_classes, max_hidden=64, with_dropout=False):
    specs = []
    depth = int(rng.integers(1, 4))
    for _ in range(depth):
        width = int(rng.integers(4, max_hidden + 1))
        specs += [affine(out_dim=width), relu()]
        if with_dropout and rng.random() < 0.3:
            specs.append(dropout(float(rng.uniform(0.1, 0.5))))
    specs.append(affine(out_dim=num_classes))
    return build_network((in_dim,), specs, seed=int(rng.integers(1 << 30)))


def random_convnet(rng, side, num_classes):
    ch = int(rng.integers(2, 5))
    specs = [conv2d(None, ch, 3, padding=1), relu(), avgpool2d(2),
             flatten(), affine(out_dim=int(rng.integers(6, 16))), relu(),
             affine(out_dim=num_classes)]
    return build_network((1, side, side), specs, seed=int(rng.integers(1 << 30)))


def sample_safe_input(net, rng, margin=1e-3, tries=50):
    """Input whose ReLU pre-activations all sit at least `margin` from 0."""
    for _ in range(tries):
        x = rng.uniform(0.05, 0.95, size=net.input_shape)
        if relu_margin(net, x) > margin:
            return x
    raise AssertionError("could not find a ReLU-safe input")


def relu_margin(net, x):
    trace, _ = forward_with_caches(net, x)
    worst = np.inf
    prev = np.asarray(x, dtype=np.float64)[None]
    for spec, act in zip(net.layers, trace.activations):
        if spec.kind == "relu":
            worst = min(worst, float(np.min(np.abs(prev))))
        prev = act
    return worst
