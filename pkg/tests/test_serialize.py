"""Model JSON round-trips must be value-exact for 64-bit floats."""

import numpy as np
import pytest

from advlab.errors import ParseError
from advlab.nn import (
    affine,
    avgpool2d,
    build_network,
    conv2d,
    flatten,
    forward,
    load_network,
    relu,
    save_network,
)


def test_round_trip_value_exact(tmp_path):
    net = build_network((1, 8, 8), [conv2d(None, 4, 3, padding=1), relu(), avgpool2d(2),
                                    flatten(), affine(out_dim=10), relu(),
                                    affine(out_dim=3)], seed=9)
    # sprinkle awkward values through the parameters
    params = [None if p is None else {k: v.copy() for k, v in p.items()} for p in net.params]
    params[0]["W"].flat[0] = np.nextafter(0.1, 1.0)
    params[0]["b"][0] = -1e-308
    params[-1]["W"].flat[3] = 1e17 + 1.0
    net = net.with_params(params)
    path = tmp_path / "model.json"
    save_network(net, path)
    back = load_network(path)
    assert back.input_shape == net.input_shape
    assert back.num_classes == net.num_classes
    assert back.layers == net.layers
    for p, q in zip(net.params, back.params):
        if p is None:
            assert q is None
            continue
        assert np.array_equal(p["W"], q["W"])
        assert np.array_equal(p["b"], q["b"])
    x = np.random.default_rng(1).uniform(0, 1, size=(1, 8, 8))
    assert np.array_equal(forward(net, x).logits, forward(back, x).logits)


def test_save_is_deterministic(tmp_path):
    net = build_network((4,), [affine(out_dim=3)], seed=1)
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    save_network(net, p1)
    save_network(net, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_rejects_non_finite(tmp_path):
    net = build_network((2,), [affine(out_dim=2)], seed=0)
    params = [{k: v.copy() for k, v in net.params[0].items()}]
    params[0]["W"][0, 0] = np.inf
    with pytest.raises(ParseError):
        save_network(net.with_params(params), tmp_path / "bad.json")


def test_rejects_wrong_version(tmp_path):
    path = tmp_path / "model.json"
    path.write_text('{"format_version": 99}')
    with pytest.raises(ParseError, match="format_version"):
        load_network(path)
