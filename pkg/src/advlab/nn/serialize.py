"""Versioned JSON persistence for networks.

Numbers are serialized with Python's repr (shortest round-trip), so every
finite 64-bit float survives a save/load cycle exactly.
"""

import json
from dataclasses import asdict

import numpy as np

from ..errors import ParseError
from .layers import LayerSpec
from .network import Network

FORMAT_VERSION = 1


def _tensor_doc(arr: np.ndarray) -> dict:
    if not np.all(np.isfinite(arr)):
        raise ParseError("refusing to serialize non-finite parameter tensor")
    return {"shape": list(arr.shape), "data": [float(v) for v in arr.ravel()]}


def _tensor_load(doc) -> np.ndarray:
    arr = np.asarray(doc["data"], dtype=np.float64).reshape(doc["shape"])
    if not np.all(np.isfinite(arr)):
        raise ParseError("non-finite value in stored tensor")
    return arr


def network_to_doc(net: Network) -> dict:
    layers = []
    for spec in net.layers:
        d = {k: v for k, v in asdict(spec).items() if v is not None}
        layers.append(d)
    params = [None if p is None else {k: _tensor_doc(v) for k, v in p.items()}
              for p in net.params]
    return {
        "format_version": FORMAT_VERSION,
        "input_shape": list(net.input_shape),
        "num_classes": net.num_classes,
        "layers": layers,
        "params": params,
    }


def network_from_doc(doc) -> Network:
    if doc.get("format_version") != FORMAT_VERSION:
        raise ParseError(f"unsupported model format_version {doc.get('format_version')!r}")
    layers = tuple(LayerSpec(**d) for d in doc["layers"])
    params = tuple(None if p is None else {k: _tensor_load(v) for k, v in p.items()}
                   for p in doc["params"])
    return Network(input_shape=tuple(doc["input_shape"]), layers=layers,
                   params=params, num_classes=int(doc["num_classes"]))


def save_network(net: Network, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(network_to_doc(net), fh, sort_keys=True)


def load_network(path) -> Network:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad model JSON in {path}: {exc}") from exc
    return network_from_doc(doc)
