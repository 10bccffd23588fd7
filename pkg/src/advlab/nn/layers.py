"""Layer specifications and their forward/backward kernels.

Every kernel operates on a batch (leading axis N) of 64-bit float arrays and
returns both the output and whatever it needs to run the backward pass, so
forward-for-gradient is a single code path shared by training, attacks and
plain evaluation. ReLU uses the subgradient 0 at exactly 0; dropout is
inverted (mask scaled by 1/(1-rate) at train time, identity in eval mode).
"""

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeError
from ..rng import rng_for

KINDS = ("affine", "conv2d", "relu", "avgpool2d", "flatten", "dropout")


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    in_dim: int | None = None
    out_dim: int | None = None
    in_channels: int | None = None
    out_channels: int | None = None
    kernel: int | None = None
    stride: int | None = None
    padding: int | None = None
    size: int | None = None
    rate: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ShapeError(f"unknown layer kind {self.kind!r}")
        if self.kind == "dropout" and not (0.0 <= self.rate < 1.0):
            raise ShapeError(f"dropout rate must lie in [0, 1), got {self.rate}")
        if self.kind == "conv2d" and self.kernel is not None and self.kernel < 1:
            raise ShapeError("conv2d kernel must be >= 1")

    def has_params(self) -> bool:
        return self.kind in ("affine", "conv2d")


def affine(in_dim: int | None = None, out_dim: int | None = None) -> LayerSpec:
    return LayerSpec("affine", in_dim=in_dim, out_dim=out_dim)


def conv2d(in_channels: int | None, out_channels: int, kernel: int,
           stride: int = 1, padding: int = 0) -> LayerSpec:
    return LayerSpec("conv2d", in_channels=in_channels, out_channels=out_channels,
                     kernel=kernel, stride=stride, padding=padding)


def relu() -> LayerSpec:
    return LayerSpec("relu")


def avgpool2d(size: int) -> LayerSpec:
    return LayerSpec("avgpool2d", size=size)


def flatten() -> LayerSpec:
    return LayerSpec("flatten")


def dropout(rate: float) -> LayerSpec:
    return LayerSpec("dropout", rate=rate)


def infer_output_shape(spec: LayerSpec, in_shape: tuple, index: int) -> tuple:
    """Output shape of `spec` for a single (unbatched) input shape.

    Raises ShapeError naming the offending layer on any mismatch.
    """
    where = f"layer {index} ({spec.kind})"
    if spec.kind == "affine":
        if len(in_shape) != 1:
            raise ShapeError(f"{where}: expects a vector input, got shape {in_shape}")
        if spec.in_dim is not None and spec.in_dim != in_shape[0]:
            raise ShapeError(f"{where}: in_dim {spec.in_dim} != incoming {in_shape[0]}")
        return (spec.out_dim,)
    if spec.kind == "conv2d":
        if len(in_shape) != 3:
            raise ShapeError(f"{where}: expects (C, H, W) input, got shape {in_shape}")
        c, h, w = in_shape
        if spec.in_channels is not None and spec.in_channels != c:
            raise ShapeError(f"{where}: in_channels {spec.in_channels} != incoming {c}")
        k, s, p = spec.kernel, spec.stride, spec.padding
        ho = (h + 2 * p - k) // s + 1
        wo = (w + 2 * p - k) // s + 1
        if ho < 1 or wo < 1 or (h + 2 * p - k) % s or (w + 2 * p - k) % s:
            raise ShapeError(f"{where}: kernel {k}/stride {s}/pad {p} do not tile {h}x{w}")
        return (spec.out_channels, ho, wo)
    if spec.kind == "relu" or spec.kind == "dropout":
        return in_shape
    if spec.kind == "avgpool2d":
        if len(in_shape) != 3:
            raise ShapeError(f"{where}: expects (C, H, W) input, got shape {in_shape}")
        c, h, w = in_shape
        q = spec.size
        if h % q or w % q:
            raise ShapeError(f"{where}: pool size {q} does not divide {h}x{w}")
        return (c, h // q, w // q)
    if spec.kind == "flatten":
        return (int(np.prod(in_shape)),)
    raise ShapeError(f"{where}: unhandled kind")


def init_params(spec: LayerSpec, seed: int, index: int) -> dict | None:
    """He-normal weights, zero biases; deterministic per (seed, index)."""
    if not spec.has_params():
        return None
    rng = rng_for(seed, "init", index)
    if spec.kind == "affine":
        scale = np.sqrt(2.0 / spec.in_dim)
        w = rng.normal(0.0, scale, size=(spec.in_dim, spec.out_dim))
        b = np.zeros(spec.out_dim)
        return {"W": w, "b": b}
    fan_in = spec.in_channels * spec.kernel * spec.kernel
    scale = np.sqrt(2.0 / fan_in)
    w = rng.normal(0.0, scale, size=(spec.out_channels, spec.in_channels,
                                     spec.kernel, spec.kernel))
    b = np.zeros(spec.out_channels)
    return {"W": w, "b": b}


# ---------------------------------------------------------------------------
# kernels: each returns (output, cache); backward returns (dx, dparams)

def _im2col(x, k, stride, pad):
    n, c, h, w = x.shape
    if pad:
        x = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    ho = (h + 2 * pad - k) // stride + 1
    wo = (w + 2 * pad - k) // stride + 1
    cols = np.empty((n, c, k, k, ho, wo), dtype=x.dtype)
    for i in range(k):
        for j in range(k):
            cols[:, :, i, j] = x[:, :, i:i + stride * ho:stride, j:j + stride * wo:stride]
    return cols.reshape(n, c * k * k, ho * wo), ho, wo


def _col2im(dcols, x_shape, k, stride, pad):
    n, c, h, w = x_shape
    hp, wp = h + 2 * pad, w + 2 * pad
    ho = (hp - k) // stride + 1
    wo = (wp - k) // stride + 1
    dx = np.zeros((n, c, hp, wp), dtype=dcols.dtype)
    dcols = dcols.reshape(n, c, k, k, ho, wo)
    for i in range(k):
        for j in range(k):
            dx[:, :, i:i + stride * ho:stride, j:j + stride * wo:stride] += dcols[:, :, i, j]
    if pad:
        dx = dx[:, :, pad:-pad, pad:-pad]
    return dx


def forward_layer(spec: LayerSpec, params, x, mode: str, seed: int, index: int):
    if spec.kind == "affine":
        return x @ params["W"] + params["b"], x
    if spec.kind == "conv2d":
        cols, ho, wo = _im2col(x, spec.kernel, spec.stride, spec.padding)
        wmat = params["W"].reshape(spec.out_channels, -1)
        out = np.einsum("fk,nkp->nfp", wmat, cols).reshape(x.shape[0], spec.out_channels, ho, wo)
        out += params["b"][None, :, None, None]
        return out, (x.shape, cols)
    if spec.kind == "relu":
        return np.maximum(x, 0.0), x
    if spec.kind == "avgpool2d":
        n, c, h, w = x.shape
        q = spec.size
        out = x.reshape(n, c, h // q, q, w // q, q).mean(axis=(3, 5))
        return out, x.shape
    if spec.kind == "flatten":
        return x.reshape(x.shape[0], -1), x.shape
    if spec.kind == "dropout":
        if mode != "train":
            return x, None
        keep = 1.0 - spec.rate
        mask = np.empty_like(x)
        for row in range(x.shape[0]):
            r = rng_for(seed, "dropout", index, row)
            mask[row] = (r.random(x.shape[1:]) >= spec.rate) / keep
        return x * mask, mask
    raise ShapeError(f"layer {index}: unhandled kind {spec.kind}")


def backward_layer(spec: LayerSpec, params, cache, grad):
    """Gradient wrt the layer input and its parameters (or None)."""
    if spec.kind == "affine":
        x = cache
        dx = grad @ params["W"].T
        return dx, {"W": x.T @ grad, "b": grad.sum(axis=0)}
    if spec.kind == "conv2d":
        x_shape, cols = cache
        n = x_shape[0]
        f = spec.out_channels
        gmat = grad.reshape(n, f, -1)
        dw = np.einsum("nfp,nkp->fk", gmat, cols).reshape(params["W"].shape)
        db = gmat.sum(axis=(0, 2))
        wmat = params["W"].reshape(f, -1)
        dcols = np.einsum("fk,nfp->nkp", wmat, gmat)
        dx = _col2im(dcols, x_shape, spec.kernel, spec.stride, spec.padding)
        return dx, {"W": dw, "b": db}
    if spec.kind == "relu":
        return grad * (cache > 0.0), None
    if spec.kind == "avgpool2d":
        n, c, h, w = cache
        q = spec.size
        g = grad[:, :, :, None, :, None] / (q * q)
        return np.broadcast_to(g, (n, c, h // q, q, w // q, q)).reshape(n, c, h, w), None
    if spec.kind == "flatten":
        return grad.reshape(cache), None
    if spec.kind == "dropout":
        if cache is None:
            return grad, None
        return grad * cache, None
    raise ShapeError(f"unhandled kind {spec.kind}")
