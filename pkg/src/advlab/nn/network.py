"""Sequential network container with exact reverse-mode gradients.

The engine is batch-first: a single sample is promoted to a batch of one and
squeezed on the way out, so single and batched evaluation share one code
path (and therefore one rounding behaviour). Gradients are available with
respect to the input, every intermediate activation, and all parameters;
additive loss terms may inject gradient at any layer's output, which is how
feature-space objectives ride along with the classification loss.
"""

from dataclasses import dataclass, replace

import numpy as np

from ..errors import ShapeError
from .layers import LayerSpec, backward_layer, forward_layer, infer_output_shape, init_params


@dataclass(frozen=True)
class Network:
    input_shape: tuple
    layers: tuple
    params: tuple  # per-layer dict {"W", "b"} or None
    num_classes: int
    train_losses: tuple | None = None

    def with_params(self, params, train_losses=None) -> "Network":
        return replace(self, params=tuple(params), train_losses=train_losses)

    @property
    def final_affine(self) -> dict:
        return self.params[-1]

    @property
    def penultimate_index(self) -> int:
        """Index of the last hidden layer (just below the final affine)."""
        if len(self.layers) < 2:
            raise ShapeError("network has no penultimate layer")
        return len(self.layers) - 2


@dataclass(frozen=True)
class ForwardTrace:
    activations: tuple  # post-layer outputs, one per layer, batch-first
    batch_probs: np.ndarray
    batched: bool

    @property
    def batch_logits(self) -> np.ndarray:
        return self.activations[-1]

    @property
    def logits(self) -> np.ndarray:
        return self.batch_logits if self.batched else self.batch_logits[0]

    @property
    def probs(self) -> np.ndarray:
        return self.batch_probs if self.batched else self.batch_probs[0]


def build_network(input_shape, layer_specs, seed: int = 0) -> Network:
    """Resolve shapes, validate the stack and initialize parameters.

    The final layer must be an affine producing the class logits.
    """
    input_shape = tuple(int(d) for d in input_shape)
    resolved = []
    shape = input_shape
    for i, spec in enumerate(layer_specs):
        spec = _resolve(spec, shape, i)
        out_shape = infer_output_shape(spec, shape, i)
        resolved.append(spec)
        shape = out_shape
    if not resolved or resolved[-1].kind != "affine":
        raise ShapeError("final layer must be affine (produces the class logits)")
    num_classes = resolved[-1].out_dim
    params = tuple(init_params(s, seed, i) for i, s in enumerate(resolved))
    return Network(input_shape=input_shape, layers=tuple(resolved),
                   params=params, num_classes=num_classes)


def _resolve(spec: LayerSpec, in_shape, index) -> LayerSpec:
    if spec.kind == "affine" and spec.in_dim is None:
        if len(in_shape) != 1:
            raise ShapeError(f"layer {index} (affine): expects a vector input, got {in_shape}")
        return replace(spec, in_dim=in_shape[0])
    if spec.kind == "conv2d" and spec.in_channels is None:
        if len(in_shape) != 3:
            raise ShapeError(f"layer {index} (conv2d): expects (C, H, W) input, got {in_shape}")
        return replace(spec, in_channels=in_shape[0])
    return spec


def _as_batch(net: Network, x: np.ndarray):
    x = np.asarray(x, dtype=np.float64)
    if x.shape == net.input_shape:
        return x[None], False
    if x.shape[1:] == net.input_shape:
        return x, True
    raise ShapeError(f"input shape {x.shape} does not match network input {net.input_shape}")


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def forward_with_caches(net: Network, x, mode: str = "eval", rng_seed: int = 0):
    xb, batched = _as_batch(net, x)
    acts, caches = [], []
    h = xb
    for i, (spec, p) in enumerate(zip(net.layers, net.params)):
        h, cache = forward_layer(spec, p, h, mode, rng_seed, i)
        acts.append(h)
        caches.append(cache)
    trace = ForwardTrace(activations=tuple(acts), batch_probs=softmax(acts[-1]),
                         batched=batched)
    return trace, caches


def forward(net: Network, x, mode: str = "eval", rng_seed: int = 0) -> ForwardTrace:
    """Evaluate the network, returning all layer activations and softmax probs.

    `x` may be a single sample of shape ``net.input_shape`` or a batch with a
    leading axis. Dropout is active only in train mode and is seeded per
    (rng_seed, layer, row), making the call a pure function of its arguments.
    """
    trace, _ = forward_with_caches(net, x, mode, rng_seed)
    return trace


def backward(net: Network, caches, dlogits, injections=None):
    """Backpropagate dlogits (plus per-layer injected gradients).

    injections maps layer index -> gradient with respect to that layer's
    output. Returns (dx, param_grads, layer_grads) where layer_grads[l] is
    the total gradient at activation l including its injection.
    """
    injections = injections or {}
    n_layers = len(net.layers)
    param_grads = [None] * n_layers
    layer_grads = [None] * n_layers
    g = np.asarray(dlogits, dtype=np.float64)
    for l in range(n_layers - 1, -1, -1):
        inj = injections.get(l)
        if inj is not None:
            g = g + inj
        layer_grads[l] = g
        g, pg = backward_layer(net.layers[l], net.params[l], caches[l], g)
        param_grads[l] = pg
    return g, param_grads, layer_grads


def predict(net: Network, x) -> np.ndarray:
    """Argmax class per sample (ties broken toward the lower index)."""
    trace = forward(net, x)
    out = np.argmax(trace.batch_logits, axis=-1)
    return out if trace.batched else int(out[0])


def channel_mean_features(trace: ForwardTrace, layer: int) -> np.ndarray:
    """Spatial mean per channel of a layer's activation.

    Map activations (C, H, W) give a length-C vector; vector activations are
    returned as-is.
    """
    if not (-len(trace.activations) <= layer < len(trace.activations)):
        raise ShapeError(f"layer index {layer} out of range for {len(trace.activations)} layers")
    a = trace.activations[layer]
    if a.ndim == 4:
        f = a.mean(axis=(2, 3))
    elif a.ndim == 2:
        f = a
    else:
        raise ShapeError(f"layer {layer}: unexpected activation rank {a.ndim}")
    return f if trace.batched else f[0]


def grad_input(net: Network, x, loss):
    """Value and gradient of a composite loss with respect to the input.

    Returns (loss_value, grad) where grad has the shape of `x`. For batched
    input the value is a length-N vector and grad is batched. Evaluation is
    in eval mode (dropout off), which is what every attack consumes.
    """
    trace, caches = forward_with_caches(net, x)
    values, dlogits, injections = loss.value_and_grads(trace)
    dx, _, _ = backward(net, caches, dlogits, injections)
    if trace.batched:
        return values, dx
    return float(values[0]), dx[0]


def grad_penultimate(net: Network, x, loss) -> np.ndarray:
    """Gradient of the loss at the last hidden activation before the logits.

    For cross-entropy toward class c this equals sum_k (p_k - y_k) w_{.k}
    exactly (the final affine's backward is that very expression).
    """
    pen = net.penultimate_index
    trace, caches = forward_with_caches(net, x)
    _, dlogits, injections = loss.value_and_grads(trace)
    _, _, layer_grads = backward(net, caches, dlogits, injections)
    g = layer_grads[pen]
    return g if trace.batched else g[0]
