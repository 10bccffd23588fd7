"""Mini-batch gradient descent training with optional momentum.

Deliberately plain: the priority is bit-for-bit determinism given the seed,
not training speed. Shuffling, dropout masks and everything else derive from
(config seed, epoch, ...) so two runs with the same inputs produce identical
parameters.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import AdvlabError
from ..rng import rng_for
from .losses import CrossEntropy, LossSpec
from .network import Network, backward, forward_with_caches


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    batch_size: int = 64
    lr: float = 0.05
    momentum: float = 0.9
    weight_decay: float = 0.0
    seed: int = 0


def train_classifier(net: Network, data, cfg: TrainConfig) -> Network:
    """Train on (images, labels), returning a new network.

    `data` is any object with .images (N, ...) in [0,1] and .labels (N,)
    ints in [0, K). Per-epoch mean training loss is recorded on the returned
    network's train_losses. Zero epochs returns the parameters unchanged.
    """
    images = np.asarray(data.images, dtype=np.float64)
    labels = np.asarray(data.labels, dtype=np.intp)
    n = images.shape[0]
    if n == 0:
        raise AdvlabError("cannot train on an empty dataset")
    if labels.min(initial=0) < 0 or labels.max(initial=0) >= net.num_classes:
        raise AdvlabError("labels out of range for the network's class count")

    params = [None if p is None else {k: v.copy() for k, v in p.items()} for p in net.params]
    velocity = [None if p is None else {k: np.zeros_like(v) for k, v in p.items()} for p in params]
    work = net.with_params(params)
    losses = []
    for epoch in range(cfg.epochs):
        order = rng_for(cfg.seed, "shuffle", epoch).permutation(n)
        epoch_loss = 0.0
        for bi, start in enumerate(range(0, n, cfg.batch_size)):
            idx = order[start:start + cfg.batch_size]
            xb, yb = images[idx], labels[idx]
            mask_seed = rng_for(cfg.seed, "dropseed", epoch, bi).integers(1 << 62)
            trace, caches = forward_with_caches(work, xb, mode="train", rng_seed=int(mask_seed))
            loss = LossSpec(base=CrossEntropy(yb))
            values, dlogits, injections = loss.value_and_grads(trace)
            epoch_loss += float(values.sum())
            _, grads, _ = backward(work, caches, dlogits / len(idx), injections)
            for p, v, g in zip(params, velocity, grads):
                if p is None:
                    continue
                for key in p:
                    step = g[key]
                    if cfg.weight_decay and key == "W":
                        step = step + cfg.weight_decay * p[key]
                    v[key] = cfg.momentum * v[key] - cfg.lr * step
                    p[key] += v[key]
        losses.append(epoch_loss / n)
    return work.with_params(params, train_losses=tuple(losses))


def accuracy(net: Network, data) -> float:
    from .network import predict

    pred = predict(net, np.asarray(data.images, dtype=np.float64))
    return float(np.mean(pred == np.asarray(data.labels)))
