"""Composite losses: a base classification term plus weighted extras.

A loss exposes value_and_grads(trace) -> (values, dlogits, injections):
per-sample values, the gradient at the logits, and a dict of gradients to
inject at interior layer outputs. Extras (feature-space terms) implement the
same protocol minus the dlogits and are summed onto the base.

The target-class column of the cross-entropy gradient is computed as the
negative sum of the other class probabilities rather than p_c - 1; the two
are equal in exact arithmetic but the former keeps the correct sign when
p_c rounds to 1, which the gradient-direction probes rely on.
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import ShapeError


def _target_rows(target, n):
    t = np.asarray(target, dtype=np.intp)
    if t.ndim == 0:
        t = np.full(n, int(t), dtype=np.intp)
    if t.shape != (n,):
        raise ShapeError(f"target shape {t.shape} does not match batch {n}")
    return t


@dataclass(frozen=True)
class CrossEntropy:
    """-log p_target."""

    target: object  # int or per-sample integer array

    def value_and_dlogits(self, trace):
        logits = trace.batch_logits
        n, k = logits.shape
        t = _target_rows(self.target, n)
        zmax = logits.max(axis=1, keepdims=True)
        lse = np.log(np.exp(logits - zmax).sum(axis=1)) + zmax[:, 0]
        values = lse - logits[np.arange(n), t]
        dlogits = trace.batch_probs.copy()
        others = dlogits.sum(axis=1) - dlogits[np.arange(n), t]
        dlogits[np.arange(n), t] = -others
        return values, dlogits


@dataclass(frozen=True)
class CwMargin:
    """max(largest non-target logit - target logit, -kappa).

    Minimizing drives the target logit above every other by kappa. Inside
    the clamp the loss is constant and the gradient vanishes.
    """

    target: object
    kappa: float = 0.0

    def value_and_dlogits(self, trace):
        logits = trace.batch_logits
        n, k = logits.shape
        if k < 2:
            raise ShapeError("cw margin needs at least two classes")
        t = _target_rows(self.target, n)
        rows = np.arange(n)
        masked = logits.copy()
        masked[rows, t] = -np.inf
        rival = np.argmax(masked, axis=1)
        margin = logits[rows, rival] - logits[rows, t]
        values = np.maximum(margin, -self.kappa)
        dlogits = np.zeros_like(logits)
        live = margin > -self.kappa
        dlogits[rows[live], rival[live]] = 1.0
        dlogits[rows[live], t[live]] = -1.0
        return values, dlogits


@dataclass(frozen=True)
class FeaturePushTerm:
    """Mean activation of one layer, signed; the stress-test objective.

    direction="down" is the raw mean (minimizing drives features down);
    direction="up" negates it.
    """

    layer: int
    direction: str = "down"

    def value_and_grads(self, trace):
        a = trace.activations[self.layer]
        size = int(np.prod(a.shape[1:]))
        axes = tuple(range(1, a.ndim))
        sign = 1.0 if self.direction == "down" else -1.0
        values = sign * a.mean(axis=axes)
        grad = np.full_like(a, sign / size)
        return values, {self.layer: grad}


@dataclass(frozen=True)
class LossSpec:
    """base (or None) plus weighted additive extras."""

    base: object | None = None
    extras: tuple = field(default_factory=tuple)  # of (term, weight)

    def with_extras(self, *extra_pairs) -> "LossSpec":
        return LossSpec(base=self.base, extras=self.extras + tuple(extra_pairs))

    def value_and_grads(self, trace):
        n, k = trace.batch_logits.shape
        if self.base is not None:
            values, dlogits = self.base.value_and_dlogits(trace)
        else:
            values = np.zeros(n)
            dlogits = np.zeros((n, k))
        injections = {}
        for term, weight in self.extras:
            tv, tg = term.value_and_grads(trace)
            values = values + weight * tv
            for layer, g in tg.items():
                cur = injections.get(layer)
                injections[layer] = weight * g if cur is None else cur + weight * g
        return values, dlogits, injections
