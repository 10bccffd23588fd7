"""Synthetic out-of-distribution lesions.

Each lesion is an ellipse warped by a low-frequency random displacement
field, filled with Gaussian-smoothed salt noise around the local mean, and
blended into the image with an in-mask ramp so that every pixel outside the
mask stays bit-identical. The four size classes map to radius ranges as
fractions of the image side; a radius never drops below one pixel.
"""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import AdvlabError
from .rng import rng_for

SIZE_CLASSES = {
    "tiny": (0.02, 0.04),
    "small": (0.04, 0.08),
    "medium": (0.08, 0.14),
    "large": (0.14, 0.22),
}

_MAX_TRIES = 100


@dataclass(frozen=True)
class LesionSpec:
    size_class: str
    quantity: int
    seed: int = 0

    def __post_init__(self):
        if self.size_class not in SIZE_CLASSES:
            raise AdvlabError(f"unknown size class {self.size_class!r}")
        if self.quantity < 1:
            raise AdvlabError("quantity must be >= 1")


def radius_bounds_px(size_class: str, side: int) -> tuple:
    lo, hi = SIZE_CLASSES[size_class]
    return max(lo * side, 1.0), max(hi * side, 1.0)


def _displacement(rng, shape, amp):
    coarse = rng.uniform(-amp, amp, size=(2, 4, 4))
    coords = np.mgrid[0:shape[0], 0:shape[1]].astype(np.float64)
    coords[0] *= 3.0 / max(shape[0] - 1, 1)
    coords[1] *= 3.0 / max(shape[1] - 1, 1)
    dy = ndimage.map_coordinates(coarse[0], coords, order=1)
    dx = ndimage.map_coordinates(coarse[1], coords, order=1)
    return dy, dx


def _deformed_ellipse(rng, side, r_lo, r_hi):
    a = rng.uniform(r_lo, r_hi)
    b = rng.uniform(r_lo, r_hi)
    theta = rng.uniform(0, np.pi)
    margin = max(a, b) * 1.3 + 1.0
    if 2 * margin >= side:
        return None
    cy = rng.uniform(margin, side - margin)
    cx = rng.uniform(margin, side - margin)
    amp = 0.3 * 0.5 * (a + b)
    dy, dx = _displacement(rng, (side, side), amp)
    yy, xx = np.mgrid[0:side, 0:side].astype(np.float64)
    py = yy + dy - cy
    px = xx + dx - cx
    ct, st = np.cos(theta), np.sin(theta)
    u = (px * ct + py * st) / a
    v = (-px * st + py * ct) / b
    mask = (u * u + v * v) <= 1.0
    if not mask.any():
        return None
    return mask


def synth_lesions(image: np.ndarray, spec: LesionSpec):
    """Insert `spec.quantity` non-overlapping lesions; returns (ood_image, mask).

    Raises if a lesion cannot be placed within 100 rejection-sampling tries.
    """
    img = np.asarray(image, dtype=np.float64)
    squeeze = img.ndim == 2
    if squeeze:
        img = img[None]
    if img.min() < 0.0 or img.max() > 1.0:
        raise AdvlabError("image values must lie in [0, 1]")
    side = img.shape[-1]
    if img.shape[-2] != side:
        raise AdvlabError("lesion synthesis expects square images")
    r_lo, r_hi = radius_bounds_px(spec.size_class, side)
    rng = rng_for(spec.seed, "lesions")

    union = np.zeros((side, side), dtype=bool)
    out = img.copy()
    for n in range(spec.quantity):
        placed = None
        for _ in range(_MAX_TRIES):
            cand = _deformed_ellipse(rng, side, r_lo, r_hi)
            if cand is not None and not (cand & union).any():
                placed = cand
                break
        if placed is None:
            raise AdvlabError(
                f"could not place lesion {n + 1}/{spec.quantity} ({spec.size_class}) "
                f"after {_MAX_TRIES} tries; try a smaller quantity")
        union |= placed
        _fill_lesion(out, placed, rng)

    if squeeze:
        out = out[0]
    return out, union


def _fill_lesion(out, mask, rng):
    side = mask.shape[0]
    salt = (rng.random((side, side)) < 0.5).astype(np.float64)
    sigma = rng.uniform(0.5, 2.0)
    tex = ndimage.gaussian_filter(salt, sigma)
    lo, hi = tex.min(), tex.max()
    tex = (tex - lo) / (hi - lo) if hi > lo else np.zeros_like(tex)
    contrast = rng.uniform(0.2, 0.5) * (1.0 if rng.random() < 0.5 else -1.0)
    ramp = ndimage.gaussian_filter(mask.astype(np.float64), 1.0)
    peak = ramp[mask].max()
    ramp = np.clip(ramp / peak, 0.0, 1.0) if peak > 0 else mask.astype(np.float64)
    for ch in range(out.shape[0]):
        base = out[ch][mask].mean()
        fill = np.clip(base + contrast * (0.4 + 0.6 * tex), 0.0, 1.0)
        blended = out[ch] * (1.0 - ramp) + fill * ramp
        out[ch][mask] = np.clip(blended[mask], 0.0, 1.0)
