"""Desk-scale adversarial robustness laboratory.

Small, self-trained feedforward networks with exact input gradients, the
classic L-inf attack family, a feature-space hiding add-on driven by
per-layer Gaussian mixtures, a suite of reactive detectors, and a
reproducible experiment harness tying them together.
"""

__version__ = "0.1.0"

from .errors import AdvlabError, ConfigError, ShapeError

__all__ = ["AdvlabError", "ConfigError", "ShapeError", "__version__"]
