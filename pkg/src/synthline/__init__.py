"""Synthline: controlled synthetic-requirements data generation.

A feature model describes every generation parameter; a validated selection
expands into atomic configurations; prompts built from those configurations
(optionally optimized by an actor-critic loop) drive an LLM gateway; the
resulting dataset is curated, measured for diversity, and persisted with a
manifest. A CLI and an HTTP service expose the whole workflow.
"""

__version__ = "0.1.0"

from synthline.feature_model import (
    AtomicConfiguration,
    ConfigSelection,
    FeatureModel,
    config_hash,
    default_feature_model,
    expand_atomic,
    parse_feature_model,
    validate_selection,
)

__all__ = [
    "AtomicConfiguration",
    "ConfigSelection",
    "FeatureModel",
    "config_hash",
    "default_feature_model",
    "expand_atomic",
    "parse_feature_model",
    "validate_selection",
    "__version__",
]
