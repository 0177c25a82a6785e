"""Maximal action of a white-noise functional over piecewise-linear profiles.

Exact grid dynamic programs for ``max (W - D)(h) / L``, the multiscale
operators used to analyze them, and a Monte Carlo harness.
"""

from .errors import (
    InstanceTooLargeError,
    InvalidConfigError,
    OutOfWindowError,
    SampleError,
    SchemaError,
    WnActionError,
)
from .noise import FieldConfig, NoiseField, generate_field, path_value
from .profile import HeightProfile, RescaleSpec

__version__ = "0.1.0"

__all__ = [
    "FieldConfig",
    "NoiseField",
    "generate_field",
    "path_value",
    "HeightProfile",
    "RescaleSpec",
    "WnActionError",
    "InvalidConfigError",
    "OutOfWindowError",
    "InstanceTooLargeError",
    "SampleError",
    "SchemaError",
]
