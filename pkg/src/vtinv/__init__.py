"""Phonetically constrained acoustic-to-articulatory inversion toolkit."""

from .artic import (
    ArticulatoryVector,
    AreaFunction,
    ConstraintAxes,
    ModelConfig,
    constraint_axes,
    constriction_profile,
    is_valid,
    to_area_function,
)
from .acoustics import (
    AcousticConfig,
    FormantTriple,
    bark_distance,
    bark_to_hz,
    formants,
    hz_to_bark,
    transfer_magnitude,
)

__all__ = [
    "ArticulatoryVector",
    "AreaFunction",
    "ConstraintAxes",
    "ModelConfig",
    "constraint_axes",
    "constriction_profile",
    "is_valid",
    "to_area_function",
    "AcousticConfig",
    "FormantTriple",
    "bark_distance",
    "bark_to_hz",
    "formants",
    "hz_to_bark",
    "transfer_magnitude",
]

__version__ = "0.1.0"
